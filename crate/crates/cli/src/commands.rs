//! Subcommand implementations. Each returns a [`Report`] plus an exit code.

use std::sync::Arc;

use gibbsfield::checker::{
    verify_grf_to_mrf, verify_mrf_to_grf, verify_positivity_gibbs_form, verify_ratio_invariance,
    MrfToGrfOutcome,
};
use gibbsfield::decomposition::DEFAULT_CLIQUE_TOL;
use gibbsfield::document::JointSection;
use gibbsfield::{
    canonical_potentials, conditional_restrict, energy_from_joint, energy_table, exact_sample,
    flip_graph, gibbs_form, gibbs_joint, gibbs_run, joint_from_energy,
    joint_from_local_conditionals, local_conditionals_from_joint, minimal_clique_set,
    neighborhood_from_cliques, probability_of_constraint, EnergyTable, Error, GibbsSpec,
    JointDistribution, Model, ModelSection, Pattern, ReconstructionResult, Support,
};
use serde_json::{json, Value};

use crate::output::{fmt_g, join_labels, Report};

/// Failure of a command, mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    /// Bad input that is not a library error (exit 2).
    Input(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::GuardExceeded { .. }) => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(m) => f.write_str(m),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn pattern_json(x: &Pattern) -> Value {
    json!(x.labels())
}

pub fn info(m: &Model) -> CliResult<Report> {
    let spec = &m.spec;
    let graph = flip_graph(&m.support);
    let mut r = Report::new(vec!["key", "value"]);
    let omega = spec.pattern_count_unbounded();
    let rows: Vec<(&str, String)> = vec![
        ("site_count", spec.site_count().to_string()),
        ("alphabet_sizes", join_labels(spec.alphabet_sizes())),
        ("pattern_count", omega.to_string()),
        (
            "constraint_count",
            m.constraints.constraints().len().to_string(),
        ),
        ("support_size", m.support.len().to_string()),
        ("flip_graph_edges", graph.edges().len().to_string()),
        ("flip_graph_components", graph.component_count().to_string()),
        ("model", m.section.name().to_string()),
    ];
    for (k, v) in &rows {
        r.row(vec![k.to_string(), v.clone()]);
    }
    r.json("site_count", json!(spec.site_count()));
    r.json("alphabet_sizes", json!(spec.alphabet_sizes()));
    r.json("pattern_count", json!(omega as u64));
    r.json("constraint_count", json!(m.constraints.constraints().len()));
    r.json("support_size", json!(m.support.len()));
    r.json("flip_graph_edges", json!(graph.edges().len()));
    r.json("flip_graph_components", json!(graph.component_count()));
    r.json("model", json!(m.section.name()));
    Ok(r)
}

pub fn support(m: &Model) -> CliResult<Report> {
    let mut r = Report::new(vec!["index", "rank", "pattern"]);
    let mut members = Vec::with_capacity(m.support.len());
    for (i, (x, &rank)) in m
        .support
        .members()
        .iter()
        .zip(m.support.ranks())
        .enumerate()
    {
        r.row(vec![
            i.to_string(),
            rank.to_string(),
            join_labels(x.labels()),
        ]);
        members.push(json!({ "rank": rank, "pattern": pattern_json(x) }));
    }
    r.summary("support_size", m.support.len().to_string());
    r.json("support_size", json!(m.support.len()));
    r.json("members", Value::Array(members));
    Ok(r)
}

/// The joint on `C` defined by a document, with `ln k` and, for models
/// defined on every pattern of the field, `P(C)`.
pub struct ResolvedJoint {
    pub joint: JointDistribution,
    pub log_k: f64,
    pub probability_of_constraint: Option<f64>,
}

pub fn resolve_joint(m: &Model, component_masses: Option<&[f64]>) -> CliResult<ResolvedJoint> {
    Ok(match &m.section {
        ModelSection::Gibbs(g) => {
            let gj = gibbs_joint(g, &m.constraints)?;
            ResolvedJoint {
                joint: gj.joint,
                log_k: gj.log_k,
                probability_of_constraint: None,
            }
        }
        ModelSection::Energy(u) => {
            let gj = joint_from_energy(u, &m.constraints)?;
            let p_c = u
                .is_full()
                .then(|| probability_of_constraint(&gibbs_form(u).joint, &m.constraints));
            ResolvedJoint {
                joint: gj.joint,
                log_k: gj.log_k,
                probability_of_constraint: p_c,
            }
        }
        ModelSection::Joint(JointSection { full, distribution, .. }) => {
            let (joint, p_c) = if *full {
                (
                    conditional_restrict(distribution, &m.constraints)?,
                    Some(probability_of_constraint(distribution, &m.constraints)),
                )
            } else {
                (distribution.clone(), None)
            };
            let log_k = gibbs_form(&energy_from_joint(&joint)).log_k;
            ResolvedJoint {
                joint,
                log_k,
                probability_of_constraint: p_c,
            }
        }
        ModelSection::Conditionals(t) => match joint_from_local_conditionals(t, &m.support, component_masses)? {
            ReconstructionResult::Joint(joint) => {
                let log_k = gibbs_form(&energy_from_joint(&joint)).log_k;
                ResolvedJoint {
                    joint,
                    log_k,
                    probability_of_constraint: None,
                }
            }
            ReconstructionResult::NonIdentifiable { component_count, .. } => {
                return Err(CliError::Input(format!(
                    "NonIdentifiable: the flip graph of the constraint set has {component_count} components; \
                     the conditionals fix ratios only within each component. \
                     Pass --masses with {component_count} comma-separated component probabilities"
                )))
            }
            ReconstructionResult::InconsistentConditionals(w) => {
                return Err(CliError::Input(format!(
                    "InconsistentConditionals: log-ratios around a flip-graph cycle miss by {} \
                     (closing edge between support members {} and {} at site {})",
                    fmt_g(w.residual),
                    w.closing_edge.a,
                    w.closing_edge.b,
                    w.closing_edge.site
                )))
            }
        },
    })
}

pub fn joint(m: &Model, component_masses: Option<&[f64]>) -> CliResult<Report> {
    if component_masses.is_some() && !matches!(m.section, ModelSection::Conditionals(_)) {
        return Err(CliError::Input(
            "--masses applies only to a conditionals model".into(),
        ));
    }
    let rj = resolve_joint(m, component_masses)?;
    let s = rj.joint.support();
    let mut r = Report::new(vec!["rank", "pattern", "probability"]);
    let mut entries = Vec::with_capacity(s.len());
    for (i, p) in rj.joint.probabilities().into_iter().enumerate() {
        let x = s.member(i);
        r.row(vec![
            s.ranks()[i].to_string(),
            join_labels(x.labels()),
            fmt_g(p),
        ]);
        entries.push(json!({ "rank": s.ranks()[i], "pattern": pattern_json(x), "probability": p }));
    }
    r.summary("ln_k", fmt_g(rj.log_k));
    r.json("entries", Value::Array(entries));
    r.json("ln_k", json!(rj.log_k));
    if let Some(p) = rj.probability_of_constraint {
        r.summary("P(C)", fmt_g(p));
        r.json("probability_of_constraint", json!(p));
    }
    Ok(r)
}

/// An energy over every pattern of the field, if the model defines one.
fn full_energy(m: &Model) -> CliResult<Option<EnergyTable>> {
    Ok(match &m.section {
        ModelSection::Gibbs(g) => Some(energy_table(g, Arc::new(Support::full(&m.spec)?))),
        ModelSection::Energy(u) if u.is_full() => Some(u.clone()),
        ModelSection::Joint(j) if j.full => Some(energy_from_joint(&j.distribution)),
        _ => None,
    })
}

/// Keeps only the potentials whose clique is in the minimal clique set.
fn prune(g: &GibbsSpec) -> CliResult<GibbsSpec> {
    let keep = minimal_clique_set(g, DEFAULT_CLIQUE_TOL);
    let potentials = g
        .potentials()
        .iter()
        .filter(|p| keep.cliques().contains(p.clique()))
        .cloned()
        .collect();
    Ok(GibbsSpec::new(g.spec().clone(), potentials)?)
}

/// A Gibbs specification for the model: the gibbs section itself, or the
/// canonical decomposition of a full-domain energy.
fn gibbs_spec(m: &Model) -> CliResult<Option<GibbsSpec>> {
    if let ModelSection::Gibbs(g) = &m.section {
        return Ok(Some(g.clone()));
    }
    match full_energy(m)? {
        Some(u) => Ok(Some(prune(&canonical_potentials(&u, None)?)?)),
        None => Ok(None),
    }
}

pub fn decompose(m: &Model) -> CliResult<Report> {
    let u = full_energy(m)?.ok_or_else(|| {
        CliError::Input(format!(
            "decompose needs an energy on every pattern of the field; a {} section restricted to the \
             constraint set has no finite potential form outside it",
            m.section.name()
        ))
    })?;
    let canonical = canonical_potentials(&u, None)?;
    let g = prune(&canonical)?;
    let cliques = g.clique_set();
    let eta = neighborhood_from_cliques(&cliques);

    let mut r = Report::new(vec!["clique", "labels", "value"]);
    let mut potentials = Vec::new();
    for p in g.potentials() {
        let mut table = Vec::new();
        for (i, &v) in p.values().iter().enumerate() {
            let labels = p.clique().assignment_at(&m.spec, i);
            r.row(vec![p.clique().to_string(), join_labels(&labels), fmt_g(v)]);
            table.push(json!({ "labels": labels, "value": v }));
        }
        potentials.push(json!({ "clique": p.clique().sites(), "table": table }));
    }
    let clique_list: Vec<String> = cliques.iter().map(|c| c.to_string()).collect();
    r.summary("minimal_clique_set", clique_list.join(" "));
    for l in 0..m.spec.site_count() {
        r.summary(format!("neighbors[{l}]"), join_labels(eta.of(l)));
    }
    r.json("potentials", Value::Array(potentials));
    r.json(
        "minimal_clique_set",
        json!(cliques
            .iter()
            .map(|c| c.sites().to_vec())
            .collect::<Vec<_>>()),
    );
    r.json("neighborhoods", json!(eta.as_slices()));
    Ok(r)
}

struct Outcome {
    name: &'static str,
    passed: Option<bool>,
    detail: String,
    json: Value,
}

impl Outcome {
    fn skipped(name: &'static str, reason: impl Into<String>) -> Self {
        let reason = reason.into();
        Outcome {
            name,
            passed: None,
            json: json!({ "status": "skipped", "reason": reason }),
            detail: reason,
        }
    }

    fn ran(name: &'static str, passed: bool, detail: String, report: Value) -> Self {
        Outcome {
            name,
            passed: Some(passed),
            detail,
            json: json!({ "status": if passed { "pass" } else { "fail" }, "report": report }),
        }
    }
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable report")
}

/// Runs every checker report the model supports. Exit code 1 if any fails.
pub fn check(m: &Model, tol: f64) -> CliResult<(Report, i32)> {
    let graph = flip_graph(&m.support);
    let mut outcomes = Vec::new();

    // GRF -> MRF
    outcomes.push(match gibbs_spec(m)? {
        Some(g) => {
            let rep = verify_grf_to_mrf(&g, &m.constraints, None, tol)?;
            let detail = format!(
                "markovianity deviation {}, localization deviation {}, {} boundaries",
                fmt_g(rep.markovianity.worst_deviation),
                fmt_g(rep.localization_worst),
                rep.boundaries_checked
            );
            Outcome::ran("grf_to_mrf", rep.passed, detail, to_value(&rep))
        }
        None => Outcome::skipped(
            "grf_to_mrf",
            format!(
                "a {} section restricted to the constraint set has no clique potentials",
                m.section.name()
            ),
        ),
    });

    // MRF -> GRF
    let mrf = match &m.section {
        ModelSection::Conditionals(t) => Some(verify_mrf_to_grf(t, &m.support, tol)?),
        _ if graph.is_connected() => {
            let d = resolve_joint(m, None)?.joint;
            let t = local_conditionals_from_joint(&d, None)?;
            Some(verify_mrf_to_grf(&t, &m.support, tol)?)
        }
        _ => None,
    };
    let mut recovered: Option<JointDistribution> = None;
    outcomes.push(match mrf {
        Some(rep) => {
            let detail = match &rep.outcome {
                MrfToGrfOutcome::Recovered {
                    max_abs_deviation, ..
                } => {
                    format!("recovered, max abs deviation {}", fmt_g(*max_abs_deviation))
                }
                MrfToGrfOutcome::NonIdentifiable {
                    component_count, ..
                } => {
                    format!("NonIdentifiable: {component_count} flip-graph components")
                }
                MrfToGrfOutcome::InconsistentConditionals(w) => format!(
                    "InconsistentConditionals: cycle residual {} over {} patterns",
                    fmt_g(w.residual),
                    w.cycle.len().saturating_sub(1)
                ),
            };
            recovered = rep.joint.clone();
            Outcome::ran("mrf_to_grf", rep.passed, detail, to_value(&rep))
        }
        None => Outcome::skipped(
            "mrf_to_grf",
            format!(
                "flip graph has {} components, so single-site conditionals cannot fix the joint",
                graph.component_count()
            ),
        ),
    });

    // Ratio invariance under conditioning on C
    let full_joint = match &m.section {
        ModelSection::Joint(j) if j.full => Some(j.distribution.clone()),
        ModelSection::Energy(u) if u.is_full() => Some(gibbs_form(u).joint),
        ModelSection::Gibbs(g) => {
            Some(gibbs_form(&energy_table(g, Arc::new(Support::full(&m.spec)?))).joint)
        }
        _ => None,
    };
    outcomes.push(match full_joint {
        Some(full) => {
            let rep = verify_ratio_invariance(&full, &m.constraints, tol)?;
            let detail = format!(
                "worst relative deviation {} over {} pairs, P(C) = {}",
                fmt_g(rep.worst_relative_deviation),
                rep.pairs_checked,
                fmt_g(rep.probability_of_constraint)
            );
            Outcome::ran("ratio_invariance", rep.passed, detail, to_value(&rep))
        }
        None => Outcome::skipped(
            "ratio_invariance",
            "the model defines no joint outside the constraint set",
        ),
    });

    // Positivity implies Gibbs form
    let joint = match (&m.section, recovered) {
        (ModelSection::Conditionals(_), Some(d)) => Some(d),
        (ModelSection::Conditionals(_), None) => None,
        _ => Some(resolve_joint(m, None)?.joint),
    };
    outcomes.push(match joint {
        Some(d) => {
            let rep = verify_positivity_gibbs_form(&d, tol)?;
            let detail = format!("max abs deviation {}", fmt_g(rep.max_abs_deviation));
            Outcome::ran("positivity_gibbs_form", rep.passed, detail, to_value(&rep))
        }
        None => Outcome::skipped("positivity_gibbs_form", "no joint could be reconstructed"),
    });

    let passed = outcomes.iter().all(|o| o.passed != Some(false));
    let mut r = Report::new(vec!["check", "status", "detail"]);
    let mut checks = serde_json::Map::new();
    for o in outcomes {
        let status = match o.passed {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "skipped",
        };
        r.row(vec![o.name.to_string(), status.to_string(), o.detail]);
        checks.insert(o.name.to_string(), o.json);
    }
    r.summary("result", if passed { "pass" } else { "fail" });
    r.summary("tolerance", fmt_g(tol));
    r.json("passed", json!(passed));
    r.json("tolerance", json!(tol));
    r.json("checks", Value::Object(checks));
    Ok((r, if passed { 0 } else { 1 }))
}

pub enum SampleMethod {
    Exact,
    Gibbs {
        burn_in: usize,
        init: Option<Pattern>,
    },
}

pub fn sample(m: &Model, method: SampleMethod, n: usize, seed: u64) -> CliResult<Report> {
    let mut r = Report::new(vec!["pattern"]);
    let samples = match method {
        SampleMethod::Exact => exact_sample(&resolve_joint(m, None)?.joint, seed, n),
        SampleMethod::Gibbs { burn_in, init } => {
            let g = gibbs_spec(m)?.ok_or_else(|| {
                CliError::Input(format!(
                    "gibbs sampling needs clique potentials: use a gibbs section or an energy/joint over every \
                     pattern (this model is a {} section)",
                    m.section.name()
                ))
            })?;
            let init = match init {
                Some(x) => x,
                None => m.support.member(0).clone(),
            };
            let run = gibbs_run(&g, &m.constraints, &init, seed, n + burn_in, burn_in)?;
            if let Some(w) = &run.warning {
                eprintln!(
                    "warning: NonErgodic: the flip graph has {} components; the chain stays in component {}",
                    w.component_count, w.init_component
                );
                r.summary(
                    "warning",
                    format!("non-ergodic, {} components", w.component_count),
                );
                r.json("warning", to_value(w));
            }
            run.samples
        }
    };
    for x in &samples {
        r.row(vec![join_labels(x.labels())]);
    }
    r.summary("seed", seed.to_string());
    r.json("seed", json!(seed));
    r.json(
        "samples",
        Value::Array(samples.iter().map(pattern_json).collect()),
    );
    Ok(r)
}
