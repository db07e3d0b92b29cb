//! The field-spec document: a TOML file describing a field, its constraints
//! and exactly one model section.
//!
//! ```toml
//! format_version = 1
//!
//! [field]
//! site_count = 3
//! alphabet_sizes = [2, 2, 2]
//!
//! [[constraints]]
//! kind = "forbidden_window"
//! sites = [0, 1]
//! labels = [1, 1]
//!
//! [[gibbs.potentials]]
//! clique = [0, 1]
//! table = [
//!   { labels = [0, 0], value = 0.0 },
//!   { labels = [0, 1], value = 0.0 },
//!   { labels = [1, 0], value = 0.0 },
//!   { labels = [1, 1], value = 1.0 },
//! ]
//! ```
//!
//! Other model sections are `[energy]` and `[joint]` (an `entries` list of
//! `{ rank, energy }` or `{ rank, probability }` keyed by lexicographic rank
//! in the full pattern space, covering either every pattern or exactly the
//! constraint set) and `[conditionals]` (an `entries` list of
//! `{ site, boundary, probabilities }`, with an optional `neighborhoods`
//! list; without it, `boundary` holds the labels of all other sites in order).

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constraints::{support, Comparator, Constraint, ConstraintSet, Support};
use crate::distribution::JointDistribution;
use crate::error::{Error, Result};
use crate::field::{Clique, FieldSpec, Label, NeighborhoodSystem, Pattern};
use crate::gibbs::{EnergyTable, GibbsSpec, PotentialTable};
use crate::markov::{BoundaryKeying, LocalConditionalTable};

pub const FORMAT_VERSION: u32 = 1;

/// Tolerance on the total of a `joint` section.
const JOINT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    format_version: u32,
    field: RawField,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    constraints: Vec<RawConstraint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gibbs: Option<RawGibbs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    energy: Option<RawEnergy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conditionals: Option<RawConditionals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    joint: Option<RawJoint>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    site_count: usize,
    alphabet_sizes: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawConstraint {
    ForbiddenWindow {
        sites: Vec<usize>,
        labels: Vec<Label>,
    },
    Count {
        label: Label,
        comparator: String,
        bound: usize,
    },
    AllowList {
        patterns: Vec<Vec<Label>>,
    },
    DenyList {
        patterns: Vec<Vec<Label>>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGibbs {
    #[serde(default)]
    potentials: Vec<RawPotential>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPotential {
    clique: Vec<usize>,
    table: Vec<RawAssignment>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAssignment {
    labels: Vec<Label>,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnergy {
    entries: Vec<RawEnergyEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnergyEntry {
    rank: usize,
    energy: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJoint {
    entries: Vec<RawJointEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJointEntry {
    rank: usize,
    probability: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConditionals {
    #[serde(skip_serializing_if = "Option::is_none")]
    neighborhoods: Option<Vec<Vec<usize>>>,
    entries: Vec<RawConditionalEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConditionalEntry {
    site: usize,
    boundary: Vec<Label>,
    probabilities: Vec<f64>,
}

/// An explicit joint as written in a document.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSection {
    /// True when the entries cover every pattern of the field, i.e. this is
    /// an unconstrained joint that can be conditioned on the constraint set.
    pub full: bool,
    /// Probabilities as written, in support order.
    pub probabilities: Vec<f64>,
    pub distribution: JointDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSection {
    Gibbs(GibbsSpec),
    Energy(EnergyTable),
    Conditionals(LocalConditionalTable),
    Joint(JointSection),
}

impl ModelSection {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSection::Gibbs(_) => "gibbs",
            ModelSection::Energy(_) => "energy",
            ModelSection::Conditionals(_) => "conditionals",
            ModelSection::Joint(_) => "joint",
        }
    }
}

/// A validated document.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: FieldSpec,
    pub constraints: ConstraintSet,
    /// The enumerated constraint set `C`.
    pub support: Arc<Support>,
    pub section: ModelSection,
}

impl Model {
    /// Validate a programmatically built model the same way a parsed one is.
    pub fn new(spec: FieldSpec, constraints: ConstraintSet, section: ModelSection) -> Result<Self> {
        parse_spec(&Model::render(&spec, &constraints, &section)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Model::render(&self.spec, &self.constraints, &self.section)
    }

    fn render(
        spec: &FieldSpec,
        constraints: &ConstraintSet,
        section: &ModelSection,
    ) -> Result<String> {
        let mut raw = RawDocument {
            format_version: FORMAT_VERSION,
            field: RawField {
                site_count: spec.site_count(),
                alphabet_sizes: spec.alphabet_sizes().to_vec(),
            },
            constraints: constraints
                .constraints()
                .iter()
                .map(raw_constraint)
                .collect(),
            gibbs: None,
            energy: None,
            conditionals: None,
            joint: None,
        };
        match section {
            ModelSection::Gibbs(g) => {
                raw.gibbs = Some(RawGibbs {
                    potentials: g
                        .potentials()
                        .iter()
                        .map(|p| RawPotential {
                            clique: p.clique().sites().to_vec(),
                            table: p
                                .values()
                                .iter()
                                .enumerate()
                                .map(|(i, &value)| RawAssignment {
                                    labels: p.clique().assignment_at(spec, i),
                                    value,
                                })
                                .collect(),
                        })
                        .collect(),
                })
            }
            ModelSection::Energy(u) => {
                raw.energy = Some(RawEnergy {
                    entries: u
                        .support()
                        .ranks()
                        .iter()
                        .zip(u.energies())
                        .map(|(&rank, &energy)| RawEnergyEntry { rank, energy })
                        .collect(),
                })
            }
            ModelSection::Conditionals(t) => {
                raw.conditionals = Some(RawConditionals {
                    neighborhoods: t.neighborhood().map(|eta| eta.as_slices().to_vec()),
                    entries: t
                        .entries()
                        .map(|(site, boundary, probs)| RawConditionalEntry {
                            site,
                            boundary: boundary.to_vec(),
                            probabilities: probs.to_vec(),
                        })
                        .collect(),
                })
            }
            ModelSection::Joint(j) => {
                raw.joint = Some(RawJoint {
                    entries: j
                        .distribution
                        .support()
                        .ranks()
                        .iter()
                        .zip(&j.probabilities)
                        .map(|(&rank, &probability)| RawJointEntry { rank, probability })
                        .collect(),
                })
            }
        }
        toml::to_string(&raw).map_err(|e| Error::malformed("document", e.to_string()))
    }
}

fn raw_constraint(c: &Constraint) -> RawConstraint {
    let patterns = |ps: &BTreeSet<Pattern>| ps.iter().map(|p| p.labels().to_vec()).collect();
    match c {
        Constraint::ForbiddenWindow { sites, labels } => RawConstraint::ForbiddenWindow {
            sites: sites.clone(),
            labels: labels.clone(),
        },
        Constraint::Count {
            label,
            comparator,
            bound,
        } => RawConstraint::Count {
            label: *label,
            comparator: comparator.symbol().to_string(),
            bound: *bound,
        },
        Constraint::AllowList(ps) => RawConstraint::AllowList {
            patterns: patterns(ps),
        },
        Constraint::DenyList(ps) => RawConstraint::DenyList {
            patterns: patterns(ps),
        },
    }
}

fn at<T>(location: impl Into<String>, r: Result<T>) -> Result<T> {
    let location = location.into();
    r.map_err(|e| match e {
        Error::InvalidArgument(message) => Error::MalformedSpec { location, message },
        other => other,
    })
}

/// Parse and validate a document.
pub fn parse_spec(text: &str) -> Result<Model> {
    let raw: RawDocument =
        toml::from_str(text).map_err(|e| Error::malformed("document", e.to_string().trim_end()))?;
    if raw.format_version != FORMAT_VERSION {
        return Err(Error::malformed(
            "format_version",
            format!(
                "unsupported version {}, expected {FORMAT_VERSION}",
                raw.format_version
            ),
        ));
    }
    if raw.field.site_count != raw.field.alphabet_sizes.len() {
        return Err(Error::malformed(
            "field",
            format!(
                "site_count is {} but {} alphabet sizes are given",
                raw.field.site_count,
                raw.field.alphabet_sizes.len()
            ),
        ));
    }
    let spec = FieldSpec::new(raw.field.alphabet_sizes.clone())?;

    let mut constraints = ConstraintSet::empty();
    for (k, rc) in raw.constraints.iter().enumerate() {
        let location = format!("constraints[{k}]");
        let c = match rc {
            RawConstraint::ForbiddenWindow { sites, labels } => {
                Constraint::forbidden_window(sites.clone(), labels.clone())
            }
            RawConstraint::Count {
                label,
                comparator,
                bound,
            } => {
                let cmp = Comparator::parse(comparator).ok_or_else(|| {
                    Error::malformed(
                        &location,
                        format!("unknown comparator {comparator:?}, use =, <= or >="),
                    )
                })?;
                Constraint::count(*label, cmp, *bound)
            }
            RawConstraint::AllowList { patterns } => {
                Constraint::allow_list(patterns.iter().cloned().map(Pattern::new))
            }
            RawConstraint::DenyList { patterns } => {
                Constraint::deny_list(patterns.iter().cloned().map(Pattern::new))
            }
        };
        at(&location, c.validate(&spec))?;
        constraints.push(c);
    }

    let present: Vec<&str> = [
        raw.gibbs.as_ref().map(|_| "gibbs"),
        raw.energy.as_ref().map(|_| "energy"),
        raw.conditionals.as_ref().map(|_| "conditionals"),
        raw.joint.as_ref().map(|_| "joint"),
    ]
    .into_iter()
    .flatten()
    .collect();
    match present.len() {
        0 => {
            return Err(Error::malformed(
                "document",
                "no model section; add one of gibbs, energy, conditionals, joint",
            ))
        }
        1 => {}
        _ => {
            return Err(Error::malformed(
                "document",
                format!(
                    "exactly one model section allowed, found {}",
                    present.join(" and ")
                ),
            ))
        }
    }

    let c_support = Arc::new(support(&spec, &constraints)?);

    let section = if let Some(g) = raw.gibbs {
        ModelSection::Gibbs(parse_gibbs(&spec, g)?)
    } else if let Some(e) = raw.energy {
        let entries: Vec<(usize, f64)> = e.entries.iter().map(|x| (x.rank, x.energy)).collect();
        let (s, values) = ranked_support(&spec, &c_support, "energy", &entries)?;
        ModelSection::Energy(at("energy", EnergyTable::new(s, values))?)
    } else if let Some(j) = raw.joint {
        let entries: Vec<(usize, f64)> =
            j.entries.iter().map(|x| (x.rank, x.probability)).collect();
        let (s, probabilities) = ranked_support(&spec, &c_support, "joint", &entries)?;
        if let Some(i) = probabilities.iter().position(|p| p.is_nan() || *p <= 0.0) {
            return Err(Error::malformed(
                format!("joint.entries[rank={}]", s.ranks()[i]),
                "probabilities must be strictly positive",
            ));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > JOINT_SUM_TOL {
            return Err(Error::malformed(
                "joint",
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        let full = s.is_full();
        let distribution = at(
            "joint",
            JointDistribution::from_probabilities(s, &probabilities),
        )?;
        ModelSection::Joint(JointSection {
            full,
            probabilities,
            distribution,
        })
    } else if let Some(c) = raw.conditionals {
        ModelSection::Conditionals(parse_conditionals(&spec, &c_support, c)?)
    } else {
        unreachable!("exactly one section present")
    };

    Ok(Model {
        spec,
        constraints,
        support: c_support,
        section,
    })
}

fn parse_gibbs(spec: &FieldSpec, raw: RawGibbs) -> Result<GibbsSpec> {
    let mut potentials = Vec::with_capacity(raw.potentials.len());
    let mut seen = BTreeSet::new();
    for (k, rp) in raw.potentials.into_iter().enumerate() {
        let location = format!("gibbs.potentials[{k}] (clique {:?})", rp.clique);
        let clique = at(&location, Clique::new(rp.clique.clone()))?;
        if let Some(&s) = clique.sites().iter().find(|&&s| s >= spec.site_count()) {
            return Err(Error::malformed(location, format!("site {s} out of range")));
        }
        if !seen.insert(clique.clone()) {
            return Err(Error::malformed(location, "duplicate clique"));
        }
        // table labels follow the clique as written; map them onto sorted site order
        let order: Vec<usize> = clique
            .sites()
            .iter()
            .map(|s| rp.clique.iter().position(|c| c == s).expect("same sites"))
            .collect();
        let count = clique.assignment_count(spec);
        let mut values: Vec<Option<f64>> = vec![None; count];
        for a in &rp.table {
            if a.labels.len() != rp.clique.len() {
                return Err(Error::malformed(
                    &location,
                    format!("assignment {:?} has the wrong number of labels", a.labels),
                ));
            }
            let sorted_labels: Vec<Label> = order.iter().map(|&i| a.labels[i]).collect();
            if let Some((&s, &v)) = clique
                .sites()
                .iter()
                .zip(&sorted_labels)
                .find(|(&s, &v)| v >= spec.alphabet_size(s))
            {
                return Err(Error::malformed(
                    &location,
                    format!("label {v} out of range at site {s}"),
                ));
            }
            let idx = sorted_labels
                .iter()
                .zip(clique.sites())
                .fold(0, |acc, (&v, &s)| acc * spec.alphabet_size(s) + v);
            if values[idx].replace(a.value).is_some() {
                return Err(Error::malformed(
                    &location,
                    format!("assignment {:?} listed twice", a.labels),
                ));
            }
        }
        if let Some(missing) = values.iter().position(Option::is_none) {
            let sorted = clique.assignment_at(spec, missing);
            let as_written: Vec<Label> = rp
                .clique
                .iter()
                .map(|s| {
                    sorted[clique
                        .sites()
                        .iter()
                        .position(|c| c == s)
                        .expect("same sites")]
                })
                .collect();
            return Err(Error::malformed(
                location,
                format!("potential table incomplete: no value for labels {as_written:?}"),
            ));
        }
        let values = values.into_iter().map(Option::unwrap).collect();
        potentials.push(at(&location, PotentialTable::new(spec, clique, values))?);
    }
    at("gibbs", GibbsSpec::new(spec.clone(), potentials))
}

/// Entries keyed by Ω rank must cover all of Ω or exactly `C`.
fn ranked_support(
    spec: &FieldSpec,
    c_support: &Arc<Support>,
    section: &str,
    entries: &[(usize, f64)],
) -> Result<(Arc<Support>, Vec<f64>)> {
    let omega = spec.pattern_count()?;
    let mut sorted: Vec<(usize, f64)> = entries.to_vec();
    sorted.sort_by_key(|(r, _)| *r);
    for w in sorted.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::malformed(
                format!("{section}.entries[rank={}]", w[0].0),
                "rank listed twice",
            ));
        }
    }
    if let Some(&(r, _)) = sorted.iter().find(|(r, _)| *r >= omega) {
        return Err(Error::malformed(
            format!("{section}.entries[rank={r}]"),
            format!("rank out of range, the field has {omega} patterns"),
        ));
    }
    if let Some(&(r, _)) = sorted.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::malformed(
            format!("{section}.entries[rank={r}]"),
            "value is not finite",
        ));
    }
    let ranks: Vec<usize> = sorted.iter().map(|(r, _)| *r).collect();
    let values: Vec<f64> = sorted.iter().map(|(_, v)| *v).collect();
    if ranks.len() == omega {
        let full = Support::full(spec)?;
        return Ok((Arc::new(full), values));
    }
    if ranks == c_support.ranks() {
        return Ok((c_support.clone(), values));
    }
    Err(Error::malformed(
        section,
        format!(
            "entries must cover all {omega} patterns or exactly the {} constraint-satisfying ones; got {}",
            c_support.len(),
            ranks.len()
        ),
    ))
}

fn parse_conditionals(
    spec: &FieldSpec,
    c_support: &Support,
    raw: RawConditionals,
) -> Result<LocalConditionalTable> {
    let keying = match raw.neighborhoods {
        None => BoundaryKeying::FullComplement,
        Some(n) => {
            if n.len() != spec.site_count() {
                return Err(Error::malformed(
                    "conditionals.neighborhoods",
                    format!("{} neighborhoods for {} sites", n.len(), spec.site_count()),
                ));
            }
            BoundaryKeying::Neighborhood(at(
                "conditionals.neighborhoods",
                NeighborhoodSystem::new(n),
            )?)
        }
    };
    let mut table = LocalConditionalTable::new(spec.clone(), keying)?;
    let mut seen = BTreeSet::new();
    for (k, e) in raw.entries.into_iter().enumerate() {
        let location = format!("conditionals.entries[{k}]");
        if e.site >= spec.site_count() {
            return Err(Error::malformed(
                location,
                format!("site {} out of range", e.site),
            ));
        }
        if !seen.insert((e.site, e.boundary.clone())) {
            return Err(Error::malformed(
                location,
                "duplicate (site, boundary) entry",
            ));
        }
        at(&location, table.insert(e.site, e.boundary, e.probabilities))?;
    }
    table.validate_against(c_support)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
format_version = 1
[field]
site_count = 1
alphabet_sizes = [2]
[joint]
entries = [{ rank = 0, probability = 0.3 }, { rank = 1, probability = 0.7 }]
"#;

    #[test]
    fn minimal_joint_document() {
        let m = parse_spec(MINIMAL).unwrap();
        match &m.section {
            ModelSection::Joint(j) => {
                assert!(j.full);
                assert_eq!(j.probabilities, vec![0.3, 0.7]);
            }
            other => panic!("unexpected section {other:?}"),
        }
    }

    #[test]
    fn two_model_sections_rejected() {
        let text = format!("{MINIMAL}\n[gibbs]\npotentials = []\n");
        match parse_spec(&text).unwrap_err() {
            Error::MalformedSpec { message, .. } => {
                assert!(message.contains("gibbs and joint"), "{message}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn incomplete_potential_table_names_clique() {
        let text = r#"
format_version = 1
[field]
site_count = 2
alphabet_sizes = [2, 2]
[[gibbs.potentials]]
clique = [0, 1]
table = [
  { labels = [0, 0], value = 0.0 },
  { labels = [0, 1], value = 0.0 },
  { labels = [1, 0], value = 0.0 },
]
"#;
        match parse_spec(text).unwrap_err() {
            Error::MalformedSpec { location, message } => {
                assert!(location.contains("clique [0, 1]"), "{location}");
                assert!(message.contains("[1, 1]"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn clique_written_out_of_order() {
        let text = r#"
format_version = 1
[field]
site_count = 2
alphabet_sizes = [2, 3]
[[gibbs.potentials]]
clique = [1, 0]
table = [
  { labels = [0, 0], value = 0.0 }, { labels = [0, 1], value = 1.0 },
  { labels = [1, 0], value = 2.0 }, { labels = [1, 1], value = 3.0 },
  { labels = [2, 0], value = 4.0 }, { labels = [2, 1], value = 5.0 },
]
"#;
        let m = parse_spec(text).unwrap();
        let ModelSection::Gibbs(g) = &m.section else {
            panic!()
        };
        // sorted order (site0, site1): (1, 2) was written as labels [2, 1]
        let x = Pattern::new(vec![1, 2]);
        assert_eq!(crate::gibbs::energy(g, &x), 5.0);
    }

    #[test]
    fn rejects_bad_documents() {
        let bad_version = MINIMAL.replace("format_version = 1", "format_version = 2");
        assert!(matches!(
            parse_spec(&bad_version),
            Err(Error::MalformedSpec { .. })
        ));
        let bad_count = MINIMAL.replace("site_count = 1", "site_count = 2");
        assert!(matches!(
            parse_spec(&bad_count),
            Err(Error::MalformedSpec { .. })
        ));
        let zero = MINIMAL.replace("probability = 0.3", "probability = 0.0");
        assert!(matches!(
            parse_spec(&zero),
            Err(Error::MalformedSpec { .. })
        ));
        let unknown = MINIMAL.replace("[joint]", "colour = 1\n[joint]");
        assert!(matches!(
            parse_spec(&unknown),
            Err(Error::MalformedSpec { .. })
        ));
        let none = "format_version = 1\n[field]\nsite_count = 1\nalphabet_sizes = [2]\n";
        assert!(matches!(parse_spec(none), Err(Error::MalformedSpec { .. })));
    }

    #[test]
    fn contradictory_constraints_are_empty_support() {
        let text = r#"
format_version = 1
[field]
site_count = 2
alphabet_sizes = [2, 2]
[[constraints]]
kind = "allow_list"
patterns = [[0, 0]]
[[constraints]]
kind = "deny_list"
patterns = [[0, 0]]
[gibbs]
"#;
        assert_eq!(parse_spec(text).unwrap_err(), Error::EmptySupport);
    }

    #[test]
    fn conditionals_must_cover_support() {
        let text = r#"
format_version = 1
[field]
site_count = 2
alphabet_sizes = [2, 2]
[conditionals]
entries = [{ site = 0, boundary = [0], probabilities = [0.5, 0.5] }]
"#;
        assert!(matches!(parse_spec(text), Err(Error::MalformedSpec { .. })));
    }
}
