//! Executable equivalence checks between the Gibbs and Markov descriptions.
//!
//! Every report carries a witness for its worst deviation, not only a verdict.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::constraints::{ConstraintSet, Support};
use crate::decomposition::{minimal_clique_set, DEFAULT_CLIQUE_TOL};
use crate::distribution::{
    conditional_restrict, energy_from_joint, log_sum_exp, ratio, JointDistribution,
};
use crate::error::Result;
use crate::field::{neighborhood_from_cliques, NeighborhoodSystem, Pattern};
use crate::gibbs::{
    gibbs_form, gibbs_joint, local_conditional_from_grf, probability_of_constraint, GibbsSpec,
};
use crate::markov::{
    check_markovianity, joint_from_local_conditionals, CycleWitness, LocalConditionalTable,
    MarkovianityReport, ReconstructionResult,
};

/// Above this support size ratio invariance is checked through the extreme
/// pair of per-pattern log offsets instead of all pairs.
const PAIRWISE_RATIO_LIMIT: usize = 2048;

#[derive(Debug, Clone, Serialize)]
pub struct LocalizationWitness {
    pub site: usize,
    /// Boundary pattern; its label at `site` is immaterial.
    pub boundary: Pattern,
    /// Conditional from the cliques containing `site` only.
    pub localized: Vec<f64>,
    /// Conditional from conditioning the full joint.
    pub brute_force: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrfToMrfReport {
    pub passed: bool,
    pub neighborhood: NeighborhoodSystem,
    pub markovianity: MarkovianityReport,
    pub localization_worst: f64,
    pub localization_witness: Option<LocalizationWitness>,
    pub boundaries_checked: usize,
}

/// Builds the Gibbs joint of `g` on `C`, checks Markovianity against `eta`
/// (default: the neighborhood induced by `g`'s non-vanishing cliques), and
/// compares the clique-localized conditional against brute-force
/// conditioning of the joint at every realized (site, boundary).
pub fn verify_grf_to_mrf(
    g: &GibbsSpec,
    cs: &ConstraintSet,
    eta: Option<&NeighborhoodSystem>,
    tol: f64,
) -> Result<GrfToMrfReport> {
    let joint = gibbs_joint(g, cs)?.joint;
    let eta = match eta {
        Some(e) => e.clone(),
        None => neighborhood_from_cliques(&minimal_clique_set(g, DEFAULT_CLIQUE_TOL)),
    };
    let markovianity = check_markovianity(&joint, &eta, tol)?;

    let s = joint.support();
    let spec = s.spec();
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut boundaries_checked = 0;
    for l in 0..spec.site_count() {
        let stride = spec.stride(l);
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, x) in s.members().iter().enumerate() {
            groups
                .entry(s.ranks()[i] - x.get(l) * stride)
                .or_default()
                .push(i);
        }
        for members in groups.values() {
            boundaries_checked += 1;
            let boundary = s.member(members[0]);
            let localized = local_conditional_from_grf(g, cs, l, boundary)?;
            let lps: Vec<f64> = members.iter().map(|&i| joint.log_prob(i)).collect();
            let z = log_sum_exp(&lps);
            let mut brute = vec![0.0; spec.alphabet_size(l)];
            for &i in members {
                brute[s.member(i).get(l)] = (joint.log_prob(i) - z).exp();
            }
            let dev = localized
                .iter()
                .zip(&brute)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if dev > worst || witness.is_none() {
                worst = worst.max(dev);
                witness = Some(LocalizationWitness {
                    site: l,
                    boundary: boundary.with_label(l, 0),
                    localized,
                    brute_force: brute,
                });
            }
        }
    }
    Ok(GrfToMrfReport {
        passed: markovianity.passed && worst <= tol,
        neighborhood: eta,
        markovianity,
        localization_worst: worst,
        localization_witness: witness,
        boundaries_checked,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum MrfToGrfOutcome {
    Recovered {
        /// Max abs difference between the reconstruction and its Gibbs re-normalization.
        max_abs_deviation: f64,
        log_k: f64,
    },
    NonIdentifiable {
        component_count: usize,
        components: Vec<Vec<usize>>,
    },
    InconsistentConditionals(CycleWitness),
}

#[derive(Debug, Clone, Serialize)]
pub struct MrfToGrfReport {
    pub passed: bool,
    #[serde(flatten)]
    pub outcome: MrfToGrfOutcome,
    #[serde(skip)]
    pub joint: Option<JointDistribution>,
}

/// Reconstructs the joint from `t`, writes it as `k exp(-U)`, and confirms
/// the Gibbs form re-normalizes to the same joint.
pub fn verify_mrf_to_grf(
    t: &LocalConditionalTable,
    s: &Support,
    tol: f64,
) -> Result<MrfToGrfReport> {
    Ok(match joint_from_local_conditionals(t, s, None)? {
        ReconstructionResult::Joint(d) => {
            let gj = gibbs_form(&energy_from_joint(&d));
            let dev = d.max_abs_diff(&gj.joint)?;
            MrfToGrfReport {
                passed: dev <= tol,
                outcome: MrfToGrfOutcome::Recovered {
                    max_abs_deviation: dev,
                    log_k: gj.log_k,
                },
                joint: Some(d),
            }
        }
        ReconstructionResult::NonIdentifiable {
            component_count,
            components,
        } => MrfToGrfReport {
            passed: false,
            outcome: MrfToGrfOutcome::NonIdentifiable {
                component_count,
                components,
            },
            joint: None,
        },
        ReconstructionResult::InconsistentConditionals(w) => MrfToGrfReport {
            passed: false,
            outcome: MrfToGrfOutcome::InconsistentConditionals(w),
            joint: None,
        },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioInvarianceReport {
    pub passed: bool,
    /// Worst `|r_C - r| / r` over pairs of constraint-satisfying patterns.
    pub worst_relative_deviation: f64,
    pub witness: Option<(Pattern, Pattern)>,
    pub pairs_checked: u64,
    pub probability_of_constraint: f64,
}

/// Ratios between patterns of `C` are the same before and after conditioning on `C`.
pub fn verify_ratio_invariance(
    full: &JointDistribution,
    cs: &ConstraintSet,
    tol: f64,
) -> Result<RatioInvarianceReport> {
    let restricted = conditional_restrict(full, cs)?;
    let rs = restricted.support();
    let parent: Vec<usize> = rs
        .ranks()
        .iter()
        .map(|&r| {
            full.support()
                .index_of_rank(r)
                .expect("restriction of the same support")
        })
        .collect();
    let n = rs.len();
    let relative = |i: usize, j: usize| {
        let rf = ratio(full, parent[i], parent[j]);
        (ratio(&restricted, i, j) - rf).abs() / rf
    };

    let mut worst = 0.0f64;
    let mut witness = (0, 0);
    let mut pairs_checked = 0u64;
    if n <= PAIRWISE_RATIO_LIMIT {
        for i in 0..n {
            for j in i..n {
                pairs_checked += 1;
                for dev in [relative(i, j), relative(j, i)] {
                    if dev > worst {
                        worst = dev;
                        witness = (i, j);
                    }
                }
            }
        }
    } else {
        // ratio(restricted, i, j) / ratio(full, i', j') = exp(off_j - off_i),
        // so the extreme offsets give the worst pair.
        let offsets: Vec<f64> = (0..n)
            .map(|i| restricted.log_prob(i) - full.log_prob(parent[i]))
            .collect();
        let lo = (0..n)
            .min_by(|&a, &b| offsets[a].total_cmp(&offsets[b]))
            .unwrap_or(0);
        let hi = (0..n)
            .max_by(|&a, &b| offsets[a].total_cmp(&offsets[b]))
            .unwrap_or(0);
        pairs_checked = 1;
        worst = relative(lo, hi).max(relative(hi, lo));
        witness = (lo, hi);
    }
    Ok(RatioInvarianceReport {
        passed: worst <= tol,
        worst_relative_deviation: worst,
        witness: Some((rs.member(witness.0).clone(), rs.member(witness.1).clone())),
        pairs_checked,
        probability_of_constraint: probability_of_constraint(full, cs),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub passed: bool,
    pub max_abs_deviation: f64,
    /// `ln k` of the constructed Gibbs form.
    pub log_k: f64,
    /// Constructed energies, gauge-fixed to 0 at the first support member.
    pub energies: Vec<f64>,
}

/// Any strictly positive joint is `k exp(-U)` for `U = -ln P + const`.
pub fn verify_positivity_gibbs_form(d: &JointDistribution, tol: f64) -> Result<PositivityReport> {
    let u = energy_from_joint(d);
    let gj = gibbs_form(&u);
    let dev = d.max_abs_diff(&gj.joint)?;
    Ok(PositivityReport {
        passed: dev <= tol,
        max_abs_deviation: dev,
        log_k: gj.log_k,
        energies: u.energies().to_vec(),
    })
}
