//! Random instances for property trials and benchmarks.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::constraints::{flip_graph, support, Comparator, Constraint, ConstraintSet, Support};
use crate::distribution::JointDistribution;
use crate::error::{Error, Result};
use crate::field::{Clique, FieldSpec, Pattern};
use crate::gibbs::{GibbsSpec, PotentialTable};

/// `clique_count` distinct random cliques of 1 to `max_order` sites, with
/// potentials uniform in `[-amplitude, amplitude]`.
pub fn random_gibbs_spec<R: Rng>(
    rng: &mut R,
    spec: &FieldSpec,
    max_order: usize,
    clique_count: usize,
    amplitude: f64,
) -> GibbsSpec {
    let n = spec.site_count();
    let max_order = max_order.clamp(1, n);
    let sites: Vec<usize> = (0..n).collect();
    let mut chosen = BTreeSet::new();
    // bounded attempts: small fields may have fewer distinct cliques than requested
    for _ in 0..clique_count * 8 {
        if chosen.len() == clique_count {
            break;
        }
        let order = rng.gen_range(1..=max_order);
        let picked: Vec<usize> = sites.choose_multiple(rng, order).copied().collect();
        chosen.insert(Clique::new(picked).expect("distinct sites"));
    }
    let potentials = chosen
        .into_iter()
        .map(|c| {
            let values = (0..c.assignment_count(spec))
                .map(|_| rng.gen_range(-amplitude..=amplitude))
                .collect();
            PotentialTable::new(spec, c, values).expect("generated in range")
        })
        .collect();
    GibbsSpec::new(spec.clone(), potentials).expect("distinct cliques")
}

fn random_pattern<R: Rng>(rng: &mut R, spec: &FieldSpec) -> Pattern {
    Pattern::new(
        spec.alphabet_sizes()
            .iter()
            .map(|&k| rng.gen_range(0..k))
            .collect(),
    )
}

/// One random constraint of any kind except `AllowList`.
pub fn random_constraint<R: Rng>(rng: &mut R, spec: &FieldSpec) -> Constraint {
    let n = spec.site_count();
    match rng.gen_range(0..3) {
        0 => {
            let width = rng.gen_range(1..=n.min(3));
            let all: Vec<usize> = (0..n).collect();
            let sites: Vec<usize> = all.choose_multiple(rng, width).copied().collect();
            let labels = sites
                .iter()
                .map(|&s| rng.gen_range(0..spec.alphabet_size(s)))
                .collect();
            Constraint::forbidden_window(sites, labels)
        }
        1 => {
            let label = rng.gen_range(0..spec.alphabet_size(0));
            let (comparator, bound) = if rng.gen_bool(0.5) {
                (Comparator::Le, rng.gen_range(n / 2..=n))
            } else {
                (Comparator::Ge, rng.gen_range(0..=n / 2))
            };
            Constraint::count(label, comparator, bound)
        }
        _ => {
            let k = rng.gen_range(1..=3);
            Constraint::deny_list((0..k).map(|_| random_pattern(rng, spec)))
        }
    }
}

/// Random constraints whose support has at least `min_support` members and
/// a connected flip graph. Tries at most `attempts` candidate sets.
pub fn random_connected_constraints<R: Rng>(
    rng: &mut R,
    spec: &FieldSpec,
    max_constraints: usize,
    min_support: usize,
    attempts: usize,
) -> Result<(ConstraintSet, Support)> {
    for _ in 0..attempts {
        let count = rng.gen_range(0..=max_constraints);
        let cs = ConstraintSet::new((0..count).map(|_| random_constraint(rng, spec)).collect());
        let Ok(s) = support(spec, &cs) else { continue };
        if s.len() >= min_support && flip_graph(&s).is_connected() {
            return Ok((cs, s));
        }
    }
    Err(Error::InvalidArgument(format!(
        "no connected constraint set found in {attempts} attempts"
    )))
}

/// Random constraints whose support has at least `min_support` members.
pub fn random_constraints<R: Rng>(
    rng: &mut R,
    spec: &FieldSpec,
    max_constraints: usize,
    min_support: usize,
    attempts: usize,
) -> Result<(ConstraintSet, Support)> {
    for _ in 0..attempts {
        let count = rng.gen_range(1..=max_constraints.max(1));
        let cs = ConstraintSet::new((0..count).map(|_| random_constraint(rng, spec)).collect());
        if let Ok(s) = support(spec, &cs) {
            if s.len() >= min_support {
                return Ok((cs, s));
            }
        }
    }
    Err(Error::InvalidArgument(format!(
        "no constraint set with {min_support} members found in {attempts} attempts"
    )))
}

/// Strictly positive joint with log-weights uniform in `[-spread, spread]`.
pub fn random_joint<R: Rng>(rng: &mut R, support: Arc<Support>, spread: f64) -> JointDistribution {
    let weights = (0..support.len())
        .map(|_| rng.gen_range(-spread..=spread))
        .collect();
    JointDistribution::from_log_weights(support, weights).expect("finite weights")
}
