//! Sampler frequencies against exact probabilities.

mod common;

use std::sync::Arc;

use common::{all_patterns, gibbs_probabilities, no_adjacent};
use gibbsfield::{
    exact_sample, gibbs_run, Clique, Comparator, Constraint, ConstraintSet, FieldSpec, GibbsSpec,
    JointDistribution, Pattern, PotentialTable,
};

/// Largest |count - n p| / sqrt(n p (1 - p)) over `patterns`.
fn worst_z(samples: &[Pattern], patterns: &[Vec<usize>], probs: &[f64]) -> f64 {
    let n = samples.len() as f64;
    patterns
        .iter()
        .zip(probs)
        .map(|(x, &p)| {
            let count = samples
                .iter()
                .filter(|s| s.labels() == x.as_slice())
                .count() as f64;
            (count - n * p).abs() / (n * p * (1.0 - p)).sqrt()
        })
        .fold(0.0, f64::max)
}

#[test]
fn exact_sampler_uniform_over_five() {
    let spec = FieldSpec::binary(3).unwrap();
    let s = gibbsfield::support(&spec, &ConstraintSet::forbid_adjacent(3, 1)).unwrap();
    let d = JointDistribution::uniform(Arc::new(s));
    let samples = exact_sample(&d, 42, 100_000);
    let patterns: Vec<Vec<usize>> = all_patterns(&[2, 2, 2])
        .into_iter()
        .filter(|x| no_adjacent(x, 1))
        .collect();
    assert!(worst_z(&samples, &patterns, &[0.2; 5]) <= 3.0);
}

#[test]
fn heat_bath_on_free_pair_is_uniform() {
    let spec = FieldSpec::binary(2).unwrap();
    let g = GibbsSpec::new(spec, vec![]).unwrap();
    let run = gibbs_run(
        &g,
        &ConstraintSet::empty(),
        &Pattern::new(vec![0, 0]),
        1,
        100_000,
        0,
    )
    .unwrap();
    assert!(run.warning.is_none());
    assert!(worst_z(&run.samples, &all_patterns(&[2, 2]), &[0.25; 4]) <= 3.0);
}

#[test]
fn heat_bath_stuck_on_exactly_one() {
    let spec = FieldSpec::binary(2).unwrap();
    let g = GibbsSpec::new(spec, vec![]).unwrap();
    let cs = ConstraintSet::new(vec![Constraint::count(1, Comparator::Eq, 1)]);
    let run = gibbs_run(&g, &cs, &Pattern::new(vec![0, 1]), 4, 1000, 0).unwrap();
    assert!(run.samples.iter().all(|x| x.labels() == [0, 1]));
    assert_eq!(run.warning.map(|w| w.component_count), Some(2));
}

#[test]
fn heat_bath_matches_constrained_chain() {
    let spec = FieldSpec::binary(3).unwrap();
    let pair = |a, b| {
        PotentialTable::from_fn(&spec, Clique::new(vec![a, b]).unwrap(), |v| {
            (v[0] * v[1]) as f64
        })
        .unwrap()
    };
    let field = PotentialTable::new(&spec, Clique::new(vec![1]).unwrap(), vec![0.0, -0.8]).unwrap();
    let g = GibbsSpec::new(spec.clone(), vec![pair(0, 1), pair(1, 2), field]).unwrap();
    let cs = ConstraintSet::forbid_adjacent(3, 1);
    let run = gibbs_run(&g, &cs, &Pattern::new(vec![0, 0, 0]), 21, 201_000, 1_000).unwrap();
    let patterns: Vec<Vec<usize>> = all_patterns(&[2, 2, 2])
        .into_iter()
        .filter(|x| no_adjacent(x, 1))
        .collect();
    let probs = gibbs_probabilities(&patterns, |x| {
        (x[0] * x[1] + x[1] * x[2]) as f64 - 0.8 * x[1] as f64
    });
    assert!(worst_z(&run.samples, &patterns, &probs) <= 3.0);
}

#[test]
fn exact_sampler_never_leaves_support() {
    let spec = FieldSpec::new(vec![3, 3]).unwrap();
    let s = gibbsfield::support(
        &spec,
        &ConstraintSet::new(vec![Constraint::count(2, Comparator::Le, 0)]),
    )
    .unwrap();
    let d = JointDistribution::uniform(Arc::new(s));
    assert!(exact_sample(&d, 8, 5000)
        .iter()
        .all(|x| !x.labels().contains(&2)));
}
