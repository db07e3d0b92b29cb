//! Exact sampling from an enumerated joint and a constraint-restricted
//! systematic-scan heat-bath sampler.
//!
//! Randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//! `SeedableRng::seed_from_u64(seed)`. Uniform variates are the top 53 bits of
//! `next_u64` scaled by 2^-53, so sample streams depend only on the ChaCha20
//! keystream and not on any distribution code in `rand`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::constraints::{flip_graph, support, ConstraintSet};
use crate::distribution::JointDistribution;
use crate::error::{Error, Result};
use crate::field::Pattern;
use crate::gibbs::{local_log_weights, GibbsSpec};

/// Seeded generator used by every sampler in this crate.
pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Uniform in `[0, 1)` from the top 53 bits of one `u64`.
pub fn unit_uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Index drawn proportionally to `weights` (non-negative, not all zero).
fn draw_index(rng: &mut impl RngCore, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let target = unit_uniform(rng) * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

/// `n` independent draws from `d` by inverse CDF over its support order.
pub fn exact_sample(d: &JointDistribution, seed: u64, n: usize) -> Vec<Pattern> {
    let mut rng = rng_from_seed(seed);
    let mut cdf = Vec::with_capacity(d.len());
    let mut acc = 0.0;
    for p in d.probabilities() {
        acc += p;
        cdf.push(acc);
    }
    let last = d.len() - 1;
    (0..n)
        .map(|_| {
            let u = unit_uniform(&mut rng) * acc;
            let i = cdf.partition_point(|&c| c <= u).min(last);
            d.support().member(i).clone()
        })
        .collect()
}

/// The chain cannot leave the flip-graph component of its initial pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonErgodicWarning {
    pub component_count: usize,
    pub init_component: usize,
}

#[derive(Debug, Clone)]
pub struct GibbsRun {
    /// One pattern per post-burn-in sweep.
    pub samples: Vec<Pattern>,
    pub warning: Option<NonErgodicWarning>,
}

/// Systematic-scan heat bath. `sweeps` counts every sweep including the
/// `burn_in` ones, so `sweeps - burn_in` patterns are returned.
pub fn gibbs_run(
    g: &GibbsSpec,
    cs: &ConstraintSet,
    init: &Pattern,
    seed: u64,
    sweeps: usize,
    burn_in: usize,
) -> Result<GibbsRun> {
    let spec = g.spec();
    spec.validate_pattern(init)?;
    cs.validate(spec)?;
    if sweeps < burn_in {
        return Err(Error::InvalidArgument(format!(
            "sweeps ({sweeps}) must be at least burn-in ({burn_in})"
        )));
    }
    if !cs.evaluate(init) {
        return Err(Error::ConstraintViolatedInit {
            pattern: init.to_string(),
        });
    }

    let s = support(spec, cs)?;
    let graph = flip_graph(&s);
    let warning = (graph.component_count() > 1).then(|| NonErgodicWarning {
        component_count: graph.component_count(),
        init_component: graph.component_ids()
            [s.index_of(init).expect("init satisfies the constraints")],
    });

    let mut rng = rng_from_seed(seed);
    let mut x = init.clone();
    let mut samples = Vec::with_capacity(sweeps - burn_in);
    let mut probs = Vec::new();
    for sweep in 0..sweeps {
        for l in 0..spec.site_count() {
            let weights = local_log_weights(g, cs, l, &mut x);
            let max = weights
                .iter()
                .flatten()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            probs.clear();
            probs.extend(weights.iter().map(|w| w.map_or(0.0, |w| (w - max).exp())));
            let v = draw_index(&mut rng, &probs);
            x.set(l, v);
        }
        if sweep >= burn_in {
            samples.push(x.clone());
        }
    }
    Ok(GibbsRun { samples, warning })
}
