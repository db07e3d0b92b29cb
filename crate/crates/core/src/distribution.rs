//! Probability distributions over a support, reconstruction from ratios,
//! conditioning on a constraint set, and ratio queries.
//!
//! All probability state is held as natural logarithms. Normalizers use a
//! max-shifted log-sum-exp whose inner sum is a fixed-shape pairwise tree, so
//! results depend only on the input order and are bit-stable.

use std::sync::Arc;

use crate::constraints::{ConstraintSet, Support};
use crate::error::{Error, Result};
use crate::gibbs::EnergyTable;

/// Normalization tolerance for stored distributions.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Tolerance for round trips that cross several operations.
pub const ROUND_TRIP_TOL: f64 = 1e-9;

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `ln Σ exp(x)`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let shifted: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
    max + pairwise_sum(&shifted).ln()
}

/// Log-ratios `ln(p_j / p_ref)` against one reference member.
#[derive(Debug, Clone)]
pub struct RatioTable {
    support: Arc<Support>,
    reference_index: usize,
    log_ratios: Vec<f64>,
}

impl RatioTable {
    pub fn new(
        support: Arc<Support>,
        reference_index: usize,
        log_ratios: Vec<f64>,
    ) -> Result<Self> {
        if log_ratios.len() != support.len() {
            return Err(Error::InvalidArgument(format!(
                "{} ratios for a support of {}",
                log_ratios.len(),
                support.len()
            )));
        }
        if reference_index >= support.len() {
            return Err(Error::InvalidArgument(format!(
                "reference index {reference_index} out of range"
            )));
        }
        if log_ratios[reference_index] != 0.0 {
            return Err(Error::InvalidArgument(
                "the reference outcome must have log-ratio exactly 0".into(),
            ));
        }
        if let Some(j) = log_ratios.iter().position(|r| !r.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "log-ratio at index {j} is not finite"
            )));
        }
        Ok(RatioTable {
            support,
            reference_index,
            log_ratios,
        })
    }

    /// Plain (not log) ratios `r_j = p_j / p_ref`.
    pub fn from_ratios(
        support: Arc<Support>,
        reference_index: usize,
        ratios: &[f64],
    ) -> Result<Self> {
        if let Some(j) = ratios.iter().position(|&r| !r.is_finite() || r <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ratio at index {j} is not positive and finite"
            )));
        }
        let base = ratios.get(reference_index).copied().unwrap_or(1.0).ln();
        let mut logs: Vec<f64> = ratios.iter().map(|r| r.ln() - base).collect();
        if let Some(r) = logs.get_mut(reference_index) {
            *r = 0.0;
        }
        Self::new(support, reference_index, logs)
    }

    /// Ratios of `d` against the member at `reference_index`.
    pub fn from_joint(d: &JointDistribution, reference_index: usize) -> Result<Self> {
        if reference_index >= d.len() {
            return Err(Error::InvalidArgument(format!(
                "reference index {reference_index} out of range"
            )));
        }
        let base = d.log_probs[reference_index];
        let mut logs: Vec<f64> = d.log_probs.iter().map(|lp| lp - base).collect();
        logs[reference_index] = 0.0;
        Self::new(d.support.clone(), reference_index, logs)
    }

    pub fn support(&self) -> &Arc<Support> {
        &self.support
    }

    pub fn reference_index(&self) -> usize {
        self.reference_index
    }

    pub fn log_ratios(&self) -> &[f64] {
        &self.log_ratios
    }
}

/// Strictly positive probabilities `P(X | C)` over a support.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    support: Arc<Support>,
    log_probs: Vec<f64>,
    log_normalizer: f64,
}

impl JointDistribution {
    /// Normalize unnormalized log-weights. The stored log-normalizer is `ln Σ exp(w)`.
    pub fn from_log_weights(support: Arc<Support>, log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.len() != support.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for a support of {}",
                log_weights.len(),
                support.len()
            )));
        }
        if let Some(j) = log_weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "log-weight at index {j} is not finite"
            )));
        }
        let z = log_sum_exp(&log_weights);
        let log_probs = log_weights.iter().map(|w| w - z).collect();
        Ok(JointDistribution {
            support,
            log_probs,
            log_normalizer: z,
        })
    }

    /// Positive probabilities, renormalized if they do not sum exactly to one.
    pub fn from_probabilities(support: Arc<Support>, probs: &[f64]) -> Result<Self> {
        if let Some(j) = probs.iter().position(|&p| !p.is_finite() || p <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "probability at index {j} is not strictly positive"
            )));
        }
        Self::from_log_weights(support, probs.iter().map(|p| p.ln()).collect())
    }

    pub fn uniform(support: Arc<Support>) -> Self {
        let n = support.len();
        Self::from_log_weights(support, vec![0.0; n]).expect("support is non-empty")
    }

    pub fn support(&self) -> &Arc<Support> {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn log_prob(&self, index: usize) -> f64 {
        self.log_probs[index]
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.log_probs[index].exp()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.log_probs.iter().map(|lp| lp.exp()).collect()
    }

    /// `ln Σ` of the weights this distribution was normalized from.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    /// Max absolute probability difference to `other` over the same support.
    pub fn max_abs_diff(&self, other: &JointDistribution) -> Result<f64> {
        if self.support.ranks() != other.support.ranks() {
            return Err(Error::InvalidArgument(
                "distributions live on different supports".into(),
            ));
        }
        Ok(self
            .log_probs
            .iter()
            .zip(&other.log_probs)
            .map(|(a, b)| (a.exp() - b.exp()).abs())
            .fold(0.0, f64::max))
    }
}

/// `p_j = r_j / Σ_k r_k`, i.e. the reference gets `1 / Σ_k (p_k / p_ref)`.
pub fn probabilities_from_ratios(rt: &RatioTable) -> JointDistribution {
    JointDistribution::from_log_weights(rt.support.clone(), rt.log_ratios.clone())
        .expect("ratio table invariants guarantee finite weights")
}

/// `P(X | C) = P(X) / P(C)` on the patterns of `full`'s support that satisfy `cs`.
pub fn conditional_restrict(
    full: &JointDistribution,
    cs: &ConstraintSet,
) -> Result<JointDistribution> {
    cs.validate(full.support.spec())?;
    let (sub, keep) = full.support.filter(cs)?;
    let kept: Vec<f64> = keep.iter().map(|&i| full.log_probs[i]).collect();
    let log_pc = log_sum_exp(&kept);
    Ok(JointDistribution {
        support: Arc::new(sub),
        log_probs: kept.iter().map(|lp| lp - log_pc).collect(),
        log_normalizer: log_pc,
    })
}

/// `p_j / p_i`.
pub fn ratio(d: &JointDistribution, i: usize, j: usize) -> f64 {
    (d.log_probs[j] - d.log_probs[i]).exp()
}

/// Energies `U = -ln P + ln P(X_ref)` with `X_ref` the first support member, so `U(X_ref) = 0`.
pub fn energy_from_joint(d: &JointDistribution) -> EnergyTable {
    let base = d.log_probs[0];
    let energies = d.log_probs.iter().map(|lp| base - lp).collect();
    EnergyTable::new(d.support.clone(), energies)
        .expect("finite log-probabilities give finite energies")
}
