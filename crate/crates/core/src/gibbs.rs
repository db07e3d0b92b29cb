//! Clique potentials, energies and Gibbs distributions conditioned on a
//! constraint set.
//!
//! Constraints are never folded into the energy; a Gibbs joint is always the
//! pair `(U, C)` with `P(X | C) = k exp(-U(X))` on `C`.

use std::sync::Arc;

use serde::Serialize;

use crate::constraints::{support, ConstraintSet, Support};
use crate::distribution::{log_sum_exp, JointDistribution};
use crate::error::{Error, Result};
use crate::field::{Clique, CliqueSet, FieldSpec, Label, Pattern};

/// Complete table of `V_c` over every label assignment of one clique.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialTable {
    clique: Clique,
    /// Indexed by [`Clique::assignment_index`].
    values: Vec<f64>,
}

impl PotentialTable {
    pub fn new(spec: &FieldSpec, clique: Clique, values: Vec<f64>) -> Result<Self> {
        if let Some(&s) = clique.sites().iter().find(|&&s| s >= spec.site_count()) {
            return Err(Error::InvalidArgument(format!(
                "clique {clique} names missing site {s}"
            )));
        }
        let expected = clique.assignment_count(spec);
        if values.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "potential table for clique {clique} has {} values, needs {expected}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "potential for clique {clique} at assignment {i} is not finite"
            )));
        }
        Ok(PotentialTable { clique, values })
    }

    /// Build by evaluating `f` on every assignment of the clique's sites.
    pub fn from_fn(spec: &FieldSpec, clique: Clique, f: impl Fn(&[Label]) -> f64) -> Result<Self> {
        let values = (0..clique.assignment_count(spec))
            .map(|i| f(&clique.assignment_at(spec, i)))
            .collect();
        Self::new(spec, clique, values)
    }

    pub fn clique(&self) -> &Clique {
        &self.clique
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, spec: &FieldSpec, x: &Pattern) -> f64 {
        self.values[self.clique.assignment_index(spec, x)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| v.abs().max(m))
    }
}

/// A clique family `Q` with one potential table per clique.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsSpec {
    spec: FieldSpec,
    potentials: Vec<PotentialTable>,
    /// Indices into `potentials` of the cliques containing each site.
    #[serde(skip)]
    by_site: Vec<Vec<usize>>,
}

impl GibbsSpec {
    pub fn new(spec: FieldSpec, potentials: Vec<PotentialTable>) -> Result<Self> {
        let cliques: Vec<Clique> = potentials.iter().map(|p| p.clique.clone()).collect();
        CliqueSet::new(spec.site_count(), cliques)?;
        for p in &potentials {
            if p.values.len() != p.clique.assignment_count(&spec) {
                return Err(Error::InvalidArgument(format!(
                    "potential table for clique {} does not match the field",
                    p.clique
                )));
            }
        }
        let mut by_site = vec![Vec::new(); spec.site_count()];
        for (i, p) in potentials.iter().enumerate() {
            for &s in p.clique.sites() {
                by_site[s].push(i);
            }
        }
        Ok(GibbsSpec {
            spec,
            potentials,
            by_site,
        })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn potentials(&self) -> &[PotentialTable] {
        &self.potentials
    }

    pub fn clique_set(&self) -> CliqueSet {
        CliqueSet::new(
            self.spec.site_count(),
            self.potentials.iter().map(|p| p.clique.clone()).collect(),
        )
        .expect("validated at construction")
    }

    /// Potentials whose clique contains `site` (the family `D_l`).
    pub fn potentials_containing(&self, site: usize) -> impl Iterator<Item = &PotentialTable> {
        self.by_site[site].iter().map(|&i| &self.potentials[i])
    }

    /// `Σ_{c ∈ D_l} V_c(x)`.
    pub fn local_energy(&self, site: usize, x: &Pattern) -> f64 {
        self.potentials_containing(site)
            .map(|p| p.value(&self.spec, x))
            .sum()
    }
}

/// Finite energies, one per member of a support (which may be all of Ω).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTable {
    support: Arc<Support>,
    energies: Vec<f64>,
}

impl EnergyTable {
    pub fn new(support: Arc<Support>, energies: Vec<f64>) -> Result<Self> {
        if energies.len() != support.len() {
            return Err(Error::InvalidArgument(format!(
                "{} energies for a support of {}",
                energies.len(),
                support.len()
            )));
        }
        if let Some(i) = energies.iter().position(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "energy at index {i} is not finite"
            )));
        }
        Ok(EnergyTable { support, energies })
    }

    pub fn support(&self) -> &Arc<Support> {
        &self.support
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Defined on every pattern of Ω.
    pub fn is_full(&self) -> bool {
        self.support.is_full()
    }

    /// Energy of `x`, if `x` is in this table's support.
    pub fn get(&self, x: &Pattern) -> Option<f64> {
        self.support.index_of(x).map(|i| self.energies[i])
    }
}

/// `U(x) = Σ_{c ∈ Q} V_c(x|c)`.
pub fn energy(g: &GibbsSpec, x: &Pattern) -> f64 {
    g.potentials.iter().map(|p| p.value(&g.spec, x)).sum()
}

/// Energies of `g` on every member of `s`.
pub fn energy_table(g: &GibbsSpec, s: Arc<Support>) -> EnergyTable {
    let energies = s.members().iter().map(|x| energy(g, x)).collect();
    EnergyTable::new(s, energies).expect("potentials are finite")
}

/// A Gibbs joint together with its normalizer `ln k`.
#[derive(Debug, Clone)]
pub struct GibbsJoint {
    pub joint: JointDistribution,
    /// `ln k` with `k = 1 / Σ_{X ∈ C} exp(-U(X))`.
    pub log_k: f64,
}

/// `P(X | C) = k exp(-U(X))` on `C`.
///
/// `u` must cover every pattern of `C`; a table over all of Ω always does.
pub fn joint_from_energy(u: &EnergyTable, cs: &ConstraintSet) -> Result<GibbsJoint> {
    let spec = u.support.spec();
    cs.validate(spec)?;
    let (sub, keep) = u.support.filter(cs)?;
    if !u.is_full() && (sub.len() as u128) < spec.pattern_count_unbounded() {
        let target = support(spec, cs)?;
        if target.len() != sub.len() {
            return Err(Error::malformed(
                "energy",
                format!(
                    "energy table covers {} of the {} constraint-satisfying patterns",
                    sub.len(),
                    target.len()
                ),
            ));
        }
    }
    let energies = keep.iter().map(|&i| u.energies[i]).collect();
    Ok(gibbs_form(&EnergyTable::new(Arc::new(sub), energies)?))
}

/// `k exp(-U)` normalized over exactly the support of `u`.
pub fn gibbs_form(u: &EnergyTable) -> GibbsJoint {
    let log_weights = u.energies.iter().map(|e| -e).collect();
    let joint = JointDistribution::from_log_weights(u.support.clone(), log_weights)
        .expect("energy tables are finite");
    let log_k = -joint.log_normalizer();
    GibbsJoint { joint, log_k }
}

/// Enumerate `C` and build the Gibbs joint of `g` on it.
pub fn gibbs_joint(g: &GibbsSpec, cs: &ConstraintSet) -> Result<GibbsJoint> {
    let s = Arc::new(support(&g.spec, cs)?);
    Ok(gibbs_form(&energy_table(g, s)))
}

/// `P(C) = Σ_{X ∈ C} P(X)` under an unconstrained joint; 0 when nothing satisfies `cs`.
pub fn probability_of_constraint(full_joint: &JointDistribution, cs: &ConstraintSet) -> f64 {
    let kept: Vec<f64> = full_joint
        .support()
        .members()
        .iter()
        .zip(full_joint.log_probs())
        .filter(|(x, _)| cs.evaluate(x))
        .map(|(_, &lp)| lp)
        .collect();
    log_sum_exp(&kept).exp()
}

/// Unnormalized log-weights `-Σ_{c ∈ D_l} V_c` for each label at `site`,
/// `None` where the completed pattern leaves `C`.
pub(crate) fn local_log_weights(
    g: &GibbsSpec,
    cs: &ConstraintSet,
    site: usize,
    scratch: &mut Pattern,
) -> Vec<Option<f64>> {
    let original = scratch.get(site);
    let out = (0..g.spec.alphabet_size(site))
        .map(|v| {
            scratch.set(site, v);
            cs.evaluate(scratch).then(|| -g.local_energy(site, scratch))
        })
        .collect();
    scratch.set(site, original);
    out
}

/// Conditional distribution of the label at `site` given the other labels of
/// `boundary` (its own label at `site` is ignored), restricted to `C`.
///
/// Only the cliques containing `site` are evaluated; all other potentials are
/// identical for every candidate label and cancel on normalization.
pub fn local_conditional_from_grf(
    g: &GibbsSpec,
    cs: &ConstraintSet,
    site: usize,
    boundary: &Pattern,
) -> Result<Vec<f64>> {
    g.spec.check_site(site)?;
    g.spec.validate_pattern(&boundary.with_label(site, 0))?;
    let mut scratch = boundary.with_label(site, 0);
    let weights = local_log_weights(g, cs, site, &mut scratch);
    normalize_optional_log_weights(&weights).ok_or(Error::BoundaryNotExtendable { site })
}

pub(crate) fn normalize_optional_log_weights(weights: &[Option<f64>]) -> Option<Vec<f64>> {
    let present: Vec<f64> = weights.iter().flatten().copied().collect();
    if present.is_empty() {
        return None;
    }
    let z = log_sum_exp(&present);
    Some(
        weights
            .iter()
            .map(|w| w.map_or(0.0, |w| (w - z).exp()))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::enumerate_patterns;

    fn pairwise_product(spec: &FieldSpec, cliques: &[[usize; 2]]) -> GibbsSpec {
        let potentials = cliques
            .iter()
            .map(|c| {
                PotentialTable::from_fn(spec, Clique::new(c.to_vec()).unwrap(), |v| {
                    (v[0] * v[1]) as f64
                })
                .unwrap()
            })
            .collect();
        GibbsSpec::new(spec.clone(), potentials).unwrap()
    }

    fn p(labels: &[usize]) -> Pattern {
        Pattern::new(labels.to_vec())
    }

    #[test]
    fn energies_of_small_products() {
        let spec2 = FieldSpec::binary(2).unwrap();
        assert_eq!(
            energy(&pairwise_product(&spec2, &[[0, 1]]), &p(&[1, 1])),
            1.0
        );

        let spec3 = FieldSpec::binary(3).unwrap();
        let chain = pairwise_product(&spec3, &[[0, 1], [1, 2]]);
        assert_eq!(energy(&chain, &p(&[1, 1, 1])), 2.0);

        let empty = GibbsSpec::new(spec3.clone(), vec![]).unwrap();
        for x in enumerate_patterns(&spec3).unwrap() {
            assert_eq!(energy(&empty, &x), 0.0);
        }
    }

    #[test]
    fn zero_energy_gives_uniform_with_k() {
        let spec = FieldSpec::binary(3).unwrap();
        let g = GibbsSpec::new(spec, vec![]).unwrap();
        let gj = gibbs_joint(&g, &ConstraintSet::forbid_adjacent(3, 1)).unwrap();
        for p in gj.joint.probabilities() {
            assert!((p - 0.2).abs() < 1e-15);
        }
        assert!((gj.log_k - (0.2f64).ln()).abs() < 1e-15);
    }

    #[test]
    fn two_pattern_energy() {
        let spec = FieldSpec::binary(1).unwrap();
        let s = Arc::new(Support::full(&spec).unwrap());
        let u = EnergyTable::new(s, vec![0.0, 2f64.ln()]).unwrap();
        let gj = joint_from_energy(&u, &ConstraintSet::empty()).unwrap();
        let probs = gj.joint.probabilities();
        assert!((probs[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((probs[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn partial_energy_table_must_cover_constraint_set() {
        let spec = FieldSpec::binary(2).unwrap();
        let s = Arc::new(Support::from_patterns(&spec, [p(&[0, 0]), p(&[0, 1])]).unwrap());
        let u = EnergyTable::new(s, vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            joint_from_energy(&u, &ConstraintSet::empty()),
            Err(Error::MalformedSpec { .. })
        ));
    }

    #[test]
    fn constraint_mass_examples() {
        let spec = FieldSpec::binary(3).unwrap();
        let full = JointDistribution::uniform(Arc::new(Support::full(&spec).unwrap()));
        assert!(
            (probability_of_constraint(&full, &ConstraintSet::forbid_adjacent(3, 1)) - 0.625).abs()
                < 1e-15
        );
        assert!((probability_of_constraint(&full, &ConstraintSet::empty()) - 1.0).abs() < 1e-15);
        let single = ConstraintSet::new(vec![crate::constraints::Constraint::allow_list([p(&[
            1, 0, 1,
        ])])]);
        assert!((probability_of_constraint(&full, &single) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn local_conditional_chain_middle_site() {
        let spec = FieldSpec::binary(3).unwrap();
        let chain = pairwise_product(&spec, &[[0, 1], [1, 2]]);
        let probs =
            local_conditional_from_grf(&chain, &ConstraintSet::empty(), 1, &p(&[1, 0, 1])).unwrap();
        let expected = (-2f64).exp() / (1.0 + (-2f64).exp());
        assert!((probs[1] - expected).abs() < 1e-15);
        assert!((probs[1] - 0.11920292202211755).abs() < 1e-15);
    }

    #[test]
    fn local_conditional_symmetric_and_constrained() {
        let spec = FieldSpec::binary(3).unwrap();
        let flat = GibbsSpec::new(spec.clone(), vec![]).unwrap();
        assert_eq!(
            local_conditional_from_grf(&flat, &ConstraintSet::empty(), 0, &p(&[0, 0, 0])).unwrap(),
            vec![0.5, 0.5]
        );
        let cs = ConstraintSet::forbid_adjacent(3, 1);
        assert_eq!(
            local_conditional_from_grf(&flat, &cs, 1, &p(&[1, 0, 0])).unwrap(),
            vec![1.0, 0.0]
        );
    }

    #[test]
    fn boundary_without_admissible_label() {
        let spec = FieldSpec::binary(2).unwrap();
        let flat = GibbsSpec::new(spec, vec![]).unwrap();
        let cs = ConstraintSet::new(vec![crate::constraints::Constraint::allow_list([p(&[
            0, 0,
        ])])]);
        assert_eq!(
            local_conditional_from_grf(&flat, &cs, 1, &p(&[1, 0])).unwrap_err(),
            Error::BoundaryNotExtendable { site: 1 }
        );
    }

    #[test]
    fn potential_table_completeness() {
        let spec = FieldSpec::binary(2).unwrap();
        assert!(
            PotentialTable::new(&spec, Clique::new(vec![0, 1]).unwrap(), vec![0.0; 3]).is_err()
        );
        assert!(PotentialTable::new(&spec, Clique::empty(), vec![1.5]).is_ok());
        assert!(
            PotentialTable::new(&spec, Clique::new(vec![0]).unwrap(), vec![0.0, f64::NAN]).is_err()
        );
    }
}
