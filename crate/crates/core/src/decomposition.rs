//! Canonical clique potentials of an arbitrary full-domain energy.
//!
//! For a reference labelling `r`, the canonical potential of clique `c` is
//! `V_c(x) = Σ_{b ⊆ c} (-1)^{|c \ b|} U(x_b, r_{-b})`. The potentials sum to
//! `U` everywhere and `V_c(x) = 0` whenever some site of `c` carries its
//! reference label.
//!
//! The inversion is evaluated as a product of per-site difference operators
//! over the full energy tensor (`f(v) - f(r)` for `v != r`), which costs
//! `O(|Ω| · n)` instead of a sum over subsets per entry.

use crate::error::{Error, Result};
use crate::field::{
    guard_limit, Clique, CliqueSet, FieldSpec, Label, Pattern, DEFAULT_CLIQUE_ORDER_GUARD,
};
use crate::gibbs::{EnergyTable, GibbsSpec, PotentialTable};

/// Default magnitude below which a potential counts as zero.
pub const DEFAULT_CLIQUE_TOL: f64 = 1e-12;

/// Canonical potentials under the default guards.
pub fn canonical_potentials(
    u: &EnergyTable,
    reference_labels: Option<&Pattern>,
) -> Result<GibbsSpec> {
    canonical_potentials_within(
        u,
        reference_labels,
        DEFAULT_CLIQUE_ORDER_GUARD,
        guard_limit(),
    )
}

/// Canonical potentials for every subset of sites.
///
/// Refuses fields with more than `max_order` sites, and any decomposition
/// whose tables would hold more than `table_limit` values in total.
pub fn canonical_potentials_within(
    u: &EnergyTable,
    reference_labels: Option<&Pattern>,
    max_order: usize,
    table_limit: u64,
) -> Result<GibbsSpec> {
    let spec = u.support().spec().clone();
    let n = spec.site_count();
    if !u.is_full() {
        return Err(Error::InvalidArgument(
            "canonical decomposition needs an energy on every pattern of the field; \
             constraints are kept separately and have no finite potential form"
                .into(),
        ));
    }
    if n > max_order {
        return Err(Error::GuardExceeded {
            what: "clique order of a full decomposition",
            required: n as u128,
            limit: max_order as u128,
        });
    }
    let table_entries: u128 = spec
        .alphabet_sizes()
        .iter()
        .fold(1u128, |acc, &k| acc.saturating_mul(k as u128 + 1));
    if table_entries > table_limit as u128 {
        return Err(Error::GuardExceeded {
            what: "potential table entries",
            required: table_entries,
            limit: table_limit as u128,
        });
    }
    let reference = match reference_labels {
        Some(r) => {
            spec.validate_pattern(r)?;
            r.clone()
        }
        None => Pattern::new(vec![0; n]),
    };

    // Support of a full table is Ω in rank order.
    let mut tensor = u.energies().to_vec();
    for l in 0..n {
        let k = spec.alphabet_size(l);
        let stride = spec.stride(l);
        let r = reference.get(l);
        let block = stride * k;
        for base in (0..tensor.len()).step_by(block) {
            for offset in 0..stride {
                let at = |v: usize| base + v * stride + offset;
                let ref_value = tensor[at(r)];
                for v in (0..k).filter(|&v| v != r) {
                    tensor[at(v)] -= ref_value;
                }
            }
        }
    }

    let mut potentials = Vec::with_capacity(1 << n);
    for mask in 0u64..(1u64 << n) {
        let sites: Vec<usize> = (0..n).filter(|&l| mask >> l & 1 == 1).collect();
        let clique = Clique::new(sites).expect("mask sites are distinct");
        let values = (0..clique.assignment_count(&spec))
            .map(|i| {
                let labels = clique.assignment_at(&spec, i);
                canonical_entry(&spec, &clique, &labels, &reference, &tensor)
            })
            .collect();
        potentials.push(PotentialTable::new(&spec, clique, values)?);
    }
    potentials.sort_by(|a, b| a.clique().canonical_cmp(b.clique()));
    GibbsSpec::new(spec, potentials)
}

fn canonical_entry(
    spec: &FieldSpec,
    clique: &Clique,
    labels: &[Label],
    reference: &Pattern,
    tensor: &[f64],
) -> f64 {
    if clique
        .sites()
        .iter()
        .zip(labels)
        .any(|(&s, &v)| v == reference.get(s))
    {
        return 0.0;
    }
    let mut x = reference.clone();
    for (&s, &v) in clique.sites().iter().zip(labels) {
        x.set(s, v);
    }
    tensor[spec.rank(&x)]
}

/// Cliques with some potential of magnitude above `tol`, ordered by size then sites.
pub fn minimal_clique_set(g: &GibbsSpec, tol: f64) -> CliqueSet {
    let mut cliques: Vec<Clique> = g
        .potentials()
        .iter()
        .filter(|p| p.max_abs() > tol)
        .map(|p| p.clique().clone())
        .collect();
    cliques.sort_by(Clique::canonical_cmp);
    CliqueSet::new(g.spec().site_count(), cliques).expect("cliques of a valid spec")
}
