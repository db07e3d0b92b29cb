//! The Markov side: single-site conditional tables, Markovianity checks, and
//! reconstruction of the joint from local conditionals.
//!
//! Reconstruction walks the single-site flip graph of the support. Along an
//! edge that changes site `l` from `v_i` to `v_j` with the rest fixed, the
//! joint ratio equals the conditional ratio `P(v_j | rest) / P(v_i | rest)`.
//! A breadth-first spanning forest fixes relative log-weights, every other
//! edge must close its cycle consistently, and each connected component is
//! normalized on its own.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use serde::Serialize;

use crate::constraints::{flip_graph, FlipEdge, Support};
use crate::distribution::{log_sum_exp, JointDistribution};
use crate::error::{Error, Result};
use crate::field::{FieldSpec, Label, NeighborhoodSystem, Pattern};

/// Log-space tolerance for cycle consistency during reconstruction.
pub const CYCLE_TOL: f64 = 1e-9;

/// Tolerance on the sum of a conditional distribution when it is inserted.
pub const ENTRY_SUM_TOL: f64 = 1e-12;

/// How table entries are keyed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryKeying {
    /// By the labels of every other site, in site order.
    FullComplement,
    /// By the labels of `η_l`, in ascending site order.
    Neighborhood(NeighborhoodSystem),
}

/// `P(x_l = v | boundary)` for each site `l` and realized boundary.
///
/// Inadmissible labels may carry probability 0; labels that occur in the
/// support must be strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalConditionalTable {
    spec: FieldSpec,
    keying: BoundaryKeying,
    entries: BTreeMap<(usize, Vec<Label>), Vec<f64>>,
}

impl LocalConditionalTable {
    pub fn new(spec: FieldSpec, keying: BoundaryKeying) -> Result<Self> {
        if let BoundaryKeying::Neighborhood(eta) = &keying {
            if eta.site_count() != spec.site_count() {
                return Err(Error::InvalidArgument(format!(
                    "neighborhood system covers {} sites, field has {}",
                    eta.site_count(),
                    spec.site_count()
                )));
            }
        }
        Ok(LocalConditionalTable {
            spec,
            keying,
            entries: BTreeMap::new(),
        })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn keying(&self) -> &BoundaryKeying {
        &self.keying
    }

    pub fn neighborhood(&self) -> Option<&NeighborhoodSystem> {
        match &self.keying {
            BoundaryKeying::FullComplement => None,
            BoundaryKeying::Neighborhood(eta) => Some(eta),
        }
    }

    /// Sites whose labels form the key for `site`.
    pub fn key_sites(&self, site: usize) -> Vec<usize> {
        match &self.keying {
            BoundaryKeying::FullComplement => {
                (0..self.spec.site_count()).filter(|&m| m != site).collect()
            }
            BoundaryKeying::Neighborhood(eta) => eta.of(site).to_vec(),
        }
    }

    pub fn boundary_key(&self, site: usize, x: &Pattern) -> Vec<Label> {
        x.restrict(&self.key_sites(site))
    }

    /// Insert or replace an entry. `probs` must sum to one within [`ENTRY_SUM_TOL`].
    pub fn insert(&mut self, site: usize, key: Vec<Label>, probs: Vec<f64>) -> Result<()> {
        let location = format!("conditionals[site={site}, boundary={key:?}]");
        self.spec.check_site(site)?;
        let key_sites = self.key_sites(site);
        if key.len() != key_sites.len() {
            return Err(Error::malformed(
                location,
                format!(
                    "boundary has {} labels, expected {}",
                    key.len(),
                    key_sites.len()
                ),
            ));
        }
        for (&m, &v) in key_sites.iter().zip(&key) {
            if v >= self.spec.alphabet_size(m) {
                return Err(Error::malformed(
                    location,
                    format!("label {v} out of range at site {m}"),
                ));
            }
        }
        if probs.len() != self.spec.alphabet_size(site) {
            return Err(Error::malformed(
                location,
                format!(
                    "{} probabilities for an alphabet of {}",
                    probs.len(),
                    self.spec.alphabet_size(site)
                ),
            ));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::malformed(
                location,
                "probabilities must be finite and non-negative",
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > ENTRY_SUM_TOL {
            return Err(Error::malformed(
                location,
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        self.entries.insert((site, key), probs);
        Ok(())
    }

    /// Entry for `site` given the other labels of `x`.
    pub fn get(&self, site: usize, x: &Pattern) -> Option<&[f64]> {
        self.entries
            .get(&(site, self.boundary_key(site, x)))
            .map(Vec::as_slice)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &[Label], &[f64])> {
        self.entries
            .iter()
            .map(|((l, k), p)| (*l, k.as_slice(), p.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every (site, boundary) realized by `s` has an entry giving its own label positive mass.
    pub fn validate_against(&self, s: &Support) -> Result<()> {
        if s.spec() != &self.spec {
            return Err(Error::malformed(
                "conditionals",
                "table and support belong to different fields",
            ));
        }
        for x in s.members() {
            for l in 0..self.spec.site_count() {
                let key = self.boundary_key(l, x);
                let probs = self.entries.get(&(l, key.clone())).ok_or_else(|| {
                    Error::malformed(
                        format!("conditionals[site={l}, boundary={key:?}]"),
                        format!("missing entry realized by support pattern {x}"),
                    )
                })?;
                if probs[x.get(l)] <= 0.0 {
                    return Err(Error::malformed(
                        format!("conditionals[site={l}, boundary={key:?}]"),
                        format!(
                            "label {} of support pattern {x} has zero probability",
                            x.get(l)
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Per-site conditionals of `d` by exhaustive conditioning on its support.
///
/// With `eta = None` entries are keyed by the full complement; otherwise by
/// the neighborhood configuration (marginalizing over the other sites).
pub fn local_conditionals_from_joint(
    d: &JointDistribution,
    eta: Option<&NeighborhoodSystem>,
) -> Result<LocalConditionalTable> {
    let spec = d.support().spec().clone();
    let keying = match eta {
        None => BoundaryKeying::FullComplement,
        Some(eta) => BoundaryKeying::Neighborhood(eta.clone()),
    };
    let mut table = LocalConditionalTable::new(spec.clone(), keying)?;
    for l in 0..spec.site_count() {
        let k = spec.alphabet_size(l);
        let mut groups: BTreeMap<Vec<Label>, Vec<Vec<f64>>> = BTreeMap::new();
        for (x, &lp) in d.support().members().iter().zip(d.log_probs()) {
            groups
                .entry(table.boundary_key(l, x))
                .or_insert_with(|| vec![Vec::new(); k])[x.get(l)]
            .push(lp);
        }
        for (key, per_label) in groups {
            let masses: Vec<f64> = per_label.iter().map(|lps| log_sum_exp(lps)).collect();
            let z = log_sum_exp(&masses);
            let probs = masses.iter().map(|m| (m - z).exp()).collect();
            table.entries.insert((l, key), probs);
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkovianityWitness {
    pub site: usize,
    /// The two labels whose conditional log-ratio disagrees.
    pub labels: (Label, Label),
    /// Shared labels on `η_site`.
    pub neighborhood_labels: Vec<Label>,
    /// Two boundaries agreeing on `η_site`; their label at `site` is immaterial.
    pub boundary_a: Pattern,
    pub boundary_b: Pattern,
    pub log_ratio_a: f64,
    pub log_ratio_b: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkovianityReport {
    pub passed: bool,
    /// Largest spread of `ln P(b | rest) - ln P(a | rest)` among boundaries sharing a neighborhood configuration.
    pub worst_deviation: f64,
    pub witness: Option<MarkovianityWitness>,
    pub groups_checked: usize,
}

struct Spread {
    min: (f64, usize),
    max: (f64, usize),
}

/// Checks that the single-site conditionals of `d` depend on the rest of the
/// pattern only through `η_l`.
///
/// Comparison is by conditional log-ratios of label pairs that are admissible
/// under both boundaries, so constraints that remove labels for some
/// boundaries do not register as violations.
pub fn check_markovianity(
    d: &JointDistribution,
    eta: &NeighborhoodSystem,
    tol: f64,
) -> Result<MarkovianityReport> {
    let s = d.support();
    let spec = s.spec();
    if eta.site_count() != spec.site_count() {
        return Err(Error::InvalidArgument(
            "neighborhood system does not match the field".into(),
        ));
    }
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut groups_checked = 0;
    for l in 0..spec.site_count() {
        let stride = spec.stride(l);
        // full boundary (rank with site l zeroed) -> (label, log-prob)
        let mut boundaries: BTreeMap<usize, (usize, Vec<(Label, f64)>)> = BTreeMap::new();
        for (i, x) in s.members().iter().enumerate() {
            let br = s.ranks()[i] - x.get(l) * stride;
            boundaries
                .entry(br)
                .or_insert_with(|| (i, Vec::new()))
                .1
                .push((x.get(l), d.log_prob(i)));
        }
        let mut spreads: BTreeMap<(Vec<Label>, Label, Label), Spread> = BTreeMap::new();
        for (&br, (first, labels)) in &boundaries {
            let eta_key = s.member(*first).restrict(eta.of(l));
            for (ai, &(a, lpa)) in labels.iter().enumerate() {
                for &(b, lpb) in &labels[ai + 1..] {
                    let lr = lpb - lpa;
                    spreads
                        .entry((eta_key.clone(), a, b))
                        .and_modify(|sp| {
                            if lr < sp.min.0 {
                                sp.min = (lr, br);
                            }
                            if lr > sp.max.0 {
                                sp.max = (lr, br);
                            }
                        })
                        .or_insert(Spread {
                            min: (lr, br),
                            max: (lr, br),
                        });
                }
            }
        }
        groups_checked += spreads.len();
        for ((eta_key, a, b), sp) in spreads {
            let dev = sp.max.0 - sp.min.0;
            if dev > worst {
                worst = dev;
                witness = Some(MarkovianityWitness {
                    site: l,
                    labels: (a, b),
                    neighborhood_labels: eta_key,
                    boundary_a: spec.pattern_at(sp.min.1),
                    boundary_b: spec.pattern_at(sp.max.1),
                    log_ratio_a: sp.min.0,
                    log_ratio_b: sp.max.0,
                });
            }
        }
    }
    Ok(MarkovianityReport {
        passed: worst <= tol,
        worst_deviation: worst,
        witness,
        groups_checked,
    })
}

/// A flip-graph cycle whose conditional log-ratios do not sum to zero.
#[derive(Debug, Clone, Serialize)]
pub struct CycleWitness {
    /// `|Δ log-weight along the tree path - Δ from the closing edge|`.
    pub residual: f64,
    pub closing_edge: FlipEdge,
    /// Support indices around the cycle, starting and ending at the closing edge's ends.
    pub cycle: Vec<usize>,
}

#[derive(Debug, Clone)]
pub enum ReconstructionResult {
    Joint(JointDistribution),
    /// The flip graph splits into several components; only within-component ratios are known.
    NonIdentifiable {
        component_count: usize,
        components: Vec<Vec<usize>>,
    },
    InconsistentConditionals(CycleWitness),
}

impl ReconstructionResult {
    pub fn joint(&self) -> Option<&JointDistribution> {
        match self {
            ReconstructionResult::Joint(d) => Some(d),
            _ => None,
        }
    }

    pub fn into_joint(self) -> Option<JointDistribution> {
        match self {
            ReconstructionResult::Joint(d) => Some(d),
            _ => None,
        }
    }
}

fn edge_log_ratio(
    t: &LocalConditionalTable,
    s: &Support,
    from: usize,
    to: usize,
    site: usize,
) -> Result<f64> {
    let x = s.member(from);
    let probs = t.get(site, x).ok_or_else(|| {
        Error::malformed(
            format!("conditionals[site={site}]"),
            format!("missing entry for the boundary of {x}"),
        )
    })?;
    let (vi, vj) = (x.get(site), s.member(to).get(site));
    if !(probs[vi] > 0.0 && probs[vj] > 0.0) {
        return Err(Error::malformed(
            format!("conditionals[site={site}]"),
            format!("zero probability for an admissible label near {x}"),
        ));
    }
    Ok(probs[vj].ln() - probs[vi].ln())
}

fn path_to_root(parent: &[Option<usize>], mut v: usize) -> Vec<usize> {
    let mut path = vec![v];
    while let Some(p) = parent[v] {
        path.push(p);
        v = p;
    }
    path
}

fn cycle_through(parent: &[Option<usize>], a: usize, b: usize) -> Vec<usize> {
    let pa = path_to_root(parent, a);
    let pb = path_to_root(parent, b);
    // strip the common suffix above the lowest common ancestor
    let mut ia = pa.len();
    let mut ib = pb.len();
    while ia > 0 && ib > 0 && pa[ia - 1] == pb[ib - 1] {
        ia -= 1;
        ib -= 1;
    }
    let mut cycle: Vec<usize> = pa[..=ia.min(pa.len() - 1)].to_vec();
    cycle.extend(pb[..ib].iter().rev());
    cycle.push(a);
    cycle
}

/// Rebuild `P(X | C)` on `s` from single-site conditionals.
///
/// `component_masses`, when given, assigns each flip-graph component (ordered
/// by smallest member) its total probability.
pub fn joint_from_local_conditionals(
    t: &LocalConditionalTable,
    s: &Support,
    component_masses: Option<&[f64]>,
) -> Result<ReconstructionResult> {
    t.validate_against(s)?;
    let graph = flip_graph(s);
    let n = s.len();

    let mut log_w = vec![0.0; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut tree_edge = vec![false; graph.edges().len()];
    let mut edge_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (k, e) in graph.edges().iter().enumerate() {
        edge_index.insert((e.a, e.b), k);
    }

    let mut queue = VecDeque::new();
    for root in 0..n {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &(w, site) in graph.neighbors(u) {
                if visited[w] {
                    continue;
                }
                visited[w] = true;
                parent[w] = Some(u);
                log_w[w] = log_w[u] + edge_log_ratio(t, s, u, w, site)?;
                tree_edge[edge_index[&(u.min(w), u.max(w))]] = true;
                queue.push_back(w);
            }
        }
    }

    let mut worst: Option<CycleWitness> = None;
    for (k, e) in graph.edges().iter().enumerate() {
        if tree_edge[k] {
            continue;
        }
        let expected = edge_log_ratio(t, s, e.a, e.b, e.site)?;
        let residual = (log_w[e.b] - log_w[e.a] - expected).abs();
        if worst.as_ref().is_none_or(|w| residual > w.residual) {
            worst = Some(CycleWitness {
                residual,
                closing_edge: *e,
                cycle: cycle_through(&parent, e.a, e.b),
            });
        }
    }
    if let Some(w) = worst {
        if w.residual > CYCLE_TOL {
            return Ok(ReconstructionResult::InconsistentConditionals(w));
        }
    }

    let support = Arc::new(s.clone());
    if graph.is_connected() {
        return Ok(ReconstructionResult::Joint(
            JointDistribution::from_log_weights(support, log_w)?,
        ));
    }
    let components = graph.components();
    let Some(masses) = component_masses else {
        return Ok(ReconstructionResult::NonIdentifiable {
            component_count: components.len(),
            components,
        });
    };
    if masses.len() != components.len() {
        return Err(Error::InvalidArgument(format!(
            "{} component masses for {} components",
            masses.len(),
            components.len()
        )));
    }
    if masses.iter().any(|m| !m.is_finite() || *m <= 0.0) {
        return Err(Error::InvalidArgument(
            "component masses must be positive".into(),
        ));
    }
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "component masses sum to {total}, not 1"
        )));
    }
    for (members, &mass) in components.iter().zip(masses) {
        let lws: Vec<f64> = members.iter().map(|&i| log_w[i]).collect();
        let z = log_sum_exp(&lws);
        for &i in members {
            log_w[i] += (mass / total).ln() - z;
        }
    }
    Ok(ReconstructionResult::Joint(
        JointDistribution::from_log_weights(support, log_w)?,
    ))
}
