//! Sites, label alphabets, patterns, cliques and neighborhood systems.
//!
//! A field has `site_count` sites; site `l` takes labels `0..alphabet_sizes[l]`.
//! Patterns are addressed by their lexicographic rank in the sample space,
//! with site 0 the most significant digit.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::error::{Error, Result};

/// Default cap on the number of patterns any single enumeration may produce.
pub const DEFAULT_GUARD_LIMIT: u64 = 1 << 24;

/// Default cap on the number of sites a full clique decomposition may span.
pub const DEFAULT_CLIQUE_ORDER_GUARD: usize = 20;

static GUARD_LIMIT: AtomicU64 = AtomicU64::new(DEFAULT_GUARD_LIMIT);

/// Current global enumeration guard.
pub fn guard_limit() -> u64 {
    GUARD_LIMIT.load(Ordering::Relaxed)
}

/// Replace the global enumeration guard. Per-call overrides take precedence.
pub fn set_guard_limit(limit: u64) {
    GUARD_LIMIT.store(limit, Ordering::Relaxed);
}

pub type Label = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FieldSpec {
    alphabet_sizes: Vec<usize>,
    #[serde(skip)]
    strides: Vec<u128>,
}

impl FieldSpec {
    pub fn new(alphabet_sizes: Vec<usize>) -> Result<Self> {
        if alphabet_sizes.is_empty() {
            return Err(Error::malformed(
                "field.site_count",
                "a field needs at least one site",
            ));
        }
        if let Some(l) = alphabet_sizes.iter().position(|&k| k == 0) {
            return Err(Error::malformed(
                format!("field.alphabet_sizes[{l}]"),
                "alphabet size must be at least 1",
            ));
        }
        let mut strides = vec![1u128; alphabet_sizes.len()];
        for l in (0..alphabet_sizes.len().saturating_sub(1)).rev() {
            strides[l] = strides[l + 1].saturating_mul(alphabet_sizes[l + 1] as u128);
        }
        Ok(FieldSpec {
            alphabet_sizes,
            strides,
        })
    }

    pub fn binary(site_count: usize) -> Result<Self> {
        Self::new(vec![2; site_count])
    }

    pub fn site_count(&self) -> usize {
        self.alphabet_sizes.len()
    }

    pub fn alphabet_sizes(&self) -> &[usize] {
        &self.alphabet_sizes
    }

    pub fn alphabet_size(&self, site: usize) -> usize {
        self.alphabet_sizes[site]
    }

    /// |Ω| without any guard; saturates at `u128::MAX`.
    pub fn pattern_count_unbounded(&self) -> u128 {
        self.alphabet_sizes
            .iter()
            .fold(1u128, |acc, &k| acc.saturating_mul(k as u128))
    }

    /// |Ω|, failing if it exceeds `limit`.
    pub fn pattern_count_within(&self, limit: u64) -> Result<usize> {
        let count = self.pattern_count_unbounded();
        if count > limit as u128 {
            return Err(Error::GuardExceeded {
                what: "pattern enumeration",
                required: count,
                limit: limit as u128,
            });
        }
        Ok(count as usize)
    }

    /// |Ω| under the global guard.
    pub fn pattern_count(&self) -> Result<usize> {
        self.pattern_count_within(guard_limit())
    }

    /// Rank of `site`'s digit in the mixed-radix pattern index.
    pub fn stride(&self, site: usize) -> usize {
        self.strides[site] as usize
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.site_count() {
            return Err(Error::InvalidArgument(format!(
                "site {site} out of range for a {}-site field",
                self.site_count()
            )));
        }
        Ok(())
    }

    pub fn validate_pattern(&self, pattern: &Pattern) -> Result<()> {
        if pattern.len() != self.site_count() {
            return Err(Error::InvalidArgument(format!(
                "pattern has {} labels, field has {} sites",
                pattern.len(),
                self.site_count()
            )));
        }
        for (l, (&v, &k)) in pattern
            .labels()
            .iter()
            .zip(&self.alphabet_sizes)
            .enumerate()
        {
            if v >= k {
                return Err(Error::InvalidArgument(format!(
                    "label {v} at site {l} exceeds alphabet size {k}"
                )));
            }
        }
        Ok(())
    }

    /// Lexicographic rank of a valid pattern.
    pub fn rank(&self, pattern: &Pattern) -> usize {
        pattern
            .labels()
            .iter()
            .zip(&self.strides)
            .map(|(&v, &s)| v * s as usize)
            .sum()
    }

    /// Inverse of [`FieldSpec::rank`].
    pub fn pattern_at(&self, mut rank: usize) -> Pattern {
        let mut labels = vec![0; self.site_count()];
        for l in (0..self.site_count()).rev() {
            let k = self.alphabet_sizes[l];
            labels[l] = rank % k;
            rank /= k;
        }
        Pattern(labels)
    }
}

/// One label per site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Pattern(Vec<Label>);

impl Pattern {
    pub fn new(labels: Vec<Label>) -> Self {
        Pattern(labels)
    }

    pub fn labels(&self) -> &[Label] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, site: usize) -> Label {
        self.0[site]
    }

    /// Copy of `self` with `site` relabelled.
    pub fn with_label(&self, site: usize, label: Label) -> Pattern {
        let mut labels = self.0.clone();
        labels[site] = label;
        Pattern(labels)
    }

    pub fn set(&mut self, site: usize, label: Label) {
        self.0[site] = label;
    }

    /// Labels on `sites`, in the order given.
    pub fn restrict(&self, sites: &[usize]) -> Vec<Label> {
        sites.iter().map(|&s| self.0[s]).collect()
    }

    pub fn hamming(&self, other: &Pattern) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub fn into_labels(self) -> Vec<Label> {
        self.0
    }
}

impl From<Vec<Label>> for Pattern {
    fn from(labels: Vec<Label>) -> Self {
        Pattern(labels)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// All patterns of `spec` in lexicographic order, under the global guard.
pub fn enumerate_patterns(spec: &FieldSpec) -> Result<Vec<Pattern>> {
    enumerate_patterns_within(spec, guard_limit())
}

pub fn enumerate_patterns_within(spec: &FieldSpec, limit: u64) -> Result<Vec<Pattern>> {
    let count = spec.pattern_count_within(limit)?;
    let mut out = Vec::with_capacity(count);
    let mut current = vec![0; spec.site_count()];
    for _ in 0..count {
        out.push(Pattern(current.clone()));
        // odometer increment, last site fastest
        for l in (0..current.len()).rev() {
            current[l] += 1;
            if current[l] < spec.alphabet_size(l) {
                break;
            }
            current[l] = 0;
        }
    }
    Ok(out)
}

/// A subset of sites, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Clique(Vec<usize>);

impl Clique {
    /// Sorts `sites`; rejects duplicates.
    pub fn new(mut sites: Vec<usize>) -> Result<Self> {
        sites.sort_unstable();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!(
                "clique {sites:?} repeats a site"
            )));
        }
        Ok(Clique(sites))
    }

    pub fn empty() -> Self {
        Clique(Vec::new())
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.0.binary_search(&site).is_ok()
    }

    /// Number of label assignments on this clique.
    pub fn assignment_count(&self, spec: &FieldSpec) -> usize {
        self.0.iter().map(|&s| spec.alphabet_size(s)).product()
    }

    /// Mixed-radix index of `pattern` restricted to this clique (first site most significant).
    pub fn assignment_index(&self, spec: &FieldSpec, pattern: &Pattern) -> usize {
        self.0
            .iter()
            .fold(0, |acc, &s| acc * spec.alphabet_size(s) + pattern.get(s))
    }

    /// Inverse of [`Clique::assignment_index`].
    pub fn assignment_at(&self, spec: &FieldSpec, mut index: usize) -> Vec<Label> {
        let mut labels = vec![0; self.0.len()];
        for (i, &s) in self.0.iter().enumerate().rev() {
            let k = spec.alphabet_size(s);
            labels[i] = index % k;
            index /= k;
        }
        labels
    }

    /// Size first, then lexicographic by site.
    pub fn canonical_cmp(&self, other: &Clique) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for Clique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("}")
    }
}

/// A family of distinct cliques over a field of `site_count` sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CliqueSet {
    site_count: usize,
    cliques: Vec<Clique>,
}

impl CliqueSet {
    pub fn new(site_count: usize, cliques: Vec<Clique>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &cliques {
            if let Some(&s) = c.sites().iter().find(|&&s| s >= site_count) {
                return Err(Error::InvalidArgument(format!(
                    "clique {c} names site {s}, field has {site_count} sites"
                )));
            }
            if !seen.insert(c.clone()) {
                return Err(Error::InvalidArgument(format!("duplicate clique {c}")));
            }
        }
        Ok(CliqueSet {
            site_count,
            cliques,
        })
    }

    /// Convenience constructor from raw site lists.
    pub fn from_sites(site_count: usize, cliques: Vec<Vec<usize>>) -> Result<Self> {
        let cliques = cliques
            .into_iter()
            .map(Clique::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(site_count, cliques)
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn cliques(&self) -> &[Clique] {
        &self.cliques
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Clique> {
        self.cliques.iter()
    }
}

/// `D_l`: the members of `q` that contain `site`. The complement within `q`
/// holds every clique whose potential cannot change when only `site` changes.
pub fn cliques_containing(q: &CliqueSet, site: usize) -> Result<CliqueSet> {
    if site >= q.site_count {
        return Err(Error::InvalidArgument(format!(
            "site {site} out of range for a {}-site field",
            q.site_count
        )));
    }
    Ok(CliqueSet {
        site_count: q.site_count,
        cliques: q.iter().filter(|c| c.contains(site)).cloned().collect(),
    })
}

/// Symmetric, irreflexive neighborhoods `η_l`. Sites need not be spatially close.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct NeighborhoodSystem {
    neighbors: Vec<Vec<usize>>,
}

impl NeighborhoodSystem {
    pub fn new(neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let n = neighbors.len();
        let mut sets: Vec<BTreeSet<usize>> = Vec::with_capacity(n);
        for (l, eta) in neighbors.iter().enumerate() {
            let set: BTreeSet<usize> = eta.iter().copied().collect();
            if set.len() != eta.len() {
                return Err(Error::InvalidArgument(format!(
                    "neighborhood of site {l} repeats a site"
                )));
            }
            if set.contains(&l) {
                return Err(Error::InvalidArgument(format!(
                    "site {l} lists itself as a neighbor"
                )));
            }
            if let Some(&m) = set.iter().find(|&&m| m >= n) {
                return Err(Error::InvalidArgument(format!(
                    "neighbor {m} of site {l} out of range"
                )));
            }
            sets.push(set);
        }
        for (l, set) in sets.iter().enumerate() {
            for &m in set {
                if !sets[m].contains(&l) {
                    return Err(Error::InvalidArgument(format!(
                        "neighborhood not symmetric: {m} is a neighbor of {l} but not vice versa"
                    )));
                }
            }
        }
        Ok(NeighborhoodSystem {
            neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    /// Every other site is a neighbor; Markovianity is vacuous here.
    pub fn complete(site_count: usize) -> Self {
        NeighborhoodSystem {
            neighbors: (0..site_count)
                .map(|l| (0..site_count).filter(|&m| m != l).collect())
                .collect(),
        }
    }

    pub fn site_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Sorted neighbors of `site`.
    pub fn of(&self, site: usize) -> &[usize] {
        &self.neighbors[site]
    }

    pub fn as_slices(&self) -> &[Vec<usize>] {
        &self.neighbors
    }
}

/// `η_l = (∪_{c ∈ D_l} c) \ {l}` for every site.
pub fn neighborhood_from_cliques(q: &CliqueSet) -> NeighborhoodSystem {
    let mut sets = vec![BTreeSet::new(); q.site_count];
    for c in q.iter() {
        for &l in c.sites() {
            sets[l].extend(c.sites().iter().copied().filter(|&m| m != l));
        }
    }
    NeighborhoodSystem {
        neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
    }
}
