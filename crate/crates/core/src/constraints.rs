//! Hard constraints, the constraint set `C`, its enumerated support, and the
//! single-site flip graph over that support.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{guard_limit, FieldSpec, Label, Pattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Comparator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparator {
    pub fn holds(self, lhs: usize, rhs: usize) -> bool {
        match self {
            Comparator::Eq => lhs == rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "=" | "==" => Some(Comparator::Eq),
            "<=" => Some(Comparator::Le),
            ">=" => Some(Comparator::Ge),
            _ => None,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// One predicate `C_k` on patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    /// Rejects any pattern carrying exactly `labels` on `sites`.
    ForbiddenWindow {
        sites: Vec<usize>,
        labels: Vec<Label>,
    },
    /// Number of sites carrying `label`, compared against `bound`.
    Count {
        label: Label,
        comparator: Comparator,
        bound: usize,
    },
    AllowList(BTreeSet<Pattern>),
    DenyList(BTreeSet<Pattern>),
}

impl Constraint {
    pub fn forbidden_window(sites: Vec<usize>, labels: Vec<Label>) -> Self {
        Constraint::ForbiddenWindow { sites, labels }
    }

    pub fn count(label: Label, comparator: Comparator, bound: usize) -> Self {
        Constraint::Count {
            label,
            comparator,
            bound,
        }
    }

    pub fn allow_list(patterns: impl IntoIterator<Item = Pattern>) -> Self {
        Constraint::AllowList(patterns.into_iter().collect())
    }

    pub fn deny_list(patterns: impl IntoIterator<Item = Pattern>) -> Self {
        Constraint::DenyList(patterns.into_iter().collect())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Constraint::ForbiddenWindow { .. } => "forbidden_window",
            Constraint::Count { .. } => "count",
            Constraint::AllowList(_) => "allow_list",
            Constraint::DenyList(_) => "deny_list",
        }
    }

    pub fn validate(&self, spec: &FieldSpec) -> Result<()> {
        match self {
            Constraint::ForbiddenWindow { sites, labels } => {
                if sites.len() != labels.len() {
                    return Err(Error::InvalidArgument(format!(
                        "forbidden window has {} sites but {} labels",
                        sites.len(),
                        labels.len()
                    )));
                }
                let distinct: BTreeSet<_> = sites.iter().collect();
                if distinct.len() != sites.len() {
                    return Err(Error::InvalidArgument(
                        "forbidden window repeats a site".into(),
                    ));
                }
                for (&s, &v) in sites.iter().zip(labels) {
                    spec.check_site(s)?;
                    if v >= spec.alphabet_size(s) {
                        return Err(Error::InvalidArgument(format!(
                            "forbidden window label {v} out of range at site {s}"
                        )));
                    }
                }
                Ok(())
            }
            Constraint::Count { .. } => Ok(()),
            Constraint::AllowList(ps) | Constraint::DenyList(ps) => {
                ps.iter().try_for_each(|x| spec.validate_pattern(x))
            }
        }
    }

    pub fn evaluate(&self, x: &Pattern) -> bool {
        match self {
            Constraint::ForbiddenWindow { sites, labels } => {
                !sites.iter().zip(labels).all(|(&s, &v)| x.get(s) == v)
            }
            Constraint::Count {
                label,
                comparator,
                bound,
            } => {
                let n = x.labels().iter().filter(|&&v| v == *label).count();
                comparator.holds(n, *bound)
            }
            Constraint::AllowList(ps) => ps.contains(x),
            Constraint::DenyList(ps) => !ps.contains(x),
        }
    }
}

/// Conjunction of constraints; the empty set means `C = Ω`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConstraintSet {
    constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        ConstraintSet { constraints }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Forbid `label` on every adjacent pair `(l, l+1)` of a chain of `site_count` sites.
    pub fn forbid_adjacent(site_count: usize, label: Label) -> Self {
        ConstraintSet::new(
            (0..site_count.saturating_sub(1))
                .map(|l| Constraint::forbidden_window(vec![l, l + 1], vec![label, label]))
                .collect(),
        )
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn validate(&self, spec: &FieldSpec) -> Result<()> {
        self.constraints.iter().try_for_each(|c| c.validate(spec))
    }

    pub fn evaluate(&self, x: &Pattern) -> bool {
        self.constraints.iter().all(|c| c.evaluate(x))
    }
}

pub fn evaluate(cs: &ConstraintSet, x: &Pattern) -> bool {
    cs.evaluate(x)
}

/// `C_a ∩ C_b`, as the concatenated constraint list.
pub fn intersect(a: &ConstraintSet, b: &ConstraintSet) -> ConstraintSet {
    ConstraintSet::new(
        a.constraints
            .iter()
            .chain(&b.constraints)
            .cloned()
            .collect(),
    )
}

/// The patterns of `C`, materialized in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Support {
    spec: FieldSpec,
    members: Vec<Pattern>,
    ranks: Vec<usize>,
}

impl Support {
    /// Build from patterns already known to be valid; sorts and deduplicates.
    pub fn from_patterns(
        spec: &FieldSpec,
        patterns: impl IntoIterator<Item = Pattern>,
    ) -> Result<Self> {
        let mut keyed: Vec<(usize, Pattern)> = Vec::new();
        for x in patterns {
            spec.validate_pattern(&x)?;
            keyed.push((spec.rank(&x), x));
        }
        keyed.sort_by_key(|(r, _)| *r);
        keyed.dedup_by_key(|(r, _)| *r);
        if keyed.is_empty() {
            return Err(Error::EmptySupport);
        }
        let (ranks, members) = keyed.into_iter().unzip();
        Ok(Support {
            spec: spec.clone(),
            members,
            ranks,
        })
    }

    /// Every pattern of Ω.
    pub fn full(spec: &FieldSpec) -> Result<Self> {
        support(spec, &ConstraintSet::empty())
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn members(&self) -> &[Pattern] {
        &self.members
    }

    pub fn member(&self, index: usize) -> &Pattern {
        &self.members[index]
    }

    /// Lexicographic rank in Ω of each member.
    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// Always false for a constructed support; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// True when the support is all of Ω.
    pub fn is_full(&self) -> bool {
        self.members.len() as u128 == self.spec.pattern_count_unbounded()
    }

    pub fn index_of_rank(&self, rank: usize) -> Option<usize> {
        self.ranks.binary_search(&rank).ok()
    }

    pub fn index_of(&self, x: &Pattern) -> Option<usize> {
        if x.len() != self.spec.site_count() {
            return None;
        }
        self.index_of_rank(self.spec.rank(x))
    }

    /// Sub-support of the members satisfying `cs`, with the map back to parent indices.
    pub fn filter(&self, cs: &ConstraintSet) -> Result<(Support, Vec<usize>)> {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| cs.evaluate(&self.members[i]))
            .collect();
        if keep.is_empty() {
            return Err(Error::EmptySupport);
        }
        let sub = Support {
            spec: self.spec.clone(),
            members: keep.iter().map(|&i| self.members[i].clone()).collect(),
            ranks: keep.iter().map(|&i| self.ranks[i]).collect(),
        };
        Ok((sub, keep))
    }
}

/// Enumerate `C` under the global guard.
pub fn support(spec: &FieldSpec, cs: &ConstraintSet) -> Result<Support> {
    support_within(spec, cs, guard_limit())
}

pub fn support_within(spec: &FieldSpec, cs: &ConstraintSet, limit: u64) -> Result<Support> {
    cs.validate(spec)?;
    let count = spec.pattern_count_within(limit)?;
    let mut members = Vec::new();
    let mut ranks = Vec::new();
    for r in 0..count {
        let x = spec.pattern_at(r);
        if cs.evaluate(&x) {
            members.push(x);
            ranks.push(r);
        }
    }
    if members.is_empty() {
        return Err(Error::EmptySupport);
    }
    Ok(Support {
        spec: spec.clone(),
        members,
        ranks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlipEdge {
    /// Smaller support index.
    pub a: usize,
    pub b: usize,
    /// The one site where the two patterns differ.
    pub site: usize,
}

/// Graph on support members, joined when they differ at exactly one site.
#[derive(Debug, Clone)]
pub struct FlipGraph {
    node_count: usize,
    edges: Vec<FlipEdge>,
    adjacency: Vec<Vec<(usize, usize)>>,
    component_ids: Vec<usize>,
    component_count: usize,
}

impl FlipGraph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[FlipEdge] {
        &self.edges
    }

    /// `(neighbor, site)` pairs for `node`, ascending by neighbor.
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn component_ids(&self) -> &[usize] {
        &self.component_ids
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    pub fn is_connected(&self) -> bool {
        self.component_count == 1
    }

    /// Members of each component, in ascending support index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.component_count];
        for (i, &c) in self.component_ids.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

pub fn flip_graph(s: &Support) -> FlipGraph {
    let spec = s.spec();
    let n = s.len();
    let mut edges = Vec::new();
    let mut adjacency = vec![Vec::new(); n];
    for (i, x) in s.members().iter().enumerate() {
        let rank = s.ranks()[i];
        for l in 0..spec.site_count() {
            let stride = spec.stride(l);
            let own = x.get(l);
            // only larger labels, so each edge is found once from its lower-rank end
            for v in own + 1..spec.alphabet_size(l) {
                if let Some(j) = s.index_of_rank(rank + (v - own) * stride) {
                    edges.push(FlipEdge {
                        a: i,
                        b: j,
                        site: l,
                    });
                    adjacency[i].push((j, l));
                    adjacency[j].push((i, l));
                }
            }
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }

    let mut component_ids = vec![usize::MAX; n];
    let mut component_count = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if component_ids[start] != usize::MAX {
            continue;
        }
        component_ids[start] = component_count;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &(w, _) in &adjacency[u] {
                if component_ids[w] == usize::MAX {
                    component_ids[w] = component_count;
                    queue.push_back(w);
                }
            }
        }
        component_count += 1;
    }

    FlipGraph {
        node_count: n,
        edges,
        adjacency,
        component_ids,
        component_count,
    }
}
