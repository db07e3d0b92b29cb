//! Benchmark fixtures shared by the criterion benches.

use gibbsfield::{Clique, ConstraintSet, FieldSpec, GibbsSpec, PotentialTable};

/// Binary chain of `n` sites with Ising-like pair and field potentials and
/// no two adjacent ones.
pub fn hard_core_chain(n: usize) -> (GibbsSpec, ConstraintSet) {
    let spec = FieldSpec::binary(n).expect("n > 0");
    let mut potentials = Vec::new();
    for l in 0..n {
        let c = Clique::new(vec![l]).expect("single site");
        potentials.push(PotentialTable::new(&spec, c, vec![0.0, -0.3]).expect("sized"));
    }
    for l in 0..n.saturating_sub(1) {
        let c = Clique::new(vec![l, l + 1]).expect("distinct");
        potentials.push(PotentialTable::new(&spec, c, vec![0.0, 0.2, 0.2, 0.0]).expect("sized"));
    }
    let g = GibbsSpec::new(spec, potentials).expect("distinct cliques");
    (g, ConstraintSet::forbid_adjacent(n, 1))
}
