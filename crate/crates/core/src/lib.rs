//! Exact, enumeration-based Markov and Gibbs random fields over finite sites
//! with hard constraints.
//!
//! A field assigns a label from a finite alphabet to every site. Hard
//! constraints carve out the set `C` of admissible patterns; every
//! distribution here is the conditional `P(X | C)`, strictly positive on `C`.
//! From there the crate moves between the two classical descriptions:
//!
//! * Gibbs: clique potentials `V_c` summing to an energy `U`, with
//!   `P(X | C) = k exp(-U(X))`.
//! * Markov: single-site conditionals that depend only on a neighborhood.
//!
//! Everything is computed by exhaustive enumeration, so each conversion can
//! be verified by brute force. See [`checker`] for the verification reports.

pub mod checker;
pub mod constraints;
pub mod decomposition;
pub mod distribution;
pub mod document;
mod error;
pub mod field;
pub mod gibbs;
pub mod markov;
pub mod random;
pub mod sampler;

pub use constraints::{
    evaluate, flip_graph, intersect, support, Comparator, Constraint, ConstraintSet, FlipEdge,
    FlipGraph, Support,
};
pub use decomposition::{canonical_potentials, minimal_clique_set};
pub use distribution::{
    conditional_restrict, energy_from_joint, log_sum_exp, probabilities_from_ratios, ratio,
    JointDistribution, RatioTable,
};
pub use document::{parse_spec, Model, ModelSection};
pub use error::{Error, Result};
pub use field::{
    cliques_containing, enumerate_patterns, neighborhood_from_cliques, Clique, CliqueSet,
    FieldSpec, Label, NeighborhoodSystem, Pattern,
};
pub use gibbs::{
    energy, energy_table, gibbs_form, gibbs_joint, joint_from_energy, local_conditional_from_grf,
    probability_of_constraint, EnergyTable, GibbsJoint, GibbsSpec, PotentialTable,
};
pub use markov::{
    check_markovianity, joint_from_local_conditionals, local_conditionals_from_joint,
    BoundaryKeying, LocalConditionalTable, MarkovianityReport, ReconstructionResult,
};
pub use sampler::{exact_sample, gibbs_run, GibbsRun, NonErgodicWarning};
