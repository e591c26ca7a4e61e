//! Nonlocality analysis of graph and cluster states.
//!
//! The crate builds stabilizer groups of graph states, searches them for
//! GHZ-type (all-versus-nothing) contradictions, computes exact local
//! hidden-variable bounds by enumeration, and evaluates Bell polynomials on
//! dense quantum states with a best-response settings optimizer.

pub mod bell;
mod bits;
pub mod error;
pub mod graph;
pub mod lhv;
pub mod pauli;
pub mod quantum;

pub use bell::{
    classical_bound, cluster4_polynomial, from_ghz_argument, mabk4_polynomial, optimize_settings, quantum_value,
    stabilizer_sum_polynomial, window5_polynomial, BellPolynomial, BoundReport, OptimizerConfig, SettingsChoice,
};
pub use bits::BitRow;
pub use error::{Error, Result};
pub use graph::{
    build_lattice, element_from_mask, full_group, generator, star_graph, Graph, GraphSpec, LatticeSpec,
    StabilizerElement, StabilizerGroup, DEFAULT_GROUP_LIMIT,
};
pub use lhv::{
    constraint_satisfied, find_ghz_arguments, find_ghz_arguments_among, find_ghz_arguments_within, max_consistent,
    max_satisfied, max_weighted_sum, path_triple_argument, triple_argument, window_argument_1d, Constraint,
    GhzArgument, LhvAssignment, LhvVariable, MAX_LHV_VARIABLES,
};
pub use pauli::{LetterParity, PauliLetter, PauliString, Sign};
pub use quantum::{
    expectation_pauli, expectation_settings, make_cluster_state, make_ghz, make_w4, partial_trace, DensityMatrix,
    MeasurementSetting, Observable, QuantumState, StateVector,
};
