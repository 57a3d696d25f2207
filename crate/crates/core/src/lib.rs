//! Exact POMDP value iteration by incremental pruning.
//!
//! The dynamic-programming update maps a parsimonious set of alpha vectors
//! to the parsimonious covering of its Bellman backup. Four update variants
//! are provided ([`Variant`]): an exhaustive reference, plain incremental
//! pruning, restricted-region incremental pruning, and an improved variant
//! that shares work across actions, restricts LPs to witness-region
//! neighbors, and harvests covering members without LPs.
//!
//! ```
//! use incprune::{parse_pomdp, value_iterate, DenseSimplex, SolveConfig};
//!
//! let text = "discount: 0.9\nvalues: reward\nstates: 1\nactions: 1\nobservations: 1\n\
//!             T: 0 : 0 : 0 1.0\nO: 0 : 0 : 0 1.0\nR: 0 : 0 : * : * 1.0\n";
//! let model = parse_pomdp(text).unwrap();
//! let result = value_iterate(&model, &SolveConfig::default(), &DenseSimplex::default()).unwrap();
//! assert_eq!(result.value_function.len(), 1);
//! ```

pub mod dp_update;
pub mod error;
pub mod lp;
pub mod model;
pub mod neighbors;
pub mod oracle;
pub mod pruning;
pub mod solver;
pub mod tolerance;
pub mod vectorset;

pub use dp_update::{dp_update, DpConfig, DpStats, Variant};
pub use error::{Result, SolveError};
pub use lp::{CountingSolver, DenseSimplex, LinearProgram, LpOutcome, LpSolver};
pub use model::{parse_pomdp, Belief, ModelError, PomdpModel};
pub use neighbors::NeighborGraph;
pub use pruning::{CspVariant, LpMode, PruneStats, Pruner};
pub use solver::{
    bellman_residual, extract_policy_action, simulate, value_iterate, SolveConfig, SolveResult,
};
pub use tolerance::Tolerances;
pub use vectorset::{AlphaVector, SupportKind, SupportPoint, VectorSet};
