//! Solver toolkit for POMDPs with hard energy constraints.
//!
//! The pipeline mirrors how the pieces are meant to be used:
//!
//! 1. [`parser`] reads a model (or [`benchmarks`] generates one),
//! 2. [`product`] folds the resource level into the state space,
//! 3. [`qualitative`] decides almost-sure energy-safe reachability and computes
//!    the allowed actions of every reachable belief support,
//! 4. [`rtdp`] approximates the optimal expected cost over discretized beliefs,
//! 5. [`dtree`] compresses the resulting table policy into a decision tree,
//! 6. [`simulate`] estimates policy values by Monte-Carlo simulation.

pub mod belief;
pub mod benchmarks;
pub mod dtree;
pub mod model;
pub mod parser;
pub mod policy;
pub mod product;
pub mod qualitative;
pub mod rtdp;
pub mod simulate;

pub use belief::{Belief, BeliefVector};
pub use model::{determinize_observations, Distribution, Pomdp, RawPomdp, Violation};
pub use parser::{emit_model, parse_model, parse_pomdp, ParsedModel, TrainingSet};
pub use policy::{Policy, PolicyError};
pub use product::{energy_update, ProductPomdp, ProductState};
pub use qualitative::{AllowedTable, SupportGraph};
pub use rtdp::ValueTable;
