//! Reciprocal recommendation in two-sided matching markets.
//!
//! Policies are stacks of doubly stochastic ranking matrices, one per agent on
//! each side. This crate evaluates expected matches and envy under the
//! position-based exposure model, optimizes policies for social welfare or
//! Nash social welfare with alternating Frank-Wolfe, and provides the
//! deterministic baselines, synthetic data, ALS preference estimation and the
//! experiment harness used by the `fairrec` CLI.

pub mod als;
pub mod assignment;
pub mod baselines;
pub mod datagen;
pub mod error;
pub mod exam;
pub mod experiment;
pub mod fairness;
pub mod instance;
pub mod policy;
pub mod solver;
pub mod welfare;

pub use error::{Error, Result};
pub use exam::{ExamKind, ExaminationFunction};
pub use fairness::{envy_audit, epsilon_similarity, EnvyReport, OpportunityView};
pub use instance::Instance;
pub use policy::{uniform_policy, validate_policy, Policy, Violation};
pub use solver::{solve, Objective, SolveTrace, SolverConfig};
pub use welfare::{cross_utility, log_nsw, match_probability, social_welfare, utility, Side};

/// Default absolute tolerance for counting an envy pair.
pub const DEFAULT_ENVY_TOLERANCE: f64 = 1e-9;
