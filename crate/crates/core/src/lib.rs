//! Constrained discounted Markov decision processes on finite state/action
//! spaces.
//!
//! The pipeline:
//!
//! 1. [`model`]: the problem instance ([`FiniteCmdp`]) and its validation.
//! 2. [`eval`]: occupancy measures of stationary policies, evaluation, and
//!    disintegration of an occupancy measure back into a policy.
//! 3. [`lp`]: the linear program over occupancy measures, solved by the
//!    revised simplex method in [`simplex`].
//! 4. [`chattering`]: decomposition of an optimal occupancy measure into at
//!    most `m + 1` deterministic selectors mixed with state-dependent weights.
//! 5. [`assumptions`]: numerical checks of weight-function (drift) conditions.
//! 6. [`models`], [`oracle`], [`sim`]: example builders, brute-force ground
//!    truth and a Monte-Carlo simulator.
//!
//! The numeric kernel ([`simplex`], [`ext`]) is generic over the scalar type
//! through [`Scalar`]; the modelling layer is fixed to `f64`, with the aliases
//! below naming the concrete instantiations.

pub mod assumptions;
pub mod chattering;
pub mod dp;
pub mod error;
pub mod eval;
pub mod ext;
pub mod lp;
pub mod model;
pub mod models;
pub mod oracle;
pub mod policy;
pub mod scalar;
pub mod sim;
pub mod simplex;
pub mod tolerance;

pub use error::{Error, Result};
pub use model::{
    validate_model, Action, FiniteCmdp, PerformanceVector, Severity, ValidationIssue,
    ValidationReport,
};
pub use policy::{DeterministicPolicy, OccupancyMeasure, RandomizedStationaryPolicy};
pub use scalar::Scalar;

/// Real number extended with a `-∞` sentinel, in double precision.
pub type ExtReal = ext::Extended<f64>;
/// Occupancy-measure linear program with `f64` coefficients.
pub type LinearProgram = lp::LinearProgram<f64>;
/// Result of [`lp::solve_lp`] in double precision.
pub type LpSolution = lp::LpSolution<f64>;
/// Standard-form problem for the simplex kernel in double precision.
pub type StandardLp = simplex::StandardLp<f64>;
/// Simplex output in double precision.
pub type SimplexSolution = simplex::Solution<f64>;
