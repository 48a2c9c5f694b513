//! Bandit online saddle-point (BanSaP) solvers for online convex optimization
//! with time-varying, long-term constraints.
//!
//! The learner only sees loss *values* at the points it plays, while the
//! constraint functions `g_t` are revealed after each slot. Constraints may be
//! violated in any single slot but must hold on average over the horizon.
//!
//! Module map:
//!
//! - [`geometry`]: box feasible sets, projection, shrinkage toward the box
//!   center, random direction sampling.
//! - [`estimators`]: one-, two- and M-point zeroth-order gradient estimators.
//! - [`solver`]: BanSaP and full-information MOSP steppers, stepsize
//!   schedules, the run loop and a dual-boundedness monitor.
//! - [`metrics`]: per-slot clairvoyant optima, dynamic/static regret, dynamic
//!   fit and minimizer variation.
//! - [`fog`]: the fog computation-offloading scenario and its heuristic
//!   baselines.

pub mod error;
pub mod estimators;
pub mod fog;
pub mod geometry;
pub mod metrics;
pub mod solver;

pub use error::{Error, Result};
pub use estimators::{GradientEstimate, LossBounds, LossOracle};
pub use geometry::{BoxSet, Direction, SamplingScheme};
pub use solver::{
    Algorithm, ConstraintOracle, GradientOracle, HyperParams, PrimalDualState, SlotRecord,
    Trajectory,
};

/// Dense column vector used for decisions, gradients and constraint values.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used for constraint Jacobians (`N x d`).
pub type Matrix = nalgebra::DMatrix<f64>;
