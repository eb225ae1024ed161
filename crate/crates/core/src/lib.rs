//! Cost-sharing mechanisms for binary public projects.
//!
//! A project of unit cost is either built or not. Each of `n` agents holds a
//! private valuation drawn i.i.d. from a known prior on `[0, 1]`. This crate
//! evaluates, optimizes and bounds mechanisms from the unanimous family (one
//! fixed share vector) and the largest unanimous family (one share vector per
//! coalition), and trains neural representations of the latter.
//!
//! Modules:
//!
//! * [`dist`]: valuation priors, the conditional-welfare function and shape
//!   diagnostics.
//! * [`mechanisms`]: executable mechanisms, schedules and incentive probes.
//! * [`solvers`]: grid dynamic programs (optimal unanimous shares,
//!   one-directional offers, myopic schedules, welfare caps, upper bounds).
//! * [`eval`]: exact and Monte Carlo evaluation.
//! * [`neural`]: the share network, its cost functions and the training loop.

pub mod dist;
pub mod error;
pub mod eval;
pub mod mechanisms;
pub mod neural;
pub mod objective;
pub mod quad;
pub mod solvers;

pub use dist::{ShapeReport, ValuationDistribution};
pub use error::{Error, Result};
pub use eval::{Estimate, Mechanism};
pub use mechanisms::{Coalition, CostShareVector, Outcome, Schedule};
pub use neural::{NetworkParams, TrainConfig};
pub use objective::Objective;
pub use solvers::{GridSpec, OfferPolicy};
