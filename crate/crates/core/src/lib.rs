//! Final-iterate behaviour of projected subgradient descent.
//!
//! The crate has four parts:
//!
//! * [`sgd`]: a projected (stochastic) subgradient engine with pluggable
//!   feasible sets, step schedules and oracles.
//! * [`lower_bounds`]: three adversarial max-of-pieces instances (strongly
//!   convex with `1/t` steps, Lipschitz with `1/sqrt(t)` and with fixed
//!   `1/sqrt(T)` steps) whose trajectories are known in closed form and whose
//!   final value stays above `log d / T` resp. `log d / sqrt(T)`.
//! * [`walk1d`]: the birth-death chain produced by `±1` oracles on a grid of
//!   `[0, 1]` and its stationary distribution.
//! * [`montecarlo`]: one-dimensional nearly linear instances and Monte Carlo
//!   estimates of the final-iterate suboptimality under a fixed step.

pub mod convex1d;
pub mod error;
pub mod fmt;
pub mod lower_bounds;
pub mod montecarlo;
pub mod sgd;
pub mod walk1d;

pub use error::{Error, Result};
