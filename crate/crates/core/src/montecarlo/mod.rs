//! Fixed-step stochastic descent on nearly linear one-dimensional functions.
//!
//! An instance lives on `X = [-D/2, D/2]` and comes with an oracle that
//! answers `±G`, with mean equal to a subgradient of magnitude in
//! `[c·ε·G, ε·G]` wherever that matters. Paths run with `η = 4D/(G√T)` and
//! are summarised by the final suboptimality, the last visit to the good set
//! `S = {x : f(x) - f* <= GD/√T}` and tail/mean estimates.

mod grid;
mod instance;
mod paths;

pub use grid::{grid_walk_time_average, GridOracle};
pub use instance::{GoodSet, InstanceOracle, NearlyLinearInstance, Shape};
pub use paths::{
    expected_suboptimality, simulate_paths, tail_estimate, McReport, PathStats, StartPoint, TailEstimate, TailRow,
    MIN_TAIL_COUNT, TAIL_K_MAX,
};
