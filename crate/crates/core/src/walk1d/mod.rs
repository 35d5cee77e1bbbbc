//! Birth-death chain of `±1`-oracle descent on the grid `{0, 1/n, ..., 1}`.
//!
//! With step `1/n` and an oracle that answers `+1` with probability `a_i` at
//! `i/n`, the iterate moves left with probability `a_i` and right otherwise;
//! the endpoints stay put instead of leaving `[0, 1]`. For a convex `f` with
//! unique minimum `f(0) = 0` the profile satisfies
//! `1/2 <= a_0 <= ... <= a_n <= 1`.

mod simulate;
mod stationary;

pub use simulate::{simulate_occupation, total_variation};
pub use stationary::{
    power_iteration, solve_tridiagonal, stationary_bound, stationary_closed_form, stationary_solve,
    stationary_suboptimality, StationaryMethod, StationaryResult, WalkReport, POWER_MAX_ITERS, POWER_TOL,
};

use serde::Serialize;

use crate::convex1d::ConvexFn1d;
use crate::{Error, Result};

/// Grid walk with left-move probabilities `a_0..a_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkChain {
    n: usize,
    a: Vec<f64>,
}

impl WalkChain {
    /// Builds the chain, rejecting profiles outside `[1/2, 1]` or not
    /// nondecreasing.
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::InvalidProfile(format!("need at least two grid points, got {}", a.len())));
        }
        if let Some((i, v)) = a.iter().enumerate().find(|(_, v)| !(0.5..=1.0).contains(*v)) {
            return Err(Error::InvalidProfile(format!("a[{i}] = {v} outside [1/2, 1]")));
        }
        if let Some(i) = a.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::InvalidProfile(format!(
                "profile decreases at {i}: a[{i}] = {} > a[{}] = {}",
                a[i],
                i + 1,
                a[i + 1]
            )));
        }
        Ok(Self { n: a.len() - 1, a })
    }

    /// Constant profile `a_i = value` on `n + 1` grid points.
    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n + 1])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Implied oracle mean `b_i = 2 a_i - 1` at `i/n`.
    pub fn drift(&self) -> Vec<f64> {
        self.a.iter().map(|a| 2.0 * a - 1.0).collect()
    }

    /// Entry `P[i][j]`.
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        let n = self.n;
        let left = if i == 0 { 0 } else { i - 1 };
        let right = if i == n { n } else { i + 1 };
        let mut p = 0.0;
        if j == left {
            p += self.a[i];
        }
        if j == right {
            p += 1.0 - self.a[i];
        }
        p
    }

    /// Dense `(n+1) x (n+1)` transition matrix.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        (0..=self.n).map(|i| (0..=self.n).map(|j| self.transition(i, j)).collect()).collect()
    }

    /// Row vector times transition matrix, `p P`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let n = self.n;
        let a = &self.a;
        let mut q = vec![0.0; n + 1];
        q[0] = p[0] * a[0] + p[1] * a[1];
        for j in 1..n {
            q[j] = p[j - 1] * (1.0 - a[j - 1]) + p[j + 1] * a[j + 1];
        }
        q[n] += p[n - 1] * (1.0 - a[n - 1]) + p[n] * (1.0 - a[n]);
        q
    }

    /// `|p P - p|_inf`.
    pub fn residual(&self, p: &[f64]) -> f64 {
        self.apply(p).iter().zip(p).map(|(q, p)| (q - p).abs()).fold(0.0, f64::max)
    }
}

/// Profile induced by a `±1` oracle whose mean is a subgradient of `f`.
///
/// `a_i = (1 + b_i) / 2` with `b_i` the right derivative at `i/n`; at the
/// right endpoint `x = 1` the left derivative is used since the right one
/// looks outside the domain.
pub fn chain_from_function(f: &dyn ConvexFn1d, n: usize) -> Result<WalkChain> {
    if n == 0 {
        return Err(Error::InvalidProfile("grid size n must be positive".into()));
    }
    let a = (0..=n)
        .map(|i| {
            let x = i as f64 / n as f64;
            let b = if i == n { f.left_derivative(x) } else { f.right_derivative(x) };
            (1.0 + b) / 2.0
        })
        .collect();
    WalkChain::new(a)
}
