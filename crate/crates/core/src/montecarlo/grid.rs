use rand::{Rng, RngCore};

use crate::convex1d::ConvexFn1d;
use crate::sgd::{run_sgd_with, seeded_rng, FeasibleSet, GradientOracle, StepSchedule};
use crate::{Error, Result};

/// `±1` oracle on `[0, 1]` answering `+1` with probability `(1 + b)/2`,
/// `b` the right derivative of `f` (left derivative at `x = 1`).
pub struct GridOracle<'a> {
    pub f: &'a dyn ConvexFn1d,
}

impl GradientOracle for GridOracle<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.f.value(x[0])
    }

    fn query(&mut self, x: &[f64], _t: usize, rng: &mut dyn RngCore, grad: &mut [f64]) -> Result<()> {
        let b = if x[0] >= 1.0 { self.f.left_derivative(1.0) } else { self.f.right_derivative(x[0]) };
        grad[0] = if rng.random::<f64>() < 0.5 * (1.0 + b) { 1.0 } else { -1.0 };
        Ok(())
    }
}

/// Long-run average of `f` along `±1`-oracle descent with step `1/n` on
/// `[0, 1]`, started at grid point `start` and discarding `burn_in` steps.
/// Iterates are read back on the grid to wash out rounding drift.
pub fn grid_walk_time_average(
    f: &dyn ConvexFn1d,
    n: usize,
    start: usize,
    steps: usize,
    burn_in: usize,
    seed: u64,
) -> Result<f64> {
    if n == 0 || start > n || burn_in >= steps {
        return Err(Error::InvalidParameter(format!(
            "need n > 0, start <= n and burn_in < steps (n = {n}, start = {start}, burn_in = {burn_in}, steps = {steps})"
        )));
    }
    let nf = n as f64;
    let set = FeasibleSet::interval(0.0, 1.0)?;
    let schedule = StepSchedule::constant(1.0 / nf, steps)?;
    let mut rng = seeded_rng(seed);
    let mut oracle = GridOracle { f };
    let mut total = 0.0;
    run_sgd_with(&mut oracle, &set, &schedule, &[start as f64 / nf], steps, &mut rng, |s| {
        if s.t > burn_in {
            total += f.value((s.next[0] * nf).round() / nf);
        }
    })?;
    Ok(total / (steps - burn_in) as f64)
}
