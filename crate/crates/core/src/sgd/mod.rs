//! Projected (stochastic) subgradient descent with final-iterate output.
//!
//! One step reads
//!
//! ```text
//! g_t     = oracle(x_t, t)
//! y_{t+1} = x_t - eta_t * g_t
//! x_{t+1} = project(y_{t+1})
//! ```
//!
//! for `t = 1..=T`, starting from a feasible `x_1`. Oracles receive the
//! 1-based step index so that step-dependent adversaries stay reproducible.

mod projection;
mod schedule;
mod trace;

pub use projection::FeasibleSet;
pub use schedule::{ScheduleKind, StepSchedule};
pub use trace::{running_average, SgdTrace};

pub(crate) use projection::norm;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Source of (stochastic) subgradients.
pub trait GradientOracle {
    fn dim(&self) -> usize;

    /// Objective value, recorded in traces.
    fn value(&self, x: &[f64]) -> f64;

    /// Writes the oracle output for `x_t` at step `t` into `grad`.
    fn query(&mut self, x: &[f64], t: usize, rng: &mut dyn RngCore, grad: &mut [f64]) -> Result<()>;
}

impl<O: GradientOracle + ?Sized> GradientOracle for &mut O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn query(&mut self, x: &[f64], t: usize, rng: &mut dyn RngCore, grad: &mut [f64]) -> Result<()> {
        (**self).query(x, t, rng, grad)
    }
}

/// Deterministic oracle built from two closures.
pub struct FnOracle<V, G> {
    dim: usize,
    value: V,
    grad: G,
}

impl<V, G> FnOracle<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: FnMut(&[f64], usize, &mut [f64]),
{
    pub fn new(dim: usize, value: V, grad: G) -> Self {
        Self { dim, value, grad }
    }
}

impl<V, G> GradientOracle for FnOracle<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: FnMut(&[f64], usize, &mut [f64]),
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn query(&mut self, x: &[f64], t: usize, _rng: &mut dyn RngCore, grad: &mut [f64]) -> Result<()> {
        (self.grad)(x, t, grad);
        Ok(())
    }
}

/// What the step callback of [`run_sgd_with`] sees.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub t: usize,
    pub x: &'a [f64],
    pub grad: &'a [f64],
    pub eta: f64,
    pub next: &'a [f64],
    pub projected: bool,
}

/// Generator used for every seeded run.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`.
///
/// Trials that draw from their own stream give identical results no matter
/// in which order (or on which thread) they run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_start<O: GradientOracle + ?Sized>(
    oracle: &O,
    set: &FeasibleSet,
    schedule: &StepSchedule,
    x1: &[f64],
    steps: usize,
) -> Result<()> {
    if oracle.dim() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), got: oracle.dim() });
    }
    if x1.len() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), got: x1.len() });
    }
    if !set.contains(x1) {
        return Err(Error::InfeasibleStart);
    }
    if steps > schedule.horizon() {
        return Err(Error::StepOutOfRange { step: steps, horizon: schedule.horizon() });
    }
    Ok(())
}

/// Runs `steps` engine steps, handing each one to `on_step` instead of
/// storing it. Returns the final iterate `x_{steps+1}`.
pub fn run_sgd_with<O, F>(
    oracle: &mut O,
    set: &FeasibleSet,
    schedule: &StepSchedule,
    x1: &[f64],
    steps: usize,
    rng: &mut dyn RngCore,
    mut on_step: F,
) -> Result<Vec<f64>>
where
    O: GradientOracle + ?Sized,
    F: FnMut(&StepView<'_>),
{
    check_start(oracle, set, schedule, x1, steps)?;
    let d = set.dim();
    let mut x = x1.to_vec();
    let mut next = vec![0.0; d];
    let mut grad = vec![0.0; d];
    for t in 1..=steps {
        grad.iter_mut().for_each(|g| *g = 0.0);
        oracle.query(&x, t, rng, &mut grad)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { step: t });
        }
        let eta = schedule.rate(t);
        for ((n, xi), gi) in next.iter_mut().zip(&x).zip(&grad) {
            *n = xi - eta * gi;
        }
        let projected = set.project_in_place(&mut next);
        on_step(&StepView { t, x: &x, grad: &grad, eta, next: &next, projected });
        std::mem::swap(&mut x, &mut next);
    }
    Ok(x)
}

/// Runs the engine and records the whole trajectory.
///
/// `seed` feeds the generator handed to the oracle; deterministic oracles
/// ignore it.
pub fn run_sgd<O: GradientOracle + ?Sized>(
    oracle: &mut O,
    set: &FeasibleSet,
    schedule: &StepSchedule,
    x1: &[f64],
    steps: usize,
    seed: u64,
) -> Result<SgdTrace> {
    let mut rng = seeded_rng(seed);
    let mut iterates = Vec::with_capacity(steps + 1);
    let mut gradients = Vec::with_capacity(steps);
    let mut projected = Vec::with_capacity(steps);
    iterates.push(x1.to_vec());
    // the oracle is borrowed mutably by the engine, so values are filled in afterwards
    let last = run_sgd_with(oracle, set, schedule, x1, steps, &mut rng, |s| {
        gradients.push(s.grad.to_vec());
        projected.push(s.projected);
        iterates.push(s.next.to_vec());
    })?;
    debug_assert_eq!(iterates.last(), Some(&last));
    let values = iterates.iter().map(|x| oracle.value(x)).collect();
    Ok(SgdTrace { iterates, gradients, values, projected, schedule: *schedule })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_oracle(dim: usize) -> impl GradientOracle {
        FnOracle::new(dim, |_| 0.0, |_, _, g: &mut [f64]| g.fill(0.0))
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let set = FeasibleSet::unit_ball(3).unwrap();
        for sched in [
            StepSchedule::inverse_t(10).unwrap(),
            StepSchedule::inverse_sqrt_t(10).unwrap(),
            StepSchedule::fixed_inverse_sqrt(10).unwrap(),
        ] {
            let trace = run_sgd(&mut zero_oracle(3), &set, &sched, &[0.0; 3], 10, 0).unwrap();
            assert_eq!(trace.iterates.len(), 11);
            assert_eq!(trace.gradients.len(), 10);
            assert!(trace.iterates.iter().all(|x| x.iter().all(|&v| v == 0.0)));
        }
    }

    #[test]
    fn interval_clamp() {
        let set = FeasibleSet::interval(-1.0, 1.0).unwrap();
        let sched = StepSchedule::constant(0.5, 3).unwrap();
        let mut oracle = FnOracle::new(1, |x: &[f64]| x[0], |_, _, g: &mut [f64]| g[0] = 1.0);
        let trace = run_sgd(&mut oracle, &set, &sched, &[0.0], 3, 0).unwrap();
        let xs: Vec<f64> = trace.iterates.iter().map(|x| x[0]).collect();
        assert_eq!(xs, vec![0.0, -0.5, -1.0, -1.0]);
        assert_eq!(trace.values, xs);
        assert_eq!(trace.projected, vec![false, false, true]);
    }

    #[test]
    fn oracle_is_called_once_per_step_in_order() {
        let set = FeasibleSet::unit_ball(1).unwrap();
        let sched = StepSchedule::inverse_t(7).unwrap();
        let mut seen = Vec::new();
        {
            let mut oracle = FnOracle::new(1, |_| 0.0, |_, t, g: &mut [f64]| {
                seen.push(t);
                g[0] = 0.0;
            });
            run_sgd(&mut oracle, &set, &sched, &[0.0], 7, 0).unwrap();
        }
        assert_eq!(seen, (1..=7).collect::<Vec<_>>());
    }

    #[test]
    fn update_rule_holds_on_every_step() {
        let set = FeasibleSet::unit_ball(2).unwrap();
        let sched = StepSchedule::inverse_sqrt_t(50).unwrap();
        let mut oracle = FnOracle::new(
            2,
            |x: &[f64]| x[0].abs() + x[1].abs(),
            |x: &[f64], t, g: &mut [f64]| {
                g[0] = if x[0] >= 0.0 { 1.0 } else { -1.0 } + (t as f64).sin();
                g[1] = -2.0;
            },
        );
        let trace = run_sgd(&mut oracle, &set, &sched, &[0.1, -0.2], 50, 0).unwrap();
        for t in 1..=50 {
            let x = trace.iterate(t).unwrap();
            let g = &trace.gradients[t - 1];
            let eta = sched.eval(t).unwrap();
            let y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - eta * b).collect();
            assert_eq!(set.project(&y), trace.iterate(t + 1).unwrap());
            assert!(set.contains(trace.iterate(t + 1).unwrap()));
        }
    }

    #[test]
    fn errors() {
        let set = FeasibleSet::unit_ball(2).unwrap();
        let sched = StepSchedule::inverse_t(3).unwrap();
        assert!(matches!(
            run_sgd(&mut zero_oracle(3), &set, &sched, &[0.0, 0.0], 3, 0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            run_sgd(&mut zero_oracle(2), &set, &sched, &[2.0, 0.0], 3, 0),
            Err(Error::InfeasibleStart)
        ));
        let mut nan = FnOracle::new(2, |_| 0.0, |_, t, g: &mut [f64]| g[0] = if t == 2 { f64::NAN } else { 0.0 });
        assert!(matches!(
            run_sgd(&mut nan, &set, &sched, &[0.0, 0.0], 3, 0),
            Err(Error::NonFiniteGradient { step: 2 })
        ));
        assert!(run_sgd(&mut zero_oracle(2), &set, &sched, &[0.0, 0.0], 4, 0).is_err());
    }

    #[test]
    fn running_average_examples() {
        let sched = StepSchedule::inverse_t(2).unwrap();
        let trace = SgdTrace {
            iterates: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            gradients: vec![vec![0.0; 2]; 2],
            values: vec![0.0; 3],
            projected: vec![false; 2],
            schedule: sched,
        };
        let avg = running_average(&trace).unwrap();
        assert!((avg[0] - 1.0 / 3.0).abs() < 1e-15 && (avg[1] - 1.0 / 3.0).abs() < 1e-15);

        let constant = SgdTrace { iterates: vec![vec![0.25, -0.5]; 3], ..trace.clone() };
        assert_eq!(running_average(&constant).unwrap(), vec![0.25, -0.5]);

        let empty = SgdTrace { iterates: vec![], ..trace };
        assert!(running_average(&empty).is_err());
    }

    #[test]
    fn csv_layout() {
        let set = FeasibleSet::interval(-1.0, 1.0).unwrap();
        let sched = StepSchedule::constant(0.5, 2).unwrap();
        let mut oracle = FnOracle::new(1, |x: &[f64]| x[0], |_, _, g: &mut [f64]| g[0] = 1.0);
        let csv = run_sgd(&mut oracle, &set, &sched, &[0.0], 2, 0).unwrap().to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x_1,g_1,f_value");
        assert_eq!(lines[1], "1,0,1.0000000000000000e0,0");
        assert_eq!(lines[2], "2,-5.0000000000000000e-1,1.0000000000000000e0,-5.0000000000000000e-1");
        assert_eq!(lines[3], "3,-1.0000000000000000e0,,-1.0000000000000000e0");
        assert_eq!(lines.len(), 4);
    }
}
