use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::instance::{GoodSet, NearlyLinearInstance};
use crate::fmt::f17;
use crate::sgd::{run_sgd_with, stream_rng, StepSchedule};
use crate::{Error, Result};

/// Largest multiple `k` of `GD/√T` in a tail table.
pub const TAIL_K_MAX: usize = 20;
/// Rows with fewer hits are left out of the decay fit.
pub const MIN_TAIL_COUNT: usize = 10;

/// Where each path starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum StartPoint {
    Fixed(f64),
    /// Uniform on the domain, drawn from the trial's own stream.
    Uniform,
}

/// Per-trial outcomes of a batch of paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStats {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seed: u64,
    pub start: StartPoint,
    pub step_size: f64,
    pub good_set: GoodSet,
    pub final_x: Vec<f64>,
    pub final_suboptimality: Vec<f64>,
    /// Largest `t` in `0..=T` with `x_t` in the good set.
    pub last_visit: Vec<Option<usize>>,
}

impl PathStats {
    pub fn trials(&self) -> usize {
        self.final_x.len()
    }

    pub fn never_hit(&self) -> usize {
        self.last_visit.iter().filter(|v| v.is_none()).count()
    }

    pub fn never_hit_fraction(&self) -> f64 {
        self.never_hit() as f64 / self.trials() as f64
    }

    /// Columns `trial, final_x, final_suboptimality, last_visit_t, hit_S`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "trial,final_x,final_suboptimality,last_visit_t,hit_S")?;
        for (i, ((x, f), v)) in self.final_x.iter().zip(&self.final_suboptimality).zip(&self.last_visit).enumerate() {
            let visit = v.map(|t| t.to_string()).unwrap_or_default();
            writeln!(w, "{i},{},{},{visit},{}", f17(*x), f17(*f), v.is_some())?;
        }
        Ok(())
    }
}

/// Runs `trials` independent paths of `T` fixed-size steps. Trial `i` draws
/// from stream `i` of `seed`, so the result does not depend on scheduling.
pub fn simulate_paths(
    inst: &NearlyLinearInstance,
    horizon: usize,
    trials: usize,
    start: StartPoint,
    seed: u64,
) -> Result<PathStats> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let good_set = inst.good_set(horizon)?;
    let step_size = inst.step_size(horizon);
    let schedule = StepSchedule::constant(step_size, horizon)?;
    let domain = inst.domain();
    if let StartPoint::Fixed(x0) = start {
        if !domain.contains(&[x0]) {
            return Err(Error::InfeasibleStart);
        }
    }
    let half = inst.diameter / 2.0;
    let outcomes: Vec<(f64, Option<usize>)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial as u64);
            let x0 = match start {
                StartPoint::Fixed(x) => x,
                StartPoint::Uniform => rng.random_range(-half..=half),
            };
            let mut last = good_set.contains(x0).then_some(0);
            let mut oracle = inst.oracle();
            let end = run_sgd_with(&mut oracle, &domain, &schedule, &[x0], horizon, &mut rng, |s| {
                if good_set.contains(s.next[0]) {
                    last = Some(s.t);
                }
            })?;
            Ok((end[0], last))
        })
        .collect::<Result<_>>()?;
    let final_x: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    Ok(PathStats {
        horizon,
        seed,
        start,
        step_size,
        good_set,
        final_suboptimality: final_x.iter().map(|&x| inst.suboptimality(x)).collect(),
        final_x,
        last_visit: outcomes.into_iter().map(|o| o.1).collect(),
    })
}

/// Sample mean of the final suboptimality and its standard error.
pub fn expected_suboptimality(stats: &PathStats) -> (f64, f64) {
    let v = &stats.final_suboptimality;
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    pub k: usize,
    pub count: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub rows: Vec<TailRow>,
    /// Least-squares slope of `ln Pr` against `k`.
    pub rate: f64,
    pub intercept: f64,
    pub fitted_points: usize,
}

/// `Pr[f(x_T) - f* >= k·GD/√T]` for `k = 0..=20` and the fitted log-decay
/// rate over `k >= 1` rows holding at least ten hits.
pub fn tail_estimate(stats: &PathStats, inst: &NearlyLinearInstance) -> Result<TailEstimate> {
    let unit = inst.threshold(stats.horizon);
    let n = stats.trials();
    let rows: Vec<TailRow> = (0..=TAIL_K_MAX)
        .map(|k| {
            let level = k as f64 * unit;
            let count = stats.final_suboptimality.iter().filter(|&&f| f >= level).count();
            TailRow { k, count, probability: count as f64 / n as f64 }
        })
        .collect();
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.k >= 1 && r.count >= MIN_TAIL_COUNT)
        .map(|r| (r.k as f64, r.probability.ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::InsufficientTrials(format!(
            "{} tail rows with at least {MIN_TAIL_COUNT} hits, need 2",
            points.len()
        )));
    }
    let (rate, intercept) = least_squares(&points);
    Ok(TailEstimate { rows, rate, intercept, fitted_points: points.len() })
}

pub(crate) fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// JSON summary of an `mc` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub instance: String,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub start: StartPoint,
    pub step_size: f64,
    pub good_set: GoodSet,
    pub mean: f64,
    pub se: f64,
    /// `mean·√T/(GD)`.
    pub scaled_mean: f64,
    pub never_hit: usize,
    pub tail: Vec<TailRow>,
    pub fitted_rate: Option<f64>,
}

impl McReport {
    pub fn new(stats: &PathStats, inst: &NearlyLinearInstance) -> Self {
        let (mean, se) = expected_suboptimality(stats);
        let tail = tail_estimate(stats, inst);
        let rows = match &tail {
            Ok(t) => t.rows.clone(),
            Err(_) => {
                let unit = inst.threshold(stats.horizon);
                (0..=TAIL_K_MAX)
                    .map(|k| {
                        let count = stats.final_suboptimality.iter().filter(|&&f| f >= k as f64 * unit).count();
                        TailRow { k, count, probability: count as f64 / stats.trials() as f64 }
                    })
                    .collect()
            }
        };
        Self {
            instance: inst.shape.to_string(),
            horizon: stats.horizon,
            trials: stats.trials(),
            seed: stats.seed,
            start: stats.start,
            step_size: stats.step_size,
            good_set: stats.good_set,
            mean,
            se,
            scaled_mean: mean / inst.threshold(stats.horizon),
            never_hit: stats.never_hit(),
            tail: rows,
            fitted_rate: tail.ok().map(|t| t.rate),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
