use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use final_iterate::convex1d::ConvexFn1d;
use final_iterate::fmt::f17;
use final_iterate::lower_bounds::{
    bound_holds, check_lipschitz, check_strong_convexity, run_adversarial, verify_instance, verify_trajectory,
    AdversarialInstance, Family,
};
use final_iterate::montecarlo::{simulate_paths, McReport, NearlyLinearInstance};
use final_iterate::walk1d::{chain_from_function, WalkReport};

use crate::config::{Axis, Experiment, ExperimentConfig, Format};
use crate::error::{CliError, Result};

/// One failed check, named by its grid point or instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub reason: String,
}

impl Failure {
    fn grid(family: Family, d: usize, horizon: usize, reason: impl Into<String>) -> Self {
        Self { family: Some(family.to_string()), d: Some(d), instance: None, horizon, reason: reason.into() }
    }

    fn instance(instance: String, horizon: usize, reason: impl Into<String>) -> Self {
        Self { family: None, d: None, instance: Some(instance), horizon, reason: reason.into() }
    }
}

#[derive(Debug, Default)]
pub struct RunOutcome {
    pub failures: Vec<Failure>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Machine-readable report for stderr.
    pub fn failure_report(&self, command: &str) -> String {
        serde_json::to_string_pretty(&json!({ "status": "fail", "command": command, "failures": self.failures }))
            .expect("plain data")
    }
}

/// One row of a lower-bound sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub family: Family,
    pub d: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub final_value: f64,
    pub bound: f64,
    pub ratio: f64,
    pub max_deviation: f64,
    pub pass: bool,
}

/// `x,final_suboptimality,bound` rows sorted by the chosen axis.
pub fn emit_curve(rows: &[SweepRow], axis: Axis) -> Result<String> {
    if rows.is_empty() {
        return Err(CliError::Usage("no sweep results to plot".into()));
    }
    let key = |r: &SweepRow| match axis {
        Axis::D => r.d,
        Axis::T => r.horizon,
    };
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by_key(|r| key(r));
    let mut out = String::from("x,final_suboptimality,bound\n");
    for r in sorted {
        writeln!(out, "{},{},{}", key(r), f17(r.final_value), f17(r.bound)).unwrap();
    }
    Ok(out)
}

fn sweep_rows(families: &[Family], ds: &[usize], horizons: &[usize], tol: f64) -> Result<Vec<SweepRow>> {
    let grid: Vec<(Family, usize, usize)> = families
        .iter()
        .flat_map(|&f| ds.iter().flat_map(move |&d| horizons.iter().map(move |&t| (f, d, t))))
        .collect();
    grid.into_par_iter()
        .map(|(family, d, horizon)| {
            let inst = AdversarialInstance::build(family, d, horizon)?;
            let (trace, _) = run_adversarial(&inst)?;
            let check = verify_trajectory(&inst, &trace, tol)?;
            let final_value = trace.final_value();
            let bound = inst.lower_bound();
            Ok(SweepRow {
                family,
                d,
                horizon,
                final_value,
                bound,
                ratio: final_value / bound,
                max_deviation: check.max_deviation,
                pass: check.pass && bound_holds(d, final_value, bound),
            })
        })
        .collect()
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("family,d,T,final_value,bound,ratio,pass\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.family,
            r.d,
            r.horizon,
            f17(r.final_value),
            f17(r.bound),
            f17(r.ratio),
            r.pass
        )
        .unwrap();
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value).map_err(final_iterate::Error::from)? + "\n")
}

/// Runs one experiment, writing its artifact to `--out` or to `stdout`.
pub fn run_experiment(cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<RunOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cfg.jobs.unwrap_or(0))))?;
    let (body, outcome) = pool.install(|| render(cfg))?;
    match &cfg.out {
        Some(path) => std::fs::write(path, body)?,
        None => stdout.write_all(body.as_bytes())?,
    }
    Ok(outcome)
}

fn render(cfg: &ExperimentConfig) -> Result<(String, RunOutcome)> {
    let mut outcome = RunOutcome::default();
    let body = match &cfg.experiment {
        Experiment::LowerBound { family, d, horizon, dump } => {
            let inst = AdversarialInstance::build(*family, *d, *horizon)?;
            let (trace, _) = run_adversarial(&inst)?;
            let final_value = trace.final_value();
            let bound = inst.lower_bound();
            let pass = bound_holds(*d, final_value, bound);
            if !pass {
                outcome.failures.push(Failure::grid(
                    *family,
                    *d,
                    *horizon,
                    format!("final value {final_value:e} does not exceed bound {bound:e}"),
                ));
            }
            if let Some(path) = dump {
                let mut buf = Vec::new();
                inst.write_dump(&mut buf)?;
                std::fs::write(path, buf)?;
            }
            match cfg.format {
                Format::Csv => trace.to_csv_string(),
                Format::Json => to_json(&json!({
                    "family": family, "d": d, "T": horizon, "final_value": final_value,
                    "bound": bound, "ratio": final_value / bound, "pass": pass,
                }))?,
            }
        }
        Experiment::Verify { family, d, horizon, tol } => {
            let inst = AdversarialInstance::build(*family, *d, *horizon)?;
            let report = verify_instance(&inst, *tol)?;
            if !report.pass {
                let mut reasons = Vec::new();
                if let Some(t) = report.first_mismatch {
                    reasons.push(format!("trajectory deviates from step {t} (max {:e})", report.max_deviation));
                }
                if !report.bound_satisfied {
                    reasons.push("bound not exceeded".to_string());
                }
                if report.projections > 0 {
                    reasons.push(format!("{} projections", report.projections));
                }
                if report.index_divergences > 0 {
                    reasons.push(format!("{} oracle index divergences", report.index_divergences));
                }
                reasons.extend(report.claim_violations.iter().cloned());
                outcome.failures.push(Failure::grid(*family, *d, *horizon, reasons.join("; ")));
            }
            match cfg.format {
                Format::Json => to_json(&report)?,
                Format::Csv => format!(
                    "family,d,T,max_deviation,final_value,bound,pass\n{},{},{},{},{},{},{}\n",
                    family,
                    d,
                    horizon,
                    f17(report.max_deviation),
                    f17(report.final_value),
                    f17(report.bound),
                    report.pass
                ),
            }
        }
        Experiment::Certify { family, d, horizon, samples } => {
            let inst = AdversarialInstance::build(*family, *d, *horizon)?;
            let lip = check_lipschitz(&inst, family.lipschitz_constant(), *samples, cfg.seed)?;
            let strong =
                if family.is_strongly_convex() { Some(check_strong_convexity(&inst, 1.0, *samples, cfg.seed)?) } else { None };
            if !lip.pass {
                outcome.failures.push(Failure::grid(
                    *family,
                    *d,
                    *horizon,
                    format!("Lipschitz constant {} exceeded (ratio {:e})", lip.lipschitz, lip.worst_ratio),
                ));
            }
            if let Some(sc) = strong.as_ref().filter(|sc| !sc.pass) {
                outcome.failures.push(Failure::grid(
                    *family,
                    *d,
                    *horizon,
                    format!("strong convexity slack {:e}", sc.worst_slack),
                ));
            }
            match cfg.format {
                Format::Json => to_json(&json!({
                    "family": family, "d": d, "T": horizon, "lipschitz": lip, "strong_convexity": strong,
                }))?,
                Format::Csv => {
                    let mut out = String::from("family,d,T,check,constant,worst,pass\n");
                    let worst = lip.worst_ratio.max(lip.max_subgradient_norm);
                    writeln!(out, "{family},{d},{horizon},lipschitz,{},{},{}", f17(lip.lipschitz), f17(worst), lip.pass)
                        .unwrap();
                    if let Some(sc) = &strong {
                        writeln!(
                            out,
                            "{family},{d},{horizon},strong_convexity,{},{},{}",
                            f17(sc.alpha),
                            f17(sc.worst_slack),
                            sc.pass
                        )
                        .unwrap();
                    }
                    out
                }
            }
        }
        Experiment::Walk { n, profile, method } => {
            let chain = chain_from_function(profile, *n)?;
            let report = WalkReport::new(&chain, profile as &dyn ConvexFn1d, profile.to_string(), *method)?;
            if !report.pass {
                outcome.failures.push(Failure::instance(
                    profile.to_string(),
                    report.horizon,
                    format!("stationary suboptimality {:e} above bound {:e}", report.suboptimality, report.bound_value),
                ));
            }
            match cfg.format {
                Format::Json => report.to_json()? + "\n",
                Format::Csv => {
                    let mut buf = Vec::new();
                    report.write_csv(&mut buf)?;
                    String::from_utf8(buf).expect("ascii")
                }
            }
        }
        Experiment::Mc { shape, diameter, g, epsilon, c, horizon, trials, start, bound_constant } => {
            let inst = NearlyLinearInstance::build(shape.clone(), *diameter, *g, *epsilon, *c)?;
            let stats = simulate_paths(&inst, *horizon, *trials, *start, cfg.seed)?;
            let report = McReport::new(&stats, &inst);
            if let Some(constant) = bound_constant {
                let limit = constant * inst.threshold(*horizon);
                if report.mean > limit {
                    outcome.failures.push(Failure::instance(
                        shape.to_string(),
                        *horizon,
                        format!("mean suboptimality {:e} above {constant} GD/sqrt(T) = {limit:e}", report.mean),
                    ));
                }
            }
            match cfg.format {
                Format::Json => report.to_json()? + "\n",
                Format::Csv => {
                    let mut buf = Vec::new();
                    stats.write_csv(&mut buf)?;
                    String::from_utf8(buf).expect("ascii")
                }
            }
        }
        Experiment::Sweep { families, d, horizons, tol, curve } => {
            let rows = sweep_rows(families, d, horizons, *tol)?;
            for r in rows.iter().filter(|r| !r.pass) {
                outcome.failures.push(Failure::grid(
                    r.family,
                    r.d,
                    r.horizon,
                    format!(
                        "final value {:e} vs bound {:e}, trajectory deviation {:e}",
                        r.final_value, r.bound, r.max_deviation
                    ),
                ));
            }
            if let Some((path, axis)) = curve {
                std::fs::write(path, emit_curve(&rows, *axis)?)?;
            }
            match cfg.format {
                Format::Csv => sweep_csv(&rows),
                Format::Json => to_json(&rows)?,
            }
        }
    };
    Ok((body, outcome))
}
