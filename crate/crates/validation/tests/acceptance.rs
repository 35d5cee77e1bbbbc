//! Acceptance suite. One line per criterion, `PASS` or `FAIL`, then a
//! nonzero exit if anything failed.
//!
//! Run with `cargo test -p final-iterate-validation --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use final_iterate::convex1d::Convex1d;
use final_iterate::lower_bounds::{
    bound_holds, check_lipschitz, check_strong_convexity, run_adversarial, verify_trajectory, AdversarialInstance,
    Family,
};
use final_iterate::montecarlo::{
    expected_suboptimality, grid_walk_time_average, simulate_paths, tail_estimate, NearlyLinearInstance, StartPoint,
};
use final_iterate::sgd::seeded_rng;
use final_iterate::walk1d::{
    chain_from_function, stationary_bound, stationary_closed_form, stationary_solve, stationary_suboptimality,
    StationaryMethod, WalkChain,
};

const TRAJECTORY_TOL: f64 = 1e-9;
const CERT_SAMPLES: usize = 10_000;
const CERT_SEED: u64 = 0;
const AGREEMENT_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-12;
const MC_SEED: u64 = 0;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn grid() -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d in [1, 2, 4, 8, 16, 32, 64] {
        for t in [d.max(64), 1024, 4096] {
            out.push((d, t));
        }
    }
    out
}

fn instances(families: &[Family]) -> Vec<AdversarialInstance> {
    families
        .iter()
        .flat_map(|&f| grid().into_iter().map(move |(d, t)| AdversarialInstance::build(f, d, t).unwrap()))
        .collect()
}

// (instance, max deviation, pass, final value)
fn run_grid(families: &[Family]) -> Vec<(AdversarialInstance, f64, bool, f64)> {
    instances(families)
        .into_par_iter()
        .map(|inst| {
            let (trace, _) = run_adversarial(&inst).unwrap();
            let check = verify_trajectory(&inst, &trace, TRAJECTORY_TOL).unwrap();
            let final_value = trace.final_value();
            (inst, check.max_deviation, check.pass, final_value)
        })
        .collect()
}

fn label(inst: &AdversarialInstance) -> String {
    format!("({}, d={}, T={})", inst.family(), inst.dim(), inst.horizon())
}

fn trajectory_identity(families: &[Family], time_limit: Option<f64>) -> Outcome {
    let start = Instant::now();
    let runs = run_grid(families);
    let elapsed = start.elapsed().as_secs_f64();
    let worst = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    let failures: Vec<String> = runs.iter().filter(|r| !r.2).map(|r| label(&r.0)).collect();
    let in_time = time_limit.is_none_or(|limit| elapsed < limit);
    outcome(
        failures.is_empty() && in_time,
        format!(
            "{} instances, max |x - z|_inf = {worst:.3e} (tol {TRAJECTORY_TOL:e}), {elapsed:.2} s{}{}",
            runs.len(),
            time_limit.map(|l| format!(" (limit {l} s)")).unwrap_or_default(),
            if failures.is_empty() { String::new() } else { format!(", mismatches: {}", failures.join(" ")) }
        ),
    )
}

fn lower_bound_inequality(families: &[Family], min_d: usize) -> Outcome {
    let runs = run_grid(families);
    let mut failures = Vec::new();
    let mut tightest = f64::INFINITY;
    let mut checked = 0;
    for (inst, _, _, value) in runs.iter().filter(|r| r.0.dim() >= min_d) {
        let bound = inst.lower_bound();
        checked += 1;
        tightest = tightest.min(value / bound);
        if !bound_holds(inst.dim(), *value, bound) {
            failures.push(format!("{} f={value:e} bound={bound:e}", label(inst)));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{checked} instances, smallest f(x_(T+1)) / bound = {tightest:.4}{}",
            if failures.is_empty() { String::new() } else { format!(", violations: {}", failures.join("; ")) }
        ),
    )
}

fn certificates() -> Outcome {
    let results: Vec<(String, bool, f64)> = instances(&Family::ALL)
        .into_par_iter()
        .map(|inst| {
            let l = inst.family().lipschitz_constant();
            let lip = check_lipschitz(&inst, l, CERT_SAMPLES, CERT_SEED).unwrap();
            let mut pass = lip.pass;
            let mut margin = l - lip.worst_ratio.max(lip.max_subgradient_norm);
            if inst.family().is_strongly_convex() {
                let sc = check_strong_convexity(&inst, 1.0, CERT_SAMPLES, CERT_SEED).unwrap();
                pass &= sc.pass;
                margin = margin.min(sc.worst_slack);
            }
            (label(&inst), pass, margin)
        })
        .collect();
    let failures: Vec<&str> = results.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect();
    let margin = results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    outcome(
        failures.is_empty(),
        format!(
            "{} instances x {CERT_SAMPLES} pairs (seed {CERT_SEED}), smallest margin {margin:.3e} (slack 1e-12){}",
            results.len(),
            if failures.is_empty() { String::new() } else { format!(", failing: {}", failures.join(" ")) }
        ),
    )
}

fn log_growth() -> Outcome {
    let horizon = 4096;
    let points: Vec<(f64, f64)> = [2, 4, 8, 16, 32, 64]
        .iter()
        .map(|&d| {
            let inst = AdversarialInstance::build(Family::StronglyConvex, d, horizon).unwrap();
            let (trace, _) = run_adversarial(&inst).unwrap();
            ((d as f64).ln(), trace.final_value() * 5.0 * horizon as f64)
        })
        .collect();
    let increasing = points.windows(2).all(|w| w[1].1 > w[0].1);
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    outcome(
        increasing && (0.8..=2.0).contains(&slope),
        format!("slope of 5T f(x_(T+1)) on ln d = {slope:.4} (band [0.8, 2.0]), increasing in d: {increasing}"),
    )
}

fn random_profile(rng: &mut impl Rng, n: usize, saturate: bool) -> Vec<f64> {
    let mut a: Vec<f64> = (0..=n).map(|_| rng.random_range(0.5..=1.0)).collect();
    a.sort_by(f64::total_cmp);
    if saturate {
        // push the top of the profile onto a_j = 1
        a.iter_mut().filter(|v| **v > 0.97).for_each(|v| *v = 1.0);
    }
    a
}

fn stationary_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded_rng(7);
    let mut cases = Vec::new();
    for n in [10, 100, 1000] {
        for k in 0..200 {
            cases.push(random_profile(&mut rng, n, k % 5 == 4));
        }
    }
    let results: Vec<(f64, f64, f64)> = cases
        .into_par_iter()
        .map(|a| {
            let chain = WalkChain::new(a).unwrap();
            let closed = stationary_closed_form(&chain).unwrap();
            let solved = stationary_solve(&chain, StationaryMethod::LinearSolve).unwrap();
            let gap = closed.p.iter().zip(&solved.p).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            (gap, closed.residual, solved.residual)
        })
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let gap = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let closed_res = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let solved_res = results.iter().map(|r| r.2).fold(0.0, f64::max);
    outcome(
        gap <= AGREEMENT_TOL && closed_res <= RESIDUAL_TOL && solved_res <= AGREEMENT_TOL && elapsed < 30.0,
        format!(
            "{} profiles (200 per n in {{10, 100, 1000}}), max |p_closed - p_solve| = {gap:.3e}, residuals closed {closed_res:.3e} / solve {solved_res:.3e}, {elapsed:.2} s (limit 30 s)",
            results.len()
        ),
    )
}

fn corpus() -> Vec<Convex1d> {
    let mut out: Vec<Convex1d> = [0.0, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0].iter().map(|&s| Convex1d::linear(s)).collect();
    out.push(Convex1d::HalfSquare);
    for delta in [0.01, 0.1, 0.5, 1.0] {
        out.push(Convex1d::huber(delta).unwrap());
    }
    for p in [1.0, 1.5, 2.0, 3.0, 6.0] {
        out.push(Convex1d::power(p).unwrap());
    }
    for text in ["piecewise:0.5|0;1", "piecewise:0.3;0.7|0;0.4;1", "piecewise:0.1;0.2;0.9|0.05;0.3;0.6;0.95"] {
        out.push(text.parse().unwrap());
    }
    out
}

fn stationary_bound_sweep() -> Outcome {
    let mut worst = (0.0, String::new());
    let mut failures = Vec::new();
    let functions = corpus();
    for f in &functions {
        for n in [10, 50, 100, 500, 1000] {
            let chain = chain_from_function(f, n).unwrap();
            let p = stationary_closed_form(&chain).unwrap();
            let value = stationary_suboptimality(&p, f);
            let bound = stationary_bound(n);
            if value / bound > worst.0 {
                worst = (value / bound, format!("{f}, n={n}"));
            }
            if value > bound {
                failures.push(format!("{f} n={n}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} functions x 5 grid sizes, largest value / bound = {:.4} at {}{}",
            functions.len(),
            worst.0,
            worst.1,
            if failures.is_empty() { String::new() } else { format!(", violations: {}", failures.join("; ")) }
        ),
    )
}

fn abs_unit() -> NearlyLinearInstance {
    NearlyLinearInstance::abs(1.0, 1.0, 1.0).unwrap()
}

fn mc_scaling() -> Outcome {
    let start = Instant::now();
    let inst = abs_unit();
    let scaled: Vec<(usize, f64)> = [100, 400, 1600, 6400]
        .iter()
        .map(|&t| {
            let stats = simulate_paths(&inst, t, 10_000, StartPoint::Uniform, MC_SEED).unwrap();
            let (mean, _) = expected_suboptimality(&stats);
            (t, mean * (t as f64).sqrt() / (inst.g * inst.diameter))
        })
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let hi = scaled.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = scaled.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let table: Vec<String> = scaled.iter().map(|(t, s)| format!("T={t}: {s:.4}")).collect();
    outcome(
        lo > 0.0 && hi / lo <= 2.0 && elapsed < 120.0,
        format!(
            "mean sqrt(T)/(GD) {}, max/min = {:.4} (limit 2), uniform start, 10^4 trials, {elapsed:.2} s (limit 120 s)",
            table.join(", "),
            hi / lo
        ),
    )
}

fn tail_decay() -> Outcome {
    let inst = abs_unit();
    let stats = simulate_paths(&inst, 400, 100_000, StartPoint::Uniform, MC_SEED).unwrap();
    match tail_estimate(&stats, &inst) {
        Ok(tail) => outcome(
            tail.rate < 0.0,
            format!(
                "fitted log-tail slope {:.4} over {} rows (T=400, 10^5 trials, uniform start)",
                tail.rate, tail.fitted_points
            ),
        ),
        Err(e) => outcome(false, format!("no fit: {e}")),
    }
}

fn never_hit() -> Outcome {
    let inst = abs_unit();
    let x0 = inst.diameter / 2.0;
    let counts: Vec<(usize, usize)> = [100, 400, 1600]
        .iter()
        .map(|&t| (t, simulate_paths(&inst, t, 10_000, StartPoint::Fixed(x0), MC_SEED).unwrap().never_hit()))
        .collect();
    let at_400 = counts[1].1;
    let nonincreasing = counts.windows(2).all(|w| w[1].1 <= w[0].1);
    let table: Vec<String> = counts.iter().map(|(t, c)| format!("T={t}: {c}")).collect();
    outcome(
        at_400 < 10 && nonincreasing,
        format!(
            "never-hit paths out of 10^4 from x0 = D/2: {} (need < 10 at T=400 and nonincreasing)",
            table.join(", ")
        ),
    )
}

fn cross_check() -> Outcome {
    let n = 100;
    let mut rows = Vec::new();
    let mut pass = true;
    for eps in [0.1, 0.5] {
        let f = Convex1d::linear(eps);
        let chain = chain_from_function(&f, n).unwrap();
        let stationary = stationary_suboptimality(&stationary_closed_form(&chain).unwrap(), &f);
        let simulated = grid_walk_time_average(&f, n, n, 50 * n * n, n * n, MC_SEED).unwrap();
        let gap = (simulated - stationary).abs();
        pass &= gap <= 0.01;
        rows.push(format!("eps={eps}: walk {simulated:.5} vs stationary {stationary:.5} (gap {gap:.2e})"));
    }
    outcome(pass, format!("n={n}, {} (tol 0.01)", rows.join(", ")))
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("trajectory identity, sc", || trajectory_identity(&[Family::StronglyConvex], Some(10.0))),
        ("trajectory identity, lip-dec and lip-fixed", || {
            trajectory_identity(&[Family::LipschitzDecreasing, Family::LipschitzFixed], None)
        }),
        ("lower bound ln d/(5T), sc", || lower_bound_inequality(&[Family::StronglyConvex], 1)),
        ("lower bound ln d/(32 sqrt T), lip-dec and lip-fixed", || {
            lower_bound_inequality(&[Family::LipschitzDecreasing, Family::LipschitzFixed], 2)
        }),
        ("Lipschitz and strong convexity certificates", certificates),
        ("log growth in d, sc at T=4096", log_growth),
        ("stationary closed form vs linear solve", stationary_equivalence),
        ("stationary suboptimality <= (2+24e)/n", stationary_bound_sweep),
        ("Monte Carlo mean scales as 1/sqrt(T)", mc_scaling),
        ("tail decay", tail_decay),
        ("never-hit rarity", never_hit),
        ("grid walk vs stationary cross-check", cross_check),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = run();
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} [{}] {name}: {}",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
