use serde::Serialize;

use super::{run_adversarial, AdversarialInstance, Family};
use crate::sgd::{norm, SgdTrace};
use crate::{Error, Result};

/// Outcome of comparing a trace with the closed-form iterates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryCheck {
    /// `max_t |x_t - z_t|_inf`.
    pub max_deviation: f64,
    /// First 1-based step whose deviation exceeds the tolerance.
    pub first_mismatch: Option<usize>,
    pub pass: bool,
}

pub fn verify_trajectory(inst: &AdversarialInstance, trace: &SgdTrace, tol: f64) -> Result<TrajectoryCheck> {
    let expected = inst.horizon() + 1;
    if trace.iterates.len() != expected {
        return Err(Error::LengthMismatch { expected, got: trace.iterates.len() });
    }
    if trace.dim() != inst.dim() {
        return Err(Error::DimensionMismatch { expected: inst.dim(), got: trace.dim() });
    }
    let mut max_deviation: f64 = 0.0;
    let mut first_mismatch = None;
    for (k, x) in trace.iterates.iter().enumerate() {
        let z = inst.closed_form_iterate(k + 1)?;
        let dev = x.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if (dev > tol || dev.is_nan()) && first_mismatch.is_none() {
            first_mismatch = Some(k + 1);
        }
        max_deviation = max_deviation.max(dev);
    }
    Ok(TrajectoryCheck { max_deviation, first_mismatch, pass: first_mismatch.is_none() })
}

/// Whether `final_value` clears the bound: strictly for `d >= 2`, and
/// non-strictly at `d = 1` where the bound is the single-term fallback.
pub fn bound_holds(d: usize, final_value: f64, bound: f64) -> bool {
    if d >= 2 {
        final_value > bound
    } else {
        final_value >= bound
    }
}

/// Result of running and checking one instance end to end.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub family: Family,
    pub d: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub max_deviation: f64,
    pub final_value: f64,
    pub bound: f64,
    pub pass: bool,
    pub first_mismatch: Option<usize>,
    pub bound_satisfied: bool,
    pub projections: usize,
    pub index_divergences: usize,
    pub claim_violations: Vec<String>,
}

impl VerificationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs the engine on `inst` and checks trajectory, final value and the
/// structural claims about the closed form.
pub fn verify_instance(inst: &AdversarialInstance, tol: f64) -> Result<VerificationReport> {
    let (trace, divergences) = run_adversarial(inst)?;
    let check = verify_trajectory(inst, &trace, tol)?;
    let final_value = trace.final_value();
    let bound = inst.lower_bound();
    let bound_satisfied = bound_holds(inst.dim(), final_value, bound);
    let projections = trace.projection_count();
    let claim_violations = claim_violations(inst);
    let pass = check.pass && bound_satisfied && projections == 0 && divergences.is_empty() && claim_violations.is_empty();
    Ok(VerificationReport {
        family: inst.family(),
        d: inst.dim(),
        horizon: inst.horizon(),
        max_deviation: check.max_deviation,
        final_value,
        bound,
        pass,
        first_mismatch: check.first_mismatch,
        bound_satisfied,
        projections,
        index_divergences: divergences.len(),
        claim_violations,
    })
}

// relative slack for the coordinate bounds, which are attained with equality
const CLAIM_SLACK: f64 = 1e-12;

/// Checks the structural facts about `z_t` that make the construction work:
/// support and coordinate bounds, norm bound, the marching active index and
/// strict dominance of the selected piece. Returns one message per violation.
pub fn claim_violations(inst: &AdversarialInstance) -> Vec<String> {
    let mut out = Vec::new();
    let kick = inst.kick_start();
    let root_t = (inst.horizon() as f64).sqrt();
    for t in 1..=inst.horizon() + 1 {
        let z = inst.closed_form_iterate(t).expect("t in range");
        let r = norm(&z);
        if r > 1.0 {
            out.push(format!("t={t}: |z_t| = {r} > 1"));
        }
        if t <= kick + 1 {
            if z.iter().any(|&v| v != 0.0) {
                out.push(format!("t={t}: z_t nonzero before the kick"));
            }
            continue;
        }
        let m = t - kick;
        for (j0, &v) in z.iter().enumerate() {
            let j = j0 + 1;
            if j >= m {
                if v != 0.0 {
                    out.push(format!("t={t}: z_(t,{j}) = {v} outside the support"));
                }
                continue;
            }
            let (lo, hi) = if inst.family().is_strongly_convex() {
                (1.0 / (2.0 * (t - 1) as f64), f64::INFINITY)
            } else {
                (1.0 / (4.0 * root_t), 1.0 / (2.0 * root_t))
            };
            if v < lo * (1.0 - CLAIM_SLACK) || v > hi * (1.0 + CLAIM_SLACK) {
                out.push(format!("t={t}: z_(t,{j}) = {v} outside [{lo}, {hi}]"));
            }
        }
        if inst.family().is_strongly_convex() && r * r > (1.0 + CLAIM_SLACK) / (t - 1) as f64 {
            out.push(format!("t={t}: |z_t|^2 = {} > 1/(t-1)", r * r));
        }
        if t <= inst.horizon() {
            match inst.active_set(&z).map(|a| a.min_nonzero()) {
                Ok(Some(i)) if i == m => {}
                other => out.push(format!("t={t}: selected index {other:?}, expected {m}")),
            }
        }
        // dominance of the selected piece over every earlier one
        let dot = |i: usize| inst.h(i).iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        let current = dot(m.min(inst.dim() + 1));
        for i in 1..m.min(inst.dim() + 2) {
            let gap = current - dot(i);
            if gap.is_nan() || gap <= 0.0 {
                out.push(format!("t={t}: piece {m} does not dominate piece {i} (gap {gap})"));
            }
        }
    }
    out
}
