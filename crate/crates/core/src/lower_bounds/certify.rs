use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::AdversarialInstance;
use crate::sgd::{norm, seeded_rng};
use crate::{Error, Result};

pub const DEFAULT_CERTIFICATE_SAMPLES: usize = 10_000;

// absolute slack allowed in every sampled inequality
const SLACK: f64 = 1e-12;

/// Uniform sample from the unit ball of `R^d`: a normalised Gaussian
/// direction scaled by `U^(1/d)`.
pub fn sample_unit_ball<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let r = norm(&v);
        if r == 0.0 {
            continue;
        }
        let radius = rng.random::<f64>().powf(1.0 / d as f64);
        v.iter_mut().for_each(|c| *c *= radius / r);
        return v;
    }
}

/// Subgradient the oracle would pick at an arbitrary point: the smallest
/// nonzero active piece, or the zero piece when it is the only one active.
fn selected_subgradient(inst: &AdversarialInstance, x: &[f64]) -> Vec<f64> {
    let active = inst.active_unchecked(x);
    let i = active.min_nonzero().unwrap_or(0);
    inst.piece_gradient(i, x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzCertificate {
    pub lipschitz: f64,
    pub samples: usize,
    pub seed: u64,
    pub pass: bool,
    /// Largest `|f(x) - f(y)| / |x - y|` seen.
    pub worst_ratio: f64,
    /// Largest norm of a selected subgradient at a sampled point.
    pub max_subgradient_norm: f64,
    /// Pair `(x, y)` violating the difference bound, if any.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

/// Samples `samples` pairs in the unit ball and checks
/// `|f(x) - f(y)| <= L |x - y|` together with `|g| <= L` for the oracle's
/// subgradient at every sampled point.
pub fn check_lipschitz(inst: &AdversarialInstance, lipschitz: f64, samples: usize, seed: u64) -> Result<LipschitzCertificate> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut rng = seeded_rng(seed);
    let d = inst.dim();
    let mut worst_ratio: f64 = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut max_subgradient_norm: f64 = 0.0;
    let mut witness = None;
    for _ in 0..samples {
        let x = sample_unit_ball(&mut rng, d);
        let y = sample_unit_ball(&mut rng, d);
        let diff = (inst.value_unchecked(&x) - inst.value_unchecked(&y)).abs();
        let dist = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dist > 0.0 {
            worst_ratio = worst_ratio.max(diff / dist);
        }
        let excess = diff - lipschitz * dist;
        if excess > worst_excess {
            worst_excess = excess;
            if excess > SLACK {
                witness = Some((x.clone(), y.clone()));
            }
        }
        for p in [&x, &y] {
            max_subgradient_norm = max_subgradient_norm.max(norm(&selected_subgradient(inst, p)));
        }
    }
    let pass = witness.is_none() && max_subgradient_norm <= lipschitz + SLACK;
    Ok(LipschitzCertificate { lipschitz, samples, seed, pass, worst_ratio, max_subgradient_norm, witness })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongConvexityCertificate {
    pub alpha: f64,
    pub samples: usize,
    pub seed: u64,
    pub pass: bool,
    /// Smallest `f(y) - f(x) - g.(y - x) - alpha/2 |y - x|^2` seen.
    pub worst_slack: f64,
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

/// Checks the strong-convexity inequality with the oracle's subgradient
/// `g = h_i + x` on sampled pairs. Only meaningful for the strongly convex
/// family.
pub fn check_strong_convexity(
    inst: &AdversarialInstance,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> Result<StrongConvexityCertificate> {
    if !inst.family().is_strongly_convex() {
        return Err(Error::NotStronglyConvex);
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut rng = seeded_rng(seed);
    let d = inst.dim();
    let mut worst_slack = f64::INFINITY;
    let mut witness = None;
    for _ in 0..samples {
        let x = sample_unit_ball(&mut rng, d);
        let y = sample_unit_ball(&mut rng, d);
        let slack = strong_convexity_slack(inst, &x, &y, alpha);
        if slack < worst_slack {
            worst_slack = slack;
            if slack < -SLACK {
                witness = Some((x, y));
            }
        }
    }
    Ok(StrongConvexityCertificate { alpha, samples, seed, pass: witness.is_none(), worst_slack, witness })
}

pub(crate) fn strong_convexity_slack(inst: &AdversarialInstance, x: &[f64], y: &[f64], alpha: f64) -> f64 {
    let g = selected_subgradient(inst, x);
    let mut lin = 0.0;
    let mut sq = 0.0;
    for ((gi, xi), yi) in g.iter().zip(x).zip(y) {
        lin += gi * (yi - xi);
        sq += (yi - xi) * (yi - xi);
    }
    inst.value_unchecked(y) - inst.value_unchecked(x) - lin - 0.5 * alpha * sq
}

/// Smallest `f(y) - f(x) - g.(y - x)` over `samples` uniform `y` in the ball.
/// Nonnegative (up to rounding) iff `g` behaves as a subgradient at `x`.
pub fn subgradient_inequality_slack(inst: &AdversarialInstance, x: &[f64], g: &[f64], samples: usize, seed: u64) -> f64 {
    let mut rng = seeded_rng(seed);
    let fx = inst.value_unchecked(x);
    (0..samples)
        .map(|_| {
            let y = sample_unit_ball(&mut rng, inst.dim());
            let lin: f64 = g.iter().zip(&y).zip(x).map(|((gi, yi), xi)| gi * (yi - xi)).sum();
            inst.value_unchecked(&y) - fx - lin
        })
        .fold(f64::INFINITY, f64::min)
}
