//! Adversarial instances that keep the final iterate of subgradient descent
//! far from optimal.
//!
//! Every instance lives on the unit ball of `R^d` and is a maximum of
//! `d + 2` pieces `H_0..H_{d+1}`:
//!
//! ```text
//! H_i(x) = <h_i, x>            (Lipschitz families)
//! H_i(x) = <h_i, x> + |x|^2/2  (strongly convex family)
//! ```
//!
//! with `h_0 = 0` and, for `i >= 1`, `h_{i,j} = a_j` left of the diagonal,
//! `-1` (resp. `-b_i`) on it and `0` right of it. The oracle returns zero for
//! the first `T - d` steps, which pins the iterate at the origin, and then
//! the piece with the smallest nonzero active index. The resulting iterates
//! have a closed form, see [`AdversarialInstance::closed_form_iterate`].

mod certify;
mod oracle;
mod verify;

pub use certify::{
    check_lipschitz, check_strong_convexity, sample_unit_ball, subgradient_inequality_slack, LipschitzCertificate,
    StrongConvexityCertificate, DEFAULT_CERTIFICATE_SAMPLES,
};
pub use oracle::{run_adversarial, AdversarialOracle, IndexDivergence};
pub use verify::{
    bound_holds, claim_violations, verify_instance, verify_trajectory, TrajectoryCheck, VerificationReport,
};

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fmt::f17;
use crate::sgd::{norm, StepSchedule};
use crate::{Error, Result};

/// Ties between pieces are detected with this absolute tolerance.
pub const ACTIVE_TOLERANCE: f64 = 1e-10;

// admissible points may exceed the unit sphere by rounding only
const DOMAIN_SLACK: f64 = 1e-12;

/// Which of the three constructions an instance follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// 3-Lipschitz, 1-strongly convex, `eta_t = 1/t`.
    #[serde(rename = "sc")]
    StronglyConvex,
    /// 1-Lipschitz, `eta_t = 1/sqrt(t)`.
    #[serde(rename = "lip-dec")]
    LipschitzDecreasing,
    /// 1-Lipschitz, `eta_t = 1/sqrt(T)`.
    #[serde(rename = "lip-fixed")]
    LipschitzFixed,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::StronglyConvex, Family::LipschitzDecreasing, Family::LipschitzFixed];

    pub fn slug(self) -> &'static str {
        match self {
            Self::StronglyConvex => "sc",
            Self::LipschitzDecreasing => "lip-dec",
            Self::LipschitzFixed => "lip-fixed",
        }
    }

    pub fn is_strongly_convex(self) -> bool {
        self == Self::StronglyConvex
    }

    /// Lipschitz constant the construction is certified for.
    pub fn lipschitz_constant(self) -> f64 {
        if self.is_strongly_convex() {
            3.0
        } else {
            1.0
        }
    }

    /// The step schedule the construction is built against.
    pub fn schedule(self, horizon: usize) -> Result<StepSchedule> {
        match self {
            Self::StronglyConvex => StepSchedule::inverse_t(horizon),
            Self::LipschitzDecreasing => StepSchedule::inverse_sqrt_t(horizon),
            Self::LipschitzFixed => StepSchedule::fixed_inverse_sqrt(horizon),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sc" | "strongly-convex" => Ok(Self::StronglyConvex),
            "lip-dec" | "lipschitz-decreasing" => Ok(Self::LipschitzDecreasing),
            "lip-fixed" | "lipschitz-fixed" => Ok(Self::LipschitzFixed),
            other => Err(Error::InvalidParameter(format!(
                "unknown family `{other}` (expected sc, lip-dec or lip-fixed)"
            ))),
        }
    }
}

/// Indices `i` with `H_i(x) >= f(x) - ACTIVE_TOLERANCE`, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActiveSet {
    pub indices: Vec<usize>,
}

impl ActiveSet {
    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Smallest active index other than the zero piece.
    pub fn min_nonzero(&self) -> Option<usize> {
        self.indices.iter().copied().find(|&i| i != 0)
    }
}

fn check_dims(d: usize, horizon: usize) -> Result<()> {
    if d < 1 {
        return Err(Error::InvalidParameter("dimension d must be at least 1".into()));
    }
    if d > horizon {
        return Err(Error::InvalidParameter(format!("dimension d={d} exceeds horizon T={horizon}")));
    }
    Ok(())
}

/// One adversarial instance with all coefficient tables materialised.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversarialInstance {
    family: Family,
    d: usize,
    horizon: usize,
    a: Vec<f64>,
    b: Option<Vec<f64>>,
    /// `h[i]` for `i = 0..=d+1`, each of length `d`.
    h: Vec<Vec<f64>>,
}

impl AdversarialInstance {
    pub fn build(family: Family, d: usize, horizon: usize) -> Result<Self> {
        check_dims(d, horizon)?;
        let tf = horizon as f64;
        let kick = horizon - d;
        let a: Vec<f64> = (1..=d)
            .map(|j| {
                let m = (d + 1 - j) as f64;
                if family.is_strongly_convex() {
                    1.0 / (2.0 * m)
                } else {
                    1.0 / (8.0 * m)
                }
            })
            .collect();
        let b = match family {
            Family::StronglyConvex => None,
            Family::LipschitzDecreasing => {
                Some((1..=d).map(|j| ((j + kick) as f64).sqrt() / (2.0 * tf.sqrt())).collect())
            }
            Family::LipschitzFixed => Some(vec![0.5; d]),
        };
        let diagonal = |i: usize| b.as_ref().map_or(-1.0, |b: &Vec<f64>| -b[i - 1]);
        let h = (0..=d + 1)
            .map(|i| {
                (1..=d)
                    .map(|j| match i {
                        0 => 0.0,
                        _ if j < i => a[j - 1],
                        _ if j == i => diagonal(i),
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        Ok(Self { family, d, horizon, a, b, h })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `T* = T - d`, the number of zero-gradient steps.
    pub fn kick_start(&self) -> usize {
        self.horizon - self.d
    }

    /// `a_1..a_d`.
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// `b_1..b_d`; `None` for the strongly convex family.
    pub fn b(&self) -> Option<&[f64]> {
        self.b.as_deref()
    }

    /// `h_i` for `i = 0..=d+1`.
    pub fn h(&self, i: usize) -> &[f64] {
        &self.h[i]
    }

    pub fn schedule(&self) -> StepSchedule {
        self.family.schedule(self.horizon).expect("horizon is positive")
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.len() });
        }
        let r = norm(x);
        if r.is_nan() || r > 1.0 + DOMAIN_SLACK {
            return Err(Error::OutsideDomain { norm: r });
        }
        Ok(())
    }

    // no domain check; certificate sampling and the oracle share this
    pub(crate) fn pieces_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let quad = if self.family.is_strongly_convex() { 0.5 * x.iter().map(|v| v * v).sum::<f64>() } else { 0.0 };
        self.h.iter().map(|h| h.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + quad).collect()
    }

    /// `H_0(x)..H_{d+1}(x)`.
    pub fn piece_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(self.pieces_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        self.pieces_unchecked(x).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `f(x) = max_i H_i(x)`.
    pub fn eval_f(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn active_unchecked(&self, x: &[f64]) -> ActiveSet {
        let pieces = self.pieces_unchecked(x);
        let f = pieces.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let indices = pieces.iter().enumerate().filter(|(_, &v)| v >= f - ACTIVE_TOLERANCE).map(|(i, _)| i).collect();
        ActiveSet { indices }
    }

    pub fn active_set(&self, x: &[f64]) -> Result<ActiveSet> {
        self.check_point(x)?;
        Ok(self.active_unchecked(x))
    }

    /// Gradient of piece `i` at `x`: `h_i` (+ `x` for the strongly convex family).
    pub fn piece_gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let mut g = self.h[i].clone();
        if self.family.is_strongly_convex() {
            g.iter_mut().zip(x).for_each(|(g, v)| *g += v);
        }
        g
    }

    /// Output of the adversarial oracle at `x` on step `t`.
    pub fn oracle_subgradient(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        if t == 0 || t > self.horizon {
            return Err(Error::StepOutOfRange { step: t, horizon: self.horizon });
        }
        self.check_point(x)?;
        if t <= self.kick_start() {
            return Ok(vec![0.0; self.d]);
        }
        let i = self.active_unchecked(x).min_nonzero().ok_or(Error::EmptyActiveSet { step: t })?;
        Ok(self.piece_gradient(i, x))
    }

    /// Predicted iterate `z_t` for `t = 1..=T+1`.
    pub fn closed_form_iterate(&self, t: usize) -> Result<Vec<f64>> {
        if t == 0 || t > self.horizon + 1 {
            return Err(Error::StepOutOfRange { step: t, horizon: self.horizon + 1 });
        }
        let kick = self.kick_start();
        let mut z = vec![0.0; self.d];
        if t <= kick + 1 {
            return Ok(z);
        }
        let root_t = (self.horizon as f64).sqrt();
        // coordinates j < t - T* are populated (1-based)
        for j in 1..(t - kick) {
            let a = self.a[j - 1];
            z[j - 1] = match self.family {
                Family::StronglyConvex => (1.0 - (t - kick - j - 1) as f64 * a) / (t - 1) as f64,
                Family::LipschitzDecreasing => {
                    let b = self.b.as_ref().expect("lip-dec has b")[j - 1];
                    let tail: f64 = (j + kick + 1..t).map(|k| 1.0 / (k as f64).sqrt()).sum();
                    b / ((j + kick) as f64).sqrt() - a * tail
                }
                Family::LipschitzFixed => {
                    let b = self.b.as_ref().expect("lip-fixed has b")[j - 1];
                    b / root_t - a * (t - j - kick - 1) as f64 / root_t
                }
            };
        }
        Ok(z)
    }

    /// `z_1..z_{T+1}`.
    pub fn closed_form_trajectory(&self) -> Vec<Vec<f64>> {
        (1..=self.horizon + 1).map(|t| self.closed_form_iterate(t).expect("t in range")).collect()
    }

    pub fn lower_bound(&self) -> f64 {
        lower_bound_value(self.family, self.d, self.horizon).expect("dimensions validated at build")
    }

    /// Writes the `(i, j, h_value)` table with `# family=`, `# d=`, `# T=` header lines.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# family={}", self.family)?;
        writeln!(w, "# d={}", self.d)?;
        writeln!(w, "# T={}", self.horizon)?;
        writeln!(w, "i,j,h_value")?;
        for (i, h) in self.h.iter().enumerate() {
            for (j, v) in h.iter().enumerate() {
                writeln!(w, "{i},{},{}", j + 1, f17(*v))?;
            }
        }
        Ok(())
    }
}

/// Guaranteed lower bound on `f(x_{T+1}) - min f`.
///
/// `ln d / (5T)` for the strongly convex family and `ln d / (32 sqrt(T))`
/// for the Lipschitz ones. At `d = 1` the logarithm vanishes; the harmonic
/// sum it replaces is then a single term, giving `1/(4T)` and
/// `1/(32 sqrt(T))`.
pub fn lower_bound_value(family: Family, d: usize, horizon: usize) -> Result<f64> {
    check_dims(d, horizon)?;
    let tf = horizon as f64;
    let df = d as f64;
    Ok(match (family.is_strongly_convex(), d) {
        (true, 1) => 1.0 / (4.0 * tf),
        (true, _) => df.ln() / (5.0 * tf),
        (false, 1) => 1.0 / (32.0 * tf.sqrt()),
        (false, _) => df.ln() / (32.0 * tf.sqrt()),
    })
}
