use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::convex1d::{ConvexFn1d, PiecewiseLinear};
use crate::sgd::{FeasibleSet, GradientOracle};
use crate::{Error, Result};

/// Shape of a nearly linear instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// `ε·G·|x|`.
    Abs,
    /// Slope `-ratio·ε·G` left of zero and `ε·G` right of it.
    AsymAbs { slope_ratio: f64 },
    /// Arbitrary convex piecewise-linear profile, in absolute slopes.
    Piecewise(PiecewiseLinear),
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Abs => f.write_str("abs"),
            Self::AsymAbs { slope_ratio } => write!(f, "asym_abs:{slope_ratio}"),
            Self::Piecewise(p) => {
                let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
                write!(f, "piecewise:{}|{}", join(p.knots()), join(p.slopes()))
            }
        }
    }
}

impl FromStr for Shape {
    type Err = Error;

    /// `abs`, `asym_abs:RATIO` or `piecewise:K1;K2|S0;S1;S2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = s.split_once(':').unwrap_or((s, ""));
        match head {
            "abs" => Ok(Self::Abs),
            "asym_abs" | "asym" => {
                let slope_ratio = arg
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad slope ratio in `{s}`")))?;
                Ok(Self::AsymAbs { slope_ratio })
            }
            "piecewise" => match format!("piecewise:{arg}").parse::<crate::convex1d::Convex1d>()? {
                crate::convex1d::Convex1d::Piecewise(p) => Ok(Self::Piecewise(p)),
                _ => unreachable!(),
            },
            other => Err(Error::InvalidParameter(format!("unknown shape `{other}`"))),
        }
    }
}

/// Endpoints of the good set `{x : f(x) - f* <= threshold}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoodSet {
    pub s_left: f64,
    pub s_right: f64,
    pub threshold: f64,
}

impl GoodSet {
    pub fn contains(&self, x: f64) -> bool {
        self.s_left <= x && x <= self.s_right
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearlyLinearInstance {
    pub diameter: f64,
    pub g: f64,
    pub epsilon: f64,
    pub c: f64,
    pub shape: Shape,
    f: PiecewiseLinear,
    argmin: f64,
    f_star: f64,
}

impl NearlyLinearInstance {
    pub fn build(shape: Shape, diameter: f64, g: f64, epsilon: f64, c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidParameter(format!("c must lie in (0, 1], got {c}")));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        if !(diameter > 0.0 && diameter.is_finite() && g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(format!("need D, G > 0, got D = {diameter}, G = {g}")));
        }
        let scale = epsilon * g;
        let f = match &shape {
            Shape::Abs => PiecewiseLinear::kink(-scale, scale)?,
            Shape::AsymAbs { slope_ratio } => {
                if !(*slope_ratio > 0.0 && *slope_ratio <= 1.0) {
                    return Err(Error::InvalidParameter(format!("slope ratio must lie in (0, 1], got {slope_ratio}")));
                }
                PiecewiseLinear::kink(-slope_ratio * scale, scale)?
            }
            Shape::Piecewise(p) => p.clone(),
        };
        let lo = c * scale * (1.0 - 1e-12);
        let hi = scale * (1.0 + 1e-12);
        if let Some(s) = f.slopes().iter().find(|s| !(lo..=hi).contains(&s.abs())) {
            return Err(Error::InvalidParameter(format!(
                "slope {s} leaves the band [{}, {}]",
                c * scale,
                scale
            )));
        }
        let half = diameter / 2.0;
        let mut candidates = vec![-half, half];
        candidates.extend(f.knots().iter().copied().filter(|k| (-half..=half).contains(k)));
        let (argmin, f_star) = candidates
            .into_iter()
            .map(|x| (x, f.value(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
            .expect("at least the endpoints");
        Ok(Self { diameter, g, epsilon, c, shape, f, argmin, f_star })
    }

    pub fn abs(diameter: f64, g: f64, epsilon: f64) -> Result<Self> {
        Self::build(Shape::Abs, diameter, g, epsilon, 1.0)
    }

    pub fn domain(&self) -> FeasibleSet {
        FeasibleSet::Interval { lo: -self.diameter / 2.0, hi: self.diameter / 2.0 }
    }

    pub fn f(&self) -> &PiecewiseLinear {
        &self.f
    }

    pub fn value(&self, x: f64) -> f64 {
        self.f.value(x)
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    pub fn argmin(&self) -> f64 {
        self.argmin
    }

    pub fn suboptimality(&self, x: f64) -> f64 {
        self.f.value(x) - self.f_star
    }

    /// Conditional mean of the oracle: the right derivative.
    pub fn oracle_mean(&self, x: f64) -> f64 {
        self.f.right_derivative(x)
    }

    /// One oracle draw, `+G` with probability `(1 + mean/G)/2`, else `-G`.
    pub fn sample(&self, x: f64, rng: &mut dyn RngCore) -> f64 {
        let p_plus = 0.5 * (1.0 + self.oracle_mean(x) / self.g);
        if rng.random::<f64>() < p_plus {
            self.g
        } else {
            -self.g
        }
    }

    pub fn oracle(&self) -> InstanceOracle<'_> {
        InstanceOracle(self)
    }

    /// `η = 4D/(G√T)`.
    pub fn step_size(&self, horizon: usize) -> f64 {
        4.0 * self.diameter / (self.g * (horizon as f64).sqrt())
    }

    /// `GD/√T`.
    pub fn threshold(&self, horizon: usize) -> f64 {
        self.g * self.diameter / (horizon as f64).sqrt()
    }

    /// Good set for horizon `T`, endpoints found by bisection.
    pub fn good_set(&self, horizon: usize) -> Result<GoodSet> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        let threshold = self.threshold(horizon);
        let half = self.diameter / 2.0;
        let excess = |x: f64| self.suboptimality(x) - threshold;
        // excess is <= 0 at `inside` and > 0 at `outside`; bisect down to
        // adjacent floats so membership agrees with the sublevel test itself
        let bisect = |mut inside: f64, mut outside: f64| {
            loop {
                let mid = 0.5 * (inside + outside);
                if mid == inside || mid == outside {
                    break;
                }
                if excess(mid) <= 0.0 {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            inside
        };
        let s_left = if excess(-half) <= 0.0 { -half } else { bisect(self.argmin, -half) };
        let s_right = if excess(half) <= 0.0 { half } else { bisect(self.argmin, half) };
        Ok(GoodSet { s_left, s_right, threshold })
    }
}

/// Engine adapter around an instance's stochastic oracle.
#[derive(Debug, Clone, Copy)]
pub struct InstanceOracle<'a>(pub &'a NearlyLinearInstance);

impl GradientOracle for InstanceOracle<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.0.value(x[0])
    }

    fn query(&mut self, x: &[f64], _t: usize, rng: &mut dyn RngCore, grad: &mut [f64]) -> Result<()> {
        grad[0] = self.0.sample(x[0], rng);
        Ok(())
    }
}
