//! One-dimensional convex functions with exact one-sided derivatives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Convex function of one variable.
pub trait ConvexFn1d: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn right_derivative(&self, x: f64) -> f64;
    fn left_derivative(&self, x: f64) -> f64;
}

/// Convex, piecewise-linear function. `slopes[k]` applies on
/// `[knots[k-1], knots[k])`, the value is zero at `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    knots: Vec<f64>,
    slopes: Vec<f64>,
    origin: f64,
    // value at each knot, relative to origin
    knot_values: Vec<f64>,
    origin_piece: usize,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<f64>, slopes: Vec<f64>, origin: f64) -> Result<Self> {
        if slopes.len() != knots.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} knots need {} slopes, got {}",
                knots.len(),
                knots.len() + 1,
                slopes.len()
            )));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) || knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidParameter("knots must be finite and strictly increasing".into()));
        }
        if slopes.windows(2).any(|w| w[0] > w[1]) || slopes.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("slopes must be finite and nondecreasing (convexity)".into()));
        }
        let mut f = Self { knots, slopes, origin, knot_values: Vec::new(), origin_piece: 0 };
        f.origin_piece = f.piece(origin);
        f.knot_values = f.knots.iter().map(|&k| f.integrate(k)).collect();
        Ok(f)
    }

    /// `slope * |x|` style kink at zero with different slopes on each side.
    pub fn kink(left_slope: f64, right_slope: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![left_slope, right_slope], 0.0)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    fn piece(&self, x: f64) -> usize {
        self.knots.partition_point(|&k| k <= x)
    }

    fn piece_left(&self, x: f64) -> usize {
        self.knots.partition_point(|&k| k < x)
    }

    // integral of the slope from origin to x, walking knot by knot
    fn integrate(&self, x: f64) -> f64 {
        let (lo, hi, sign) = if x >= self.origin { (self.origin, x, 1.0) } else { (x, self.origin, -1.0) };
        let mut acc = 0.0;
        let mut cur = lo;
        let mut k = self.piece(lo);
        while cur < hi {
            let end = self.knots.get(k).copied().unwrap_or(f64::INFINITY).min(hi);
            acc += self.slopes[k] * (end - cur);
            cur = end;
            k += 1;
        }
        sign * acc
    }
}

impl ConvexFn1d for PiecewiseLinear {
    fn value(&self, x: f64) -> f64 {
        let k = self.piece(x);
        if k == self.origin_piece {
            return self.slopes[k] * (x - self.origin);
        }
        // anchor on the knot of this piece closest to origin
        if k > self.origin_piece {
            self.knot_values[k - 1] + self.slopes[k] * (x - self.knots[k - 1])
        } else {
            self.knot_values[k] + self.slopes[k] * (x - self.knots[k])
        }
    }

    fn right_derivative(&self, x: f64) -> f64 {
        self.slopes[self.piece(x)]
    }

    fn left_derivative(&self, x: f64) -> f64 {
        self.slopes[self.piece_left(x)]
    }
}

/// The function families used for walks and Monte Carlo runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Convex1d {
    /// `slope * x`.
    Linear { slope: f64 },
    /// `x^2 / 2`.
    HalfSquare,
    /// Quadratic on `|x| <= delta`, linear with slope one beyond.
    Huber { delta: f64 },
    /// `|x|^p / p` with `p >= 1`.
    Power { p: f64 },
    Piecewise(PiecewiseLinear),
}

impl Convex1d {
    pub fn linear(slope: f64) -> Self {
        Self::Linear { slope }
    }

    pub fn huber(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!("huber delta must be positive, got {delta}")));
        }
        Ok(Self::Huber { delta })
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidParameter(format!("power exponent must be >= 1, got {p}")));
        }
        Ok(Self::Power { p })
    }

    fn derivative(&self, x: f64, right: bool) -> f64 {
        match self {
            Self::Linear { slope } => *slope,
            Self::HalfSquare => x,
            Self::Huber { delta } => (x / delta).clamp(-1.0, 1.0),
            Self::Power { p } => {
                if x == 0.0 {
                    // p = 1 is |x|, whose one-sided derivatives at 0 are +-1
                    return if *p == 1.0 { if right { 1.0 } else { -1.0 } } else { 0.0 };
                }
                x.signum() * x.abs().powf(p - 1.0)
            }
            Self::Piecewise(f) => {
                if right {
                    f.right_derivative(x)
                } else {
                    f.left_derivative(x)
                }
            }
        }
    }
}

impl ConvexFn1d for Convex1d {
    fn value(&self, x: f64) -> f64 {
        match self {
            Self::Linear { slope } => slope * x,
            Self::HalfSquare => 0.5 * x * x,
            Self::Huber { delta } => {
                if x.abs() <= *delta {
                    x * x / (2.0 * delta)
                } else {
                    x.abs() - delta / 2.0
                }
            }
            Self::Power { p } => x.abs().powf(*p) / p,
            Self::Piecewise(f) => f.value(x),
        }
    }

    fn right_derivative(&self, x: f64) -> f64 {
        self.derivative(x, true)
    }

    fn left_derivative(&self, x: f64) -> f64 {
        self.derivative(x, false)
    }
}

impl fmt::Display for Convex1d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear { slope } => write!(f, "linear:{slope}"),
            Self::HalfSquare => write!(f, "quadratic"),
            Self::Huber { delta } => write!(f, "huber:{delta}"),
            Self::Power { p } => write!(f, "power:{p}"),
            Self::Piecewise(pw) => {
                let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
                write!(f, "piecewise:{}|{}", join(pw.knots()), join(pw.slopes()))
            }
        }
    }
}

/// Parses `linear:S`, `quadratic`, `huber:D`, `power:P` and
/// `piecewise:K1;K2|S0;S1;S2` (value zero at the origin).
impl FromStr for Convex1d {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::InvalidParameter(format!("profile `{name}` needs a parameter")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("bad number in profile `{s}`: {e}")))
        };
        let list = |a: &str| -> Result<Vec<f64>> {
            a.split(';')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::InvalidParameter(format!("bad number `{t}`: {e}"))))
                .collect()
        };
        match name {
            "linear" => Ok(Self::linear(num(arg)?)),
            "quadratic" | "half_square" => Ok(Self::HalfSquare),
            "huber" => Self::huber(num(arg)?),
            "power" => Self::power(num(arg)?),
            "piecewise" => {
                let arg = arg.ok_or_else(|| Error::InvalidParameter("piecewise needs knots|slopes".into()))?;
                let (k, sl) = arg
                    .split_once('|')
                    .ok_or_else(|| Error::InvalidParameter("piecewise needs knots|slopes".into()))?;
                Ok(Self::Piecewise(PiecewiseLinear::new(list(k)?, list(sl)?, 0.0)?))
            }
            _ => Err(Error::InvalidParameter(format!("unknown profile `{s}`"))),
        }
    }
}
