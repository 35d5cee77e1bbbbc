use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Closed convex set with an exact Euclidean projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FeasibleSet {
    /// Centered Euclidean ball `{x in R^dim : |x| <= radius}`.
    Ball { radius: f64, dim: usize },
    /// One-dimensional interval `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
}

// Ball membership allows a few ulps: x * (r / |x|) can land one rounding
// step outside the sphere.
const BALL_SLACK: f64 = 4.0 * f64::EPSILON;

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl FeasibleSet {
    pub fn ball(radius: f64, dim: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) || dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "ball needs positive radius and dimension, got radius={radius}, dim={dim}"
            )));
        }
        Ok(Self::Ball { radius, dim })
    }

    pub fn unit_ball(dim: usize) -> Result<Self> {
        Self::ball(1.0, dim)
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidParameter(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self::Interval { lo, hi })
    }

    pub fn dim(&self) -> usize {
        match *self {
            Self::Ball { dim, .. } => dim,
            Self::Interval { .. } => 1,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match *self {
            Self::Ball { radius, .. } => norm(x) <= radius * (1.0 + BALL_SLACK),
            Self::Interval { lo, hi } => lo <= x[0] && x[0] <= hi,
        }
    }

    /// Euclidean-nearest point of the set.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.project_in_place(&mut out);
        out
    }

    /// Projects `x` in place and reports whether it moved.
    pub fn project_in_place(&self, x: &mut [f64]) -> bool {
        match *self {
            Self::Ball { radius, .. } => {
                let r = norm(x);
                if r <= radius * (1.0 + BALL_SLACK) {
                    return false;
                }
                let scale = radius / r;
                x.iter_mut().for_each(|v| *v *= scale);
                true
            }
            Self::Interval { lo, hi } => {
                let clamped = x[0].clamp(lo, hi);
                let moved = clamped != x[0];
                x[0] = clamped;
                moved
            }
        }
    }
}
