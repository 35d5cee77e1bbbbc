use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shape of a step-size schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ScheduleKind {
    /// `eta_t = 1/t`.
    InverseT,
    /// `eta_t = 1/sqrt(t)`.
    InverseSqrtDecreasing,
    /// `eta_t = 1/sqrt(T)` for every step.
    InverseSqrtFixed,
    /// `eta_t = value` for every step.
    Constant(f64),
}

/// Evaluable map `t -> eta_t` on the steps `1..=horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    kind: ScheduleKind,
    horizon: usize,
}

impl StepSchedule {
    pub fn new(kind: ScheduleKind, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("schedule horizon must be positive".into()));
        }
        if let ScheduleKind::Constant(v) = kind {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "constant step size must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { kind, horizon })
    }

    pub fn inverse_t(horizon: usize) -> Result<Self> {
        Self::new(ScheduleKind::InverseT, horizon)
    }

    pub fn inverse_sqrt_t(horizon: usize) -> Result<Self> {
        Self::new(ScheduleKind::InverseSqrtDecreasing, horizon)
    }

    pub fn fixed_inverse_sqrt(horizon: usize) -> Result<Self> {
        Self::new(ScheduleKind::InverseSqrtFixed, horizon)
    }

    pub fn constant(value: f64, horizon: usize) -> Result<Self> {
        Self::new(ScheduleKind::Constant(value), horizon)
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Step size at the 1-based step `t`.
    pub fn eval(&self, t: usize) -> Result<f64> {
        if t == 0 || t > self.horizon {
            return Err(Error::StepOutOfRange { step: t, horizon: self.horizon });
        }
        Ok(self.rate(t))
    }

    pub(crate) fn rate(&self, t: usize) -> f64 {
        match self.kind {
            ScheduleKind::InverseT => 1.0 / t as f64,
            ScheduleKind::InverseSqrtDecreasing => 1.0 / (t as f64).sqrt(),
            ScheduleKind::InverseSqrtFixed => 1.0 / (self.horizon as f64).sqrt(),
            ScheduleKind::Constant(v) => v,
        }
    }
}
