use rand::RngCore;
use serde::Serialize;

use super::AdversarialInstance;
use crate::sgd::{run_sgd, FeasibleSet, GradientOracle, SgdTrace};
use crate::{Error, Result};

/// Step where the selected piece differed from the predicted `t - T*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexDivergence {
    pub step: usize,
    pub predicted: usize,
    pub selected: usize,
}

/// Engine-facing wrapper of [`AdversarialInstance::oracle_subgradient`].
///
/// After the kick, the on-trajectory selection is known to be `t - T*`;
/// every step where the numerically selected index differs is logged.
#[derive(Debug)]
pub struct AdversarialOracle<'a> {
    inst: &'a AdversarialInstance,
    divergences: Vec<IndexDivergence>,
}

impl<'a> AdversarialOracle<'a> {
    pub fn new(inst: &'a AdversarialInstance) -> Self {
        Self { inst, divergences: Vec::new() }
    }

    pub fn divergences(&self) -> &[IndexDivergence] {
        &self.divergences
    }

    pub fn into_divergences(self) -> Vec<IndexDivergence> {
        self.divergences
    }
}

impl GradientOracle for AdversarialOracle<'_> {
    fn dim(&self) -> usize {
        self.inst.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inst.value_unchecked(x)
    }

    fn query(&mut self, x: &[f64], t: usize, _rng: &mut dyn RngCore, grad: &mut [f64]) -> Result<()> {
        let kick = self.inst.kick_start();
        if t <= kick {
            grad.fill(0.0);
            return Ok(());
        }
        let selected = self.inst.active_set(x)?.min_nonzero().ok_or(Error::EmptyActiveSet { step: t })?;
        let predicted = t - kick;
        if selected != predicted {
            self.divergences.push(IndexDivergence { step: t, predicted, selected });
        }
        grad.copy_from_slice(&self.inst.piece_gradient(selected, x));
        Ok(())
    }
}

/// Runs the engine on the instance with its own schedule from `x_1 = 0`.
pub fn run_adversarial(inst: &AdversarialInstance) -> Result<(SgdTrace, Vec<IndexDivergence>)> {
    let set = FeasibleSet::unit_ball(inst.dim())?;
    let mut oracle = AdversarialOracle::new(inst);
    let trace = run_sgd(&mut oracle, &set, &inst.schedule(), &vec![0.0; inst.dim()], inst.horizon(), 0)?;
    Ok((trace, oracle.into_divergences()))
}
