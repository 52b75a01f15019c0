//! Deterministic reference flows used as counterexamples and sanity checks.

use crate::error::Result;
use crate::flow::{FlowModel, StateVector};
use crate::time::DyadicTime;
use crate::wiener::NoiseRealization;

/// `S(t,s)x = x`.
#[derive(Clone, Debug)]
pub struct IdentityFlow {
    dim: usize,
}

impl IdentityFlow {
    pub fn new(dim: usize) -> Self {
        IdentityFlow { dim }
    }
}

impl FlowModel for IdentityFlow {
    fn name(&self) -> &str {
        "identity"
    }
    fn state_dim(&self) -> usize {
        self.dim
    }
    fn grid_level(&self) -> u32 {
        20
    }
    fn noise_components(&self) -> usize {
        0
    }
    fn flow(&self, _: &NoiseRealization, _: DyadicTime, _: DyadicTime, x: &[f64]) -> Result<StateVector> {
        Ok(x.to_vec())
    }
}

/// `S(t,s)x = x + t − s`: drifts off to infinity, so no evolution system exists.
#[derive(Clone, Debug)]
pub struct ShiftFlow {
    level: u32,
}

impl ShiftFlow {
    pub fn new(level: u32) -> Self {
        ShiftFlow { level }
    }
}

impl FlowModel for ShiftFlow {
    fn name(&self) -> &str {
        "shift"
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn grid_level(&self) -> u32 {
        self.level
    }
    fn noise_components(&self) -> usize {
        0
    }
    fn flow(&self, _: &NoiseRealization, s: DyadicTime, t: DyadicTime, x: &[f64]) -> Result<StateVector> {
        Ok(vec![x[0] + (t - s).to_f64()])
    }
}

/// `x′ = −rate·x` in every coordinate; `rate < 0` gives an expanding flow.
#[derive(Clone, Debug)]
pub struct ExponentialFlow {
    rate: f64,
    dim: usize,
    level: u32,
}

impl ExponentialFlow {
    pub fn new(rate: f64, dim: usize, level: u32) -> Self {
        ExponentialFlow { rate, dim, level }
    }
}

impl FlowModel for ExponentialFlow {
    fn name(&self) -> &str {
        if self.rate >= 0.0 {
            "decay"
        } else {
            "expanding"
        }
    }
    fn state_dim(&self) -> usize {
        self.dim
    }
    fn grid_level(&self) -> u32 {
        self.level
    }
    fn noise_components(&self) -> usize {
        0
    }
    fn flow(&self, _: &NoiseRealization, s: DyadicTime, t: DyadicTime, x: &[f64]) -> Result<StateVector> {
        let factor = (-self.rate * (t - s).to_f64()).exp();
        Ok(x.iter().map(|v| v * factor).collect())
    }
}
