//! Euler–Maruyama flows for SDEs with additive noise `dX = b(t,X) dt + D dW`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flow::{norm, FlowModel, StateVector};
use crate::models::linear::PeriodicForcing;
use crate::time::DyadicTime;
use crate::wiener::NoiseRealization;

pub type Drift = Arc<dyn Fn(f64, &[f64]) -> StateVector + Send + Sync>;

#[derive(Clone)]
pub struct EmModel {
    name: String,
    dim: usize,
    drift: Drift,
    /// `dim × m`, row-major.
    diffusion: Vec<Vec<f64>>,
    noise_dim: usize,
    level: u32,
    guard: f64,
}

impl fmt::Debug for EmModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("diffusion", &self.diffusion)
            .field("level", &self.level)
            .finish_non_exhaustive()
    }
}

impl EmModel {
    pub const DEFAULT_GUARD: f64 = 1e8;

    pub fn new(name: &str, drift: Drift, diffusion: Vec<Vec<f64>>, level: u32) -> Result<Self> {
        let dim = diffusion.len();
        if dim == 0 {
            return Err(Error::Config("diffusion matrix needs at least one row".into()));
        }
        let noise_dim = diffusion[0].len();
        if let Some(row) = diffusion.iter().find(|r| r.len() != noise_dim) {
            return Err(Error::Dimension { expected: noise_dim, found: row.len() });
        }
        if diffusion.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("diffusion entries must be finite".into()));
        }
        if level > 20 {
            return Err(Error::Resolution(format!("grid level {level} exceeds 20")));
        }
        Ok(EmModel { name: name.to_string(), dim, drift, diffusion, noise_dim, level, guard: Self::DEFAULT_GUARD })
    }

    /// The Euler–Maruyama discretization of the scalar forced linear SDE.
    pub fn linear(rate: f64, sigma: f64, forcing: PeriodicForcing, level: u32) -> Result<Self> {
        let drift: Drift = Arc::new(move |t, x| vec![-rate * x[0] + forcing.eval(t)]);
        Self::new("em-linear", drift, vec![vec![sigma]], level)
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    pub fn step_size(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }
}

impl FlowModel for EmModel {
    fn name(&self) -> &str {
        &self.name
    }
    fn state_dim(&self) -> usize {
        self.dim
    }
    fn grid_level(&self) -> u32 {
        self.level
    }
    fn noise_components(&self) -> usize {
        self.noise_dim
    }
    fn flow(&self, omega: &NoiseRealization, s: DyadicTime, t: DyadicTime, x: &[f64]) -> Result<StateVector> {
        let h = self.step_size();
        let dw: Vec<Vec<f64>> = (0..self.noise_dim)
            .map(|j| omega.increments(j, s, t, self.level))
            .collect::<Result<_>>()?;
        let steps = (t - s).grid_index_checked(self.level)? as usize;
        let i0 = s.grid_index_checked(self.level)?;
        let mut state = x.to_vec();
        for k in 0..steps {
            let time = DyadicTime::from_grid(i0 + k as i64, self.level).to_f64();
            let b = (self.drift)(time, &state);
            if b.len() != self.dim {
                return Err(Error::Dimension { expected: self.dim, found: b.len() });
            }
            for (i, xi) in state.iter_mut().enumerate() {
                let mut noise = 0.0;
                for (j, inc) in dw.iter().enumerate() {
                    noise += self.diffusion[i][j] * inc[k];
                }
                *xi += h * b[i] + noise;
            }
            let size = norm(&state);
            if !(size <= self.guard) {
                return Err(Error::Divergence {
                    step: k,
                    reason: format!("state norm {size:e} exceeds guard {:e}", self.guard),
                });
            }
        }
        Ok(state)
    }
}
