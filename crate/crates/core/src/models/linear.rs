//! Scalar forced Ornstein-Uhlenbeck flow `dX = (−aX + f(t)) dt + σ dW` in closed form.

use crate::error::{Error, Result};
use crate::flow::{FlowModel, StateVector};
use crate::time::DyadicTime;
use crate::wiener::{kernel_weight, NoiseRealization};

/// `f(t) = c + Σₖ aₖ cos(kt) + bₖ sin(kt)`, `k = 1, 2, …`; period 2π.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PeriodicForcing {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl PeriodicForcing {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `f(t) = amplitude · cos t`.
    pub fn cosine(amplitude: f64) -> Self {
        PeriodicForcing { constant: 0.0, cos: vec![amplitude], sin: vec![] }
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.cos.iter().chain(&self.sin).all(|c| *c == 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut v = self.constant;
        for (k, a) in self.cos.iter().enumerate() {
            v += a * ((k + 1) as f64 * t).cos();
        }
        for (k, b) in self.sin.iter().enumerate() {
            v += b * ((k + 1) as f64 * t).sin();
        }
        v
    }

    /// The unique bounded solution of `m′ = −rate·m + f(t)`, i.e.
    /// `∫_{−∞}^t e^{−rate(t−u)} f(u) du`.
    pub fn periodic_response(&self, rate: f64, t: f64) -> f64 {
        let mut m = self.constant / rate;
        for (k, a) in self.cos.iter().enumerate() {
            let k = (k + 1) as f64;
            m += a * (rate * (k * t).cos() + k * (k * t).sin()) / (rate * rate + k * k);
        }
        for (k, b) in self.sin.iter().enumerate() {
            let k = (k + 1) as f64;
            m += b * (rate * (k * t).sin() - k * (k * t).cos()) / (rate * rate + k * k);
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearOUModel {
    rate: f64,
    sigma: f64,
    forcing: PeriodicForcing,
    level: u32,
}

impl LinearOUModel {
    pub fn new(rate: f64, sigma: f64, level: u32) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Config(format!("linear model rate must be positive, got {rate}")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("diffusion must be nonnegative, got {sigma}")));
        }
        if level > 20 {
            return Err(Error::Resolution(format!("grid level {level} exceeds 20")));
        }
        Ok(LinearOUModel { rate, sigma, forcing: PeriodicForcing::zero(), level })
    }

    pub fn with_forcing(mut self, forcing: PeriodicForcing) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn forcing(&self) -> &PeriodicForcing {
        &self.forcing
    }

    /// Mean of the stationary periodic solution at time `t`.
    pub fn pullback_mean(&self, t: f64) -> f64 {
        self.forcing.periodic_response(self.rate, t)
    }

    /// `σ²/(2a)`.
    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.rate)
    }

    /// The flow map is `x ↦ decay·x + offset`; returns `(decay, offset)`.
    pub fn affine_parts(&self, omega: &NoiseRealization, s: DyadicTime, t: DyadicTime) -> Result<(f64, f64)> {
        let a = self.rate;
        let h = (-(self.level as f64)).exp2();
        let n = (t - s).grid_index_checked(self.level)? as usize;
        let decay = (-a * (t - s).to_f64()).exp();
        let mut offset = 0.0;
        if !self.forcing.is_zero() {
            let s0 = s.to_f64();
            let mut acc = 0.0;
            for i in 0..=n {
                let u = s0 + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 * h } else { h };
                acc += w * (-a * h * (n - i) as f64).exp() * self.forcing.eval(u);
            }
            offset += acc;
        }
        if self.sigma > 0.0 {
            let dw = omega.increments(0, s, t, self.level)?;
            let mut acc = 0.0;
            for (i, d) in dw.iter().enumerate() {
                acc += kernel_weight(a, h, n - 1 - i) * d;
            }
            offset += self.sigma * acc;
        }
        Ok((decay, offset))
    }
}

impl FlowModel for LinearOUModel {
    fn name(&self) -> &str {
        "linear-ou"
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn grid_level(&self) -> u32 {
        self.level
    }
    fn noise_components(&self) -> usize {
        1
    }
    fn flow(&self, omega: &NoiseRealization, s: DyadicTime, t: DyadicTime, x: &[f64]) -> Result<StateVector> {
        let (decay, offset) = self.affine_parts(omega, s, t)?;
        Ok(vec![decay * x[0] + offset])
    }
    fn flow_batch(
        &self,
        omega: &NoiseRealization,
        s: DyadicTime,
        t: DyadicTime,
        xs: &[StateVector],
    ) -> Result<Vec<StateVector>> {
        let (decay, offset) = self.affine_parts(omega, s, t)?;
        Ok(xs.iter().map(|x| vec![decay * x[0] + offset]).collect())
    }
}
