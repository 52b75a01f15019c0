//! Physical-space transforms and the pseudospectral nonlinearity.
//!
//! The collocation grid has `M` points per side, the smallest power of two
//! above `3N`. Products of two fields truncated at `N` then alias only onto
//! wavenumbers above `N`, so truncating back to `N` is exact.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{Basis, SpectralField};

/// FFT plans for one resolution. Plans are shared; buffers are per call.
#[derive(Clone)]
pub struct Grid {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("m", &self.m).finish()
    }
}

impl Grid {
    pub fn for_resolution(n: usize) -> Self {
        let m = (3 * n + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Grid { m, forward: planner.plan_fft_forward(m), inverse: planner.plan_fft_inverse(m) }
    }

    /// Points per side.
    pub fn points(&self) -> usize {
        self.m
    }

    fn index(&self, k1: i64, k2: i64) -> usize {
        let m = self.m as i64;
        (k1.rem_euclid(m) * m + k2.rem_euclid(m)) as usize
    }

    fn transpose(&self, buf: &mut [Complex64]) {
        let m = self.m;
        for i in 0..m {
            for j in i + 1..m {
                buf.swap(i * m + j, j * m + i);
            }
        }
    }

    fn fft2(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        plan.process(buf);
        self.transpose(buf);
        plan.process(buf);
        self.transpose(buf);
    }

    /// Real field `Σ_k c_k e^{ik·x}` on the grid, with `c_{−k} = conj c_k`.
    /// `coeff(i)` gives `c_k` for the `i`-th stored mode.
    pub fn synthesize(&self, basis: &Basis, coeff: impl Fn(usize) -> Complex64) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m * self.m];
        for (i, &(k1, k2)) in basis.modes().iter().enumerate() {
            let c = coeff(i);
            buf[self.index(k1, k2)] = c;
            buf[self.index(-k1, -k2)] = c.conj();
        }
        self.fft2(&mut buf, &self.inverse);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Fourier coefficients of a real grid field on the stored modes.
    pub fn analyze(&self, basis: &Basis, field: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = field.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft2(&mut buf, &self.forward);
        let norm = 1.0 / (self.m * self.m) as f64;
        basis.modes().iter().map(|&(k1, k2)| buf[self.index(k1, k2)] * norm).collect()
    }

    /// Both velocity components of `u` on the grid.
    pub fn velocity(&self, basis: &Basis, u: &SpectralField) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let modes = basis.modes();
        let psi = u.psi();
        let u1 = self.synthesize(basis, |j| i * modes[j].1 as f64 * psi[j]);
        let u2 = self.synthesize(basis, |j| -i * modes[j].0 as f64 * psi[j]);
        (u1, u2)
    }

    /// `max_x |u(x)|` over the grid.
    pub fn max_speed(&self, basis: &Basis, u: &SpectralField) -> f64 {
        let (a, b) = self.velocity(basis, u);
        a.iter().zip(&b).map(|(x, y)| x.hypot(*y)).fold(0.0, f64::max)
    }

    /// `B(u, v) = P[(u·∇)v]` together with `max_x |u(x)|`.
    pub fn bilinear_with_speed(&self, basis: &Basis, u: &SpectralField, v: &SpectralField) -> (SpectralField, f64) {
        let i = Complex64::new(0.0, 1.0);
        let modes = basis.modes();
        let (u1, u2) = self.velocity(basis, u);
        let speed = u1.iter().zip(&u2).map(|(x, y)| x.hypot(*y)).fold(0.0, f64::max);
        let p = v.psi();
        // v̂¹ = i k₂ ψ, v̂² = −i k₁ ψ; ∂_j multiplies by i k_j
        let d = |comp: usize, dir: usize| {
            self.synthesize(basis, |j| {
                let (k1, k2) = (modes[j].0 as f64, modes[j].1 as f64);
                let vel = if comp == 0 { i * k2 * p[j] } else { -i * k1 * p[j] };
                i * if dir == 0 { k1 } else { k2 } * vel
            })
        };
        let (v1x, v1y, v2x, v2y) = (d(0, 0), d(0, 1), d(1, 0), d(1, 1));
        let w1: Vec<f64> = (0..u1.len()).map(|n| u1[n] * v1x[n] + u2[n] * v1y[n]).collect();
        let w2: Vec<f64> = (0..u1.len()).map(|n| u1[n] * v2x[n] + u2[n] * v2y[n]).collect();
        let (a, b) = (self.analyze(basis, &w1), self.analyze(basis, &w2));
        let psi = modes
            .iter()
            .enumerate()
            .map(|(j, &(k1, k2))| -i * (a[j] * k2 as f64 - b[j] * k1 as f64) / basis.k_sq()[j])
            .collect();
        (SpectralField::from_psi(basis, psi).expect("basis-sized"), speed)
    }

    pub fn bilinear(&self, basis: &Basis, u: &SpectralField, v: &SpectralField) -> SpectralField {
        self.bilinear_with_speed(basis, u, v).0
    }
}
