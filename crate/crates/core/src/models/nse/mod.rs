//! Galerkin-truncated 2D stochastic Navier–Stokes on the torus with additive
//! noise `Σ_j φ_j dw_j`, integrated through the Ornstein–Uhlenbeck change of
//! variable `v = u − z`, `z = Σ_j φ_j z_j`, `dz_j = −α z_j dt + dw_j`:
//!
//! `dv/dt + νAv + B(v+z, v+z) = f + αz − νAz`.
//!
//! Each step is semi-implicit Euler: implicit `νA`, explicit nonlinearity,
//! forcing and O-U terms. The state carried between steps is `u`, always in
//! the energy coordinates of [`SpectralField::to_state`], so any split of an
//! interval at grid points replays the same arithmetic.

pub mod beta;
pub mod field;
pub mod grid;

use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

pub use beta::estimate_beta;
pub use field::{leray_project, Basis, FourierPair, SpectralField};
pub use grid::Grid;

use crate::error::{Error, Result};
use crate::flow::{evolve, FlowModel, StateVector};
use crate::time::DyadicTime;
use crate::wiener::{NoiseRealization, OUConfig};

/// Stream-function amplitude `ψ̂_k` at one wavevector.
pub type Mode = (i64, i64, Complex64);

#[derive(Clone, Debug, PartialEq)]
pub struct NseConfig {
    pub viscosity: f64,
    /// Truncation `|k₁|, |k₂| ≤ N`.
    pub resolution: usize,
    /// Step size `h = 2^-level`.
    pub level: u32,
    /// O-U mean-reversion rate `α`.
    pub ou_rate: f64,
    /// Forcing `f(t) = f₀ + cos(t)·f₁`.
    pub forcing_steady: Vec<Mode>,
    pub forcing_cos: Vec<Mode>,
    /// One entry per noise mode `φ_j`.
    pub noise: Vec<Vec<Mode>>,
}

impl NseConfig {
    /// `N = 16`, `h = 2^-6`, `α = 1`, two noise modes and low-mode forcing.
    pub fn desk(viscosity: f64) -> Self {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        NseConfig {
            viscosity,
            resolution: 16,
            level: 6,
            ou_rate: 1.0,
            forcing_steady: vec![(1, 2, c(0.1, 0.0))],
            forcing_cos: vec![(2, -1, c(0.0, 0.1))],
            noise: vec![vec![(1, 0, c(0.1, 0.0))], vec![(0, 1, c(0.0, 0.1))]],
        }
    }

    pub fn unforced(mut self) -> Self {
        self.forcing_steady.clear();
        self.forcing_cos.clear();
        self
    }

    pub fn noiseless(mut self) -> Self {
        self.noise.clear();
        self
    }

    pub fn step_size(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }
}

/// Read-only view of one step `t_n → t_{n+1}`.
pub struct StepView<'a> {
    pub index: usize,
    pub time: DyadicTime,
    pub u: &'a SpectralField,
    pub v: &'a SpectralField,
    pub z: &'a SpectralField,
    pub v_next: &'a SpectralField,
    pub z_next: &'a SpectralField,
    pub zj: Vec<f64>,
    pub zj_next: Vec<f64>,
}

#[derive(Debug)]
pub struct NseModel {
    cfg: NseConfig,
    basis: Basis,
    grid: Grid,
    steady: SpectralField,
    oscillating: SpectralField,
    phis: Vec<SpectralField>,
    ou: OUConfig,
    beta: OnceLock<f64>,
}

impl NseModel {
    pub fn new(cfg: NseConfig) -> Result<Self> {
        if !(cfg.viscosity > 0.0 && cfg.viscosity.is_finite()) {
            return Err(Error::Config(format!("viscosity must be positive, got {}", cfg.viscosity)));
        }
        if cfg.level > 20 {
            return Err(Error::Resolution(format!("grid level {} exceeds 20", cfg.level)));
        }
        let basis = Basis::new(cfg.resolution)?;
        if cfg.step_size() * cfg.resolution as f64 > 1.0 {
            return Err(Error::Config(format!(
                "step 2^-{} exceeds the stability bound 1/N = 1/{}",
                cfg.level, cfg.resolution
            )));
        }
        let ou = OUConfig::new(cfg.ou_rate, cfg.level)?;
        let steady = SpectralField::from_modes(&basis, &cfg.forcing_steady)?;
        let oscillating = SpectralField::from_modes(&basis, &cfg.forcing_cos)?;
        let phis = cfg.noise.iter().map(|m| SpectralField::from_modes(&basis, m)).collect::<Result<Vec<_>>>()?;
        let grid = Grid::for_resolution(cfg.resolution);
        Ok(NseModel { cfg, basis, grid, steady, oscillating, phis, ou, beta: OnceLock::new() })
    }

    pub fn config(&self) -> &NseConfig {
        &self.cfg
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ou(&self) -> &OUConfig {
        &self.ou
    }

    pub fn noise_modes(&self) -> &[SpectralField] {
        &self.phis
    }

    pub fn forcing_at(&self, t: f64) -> SpectralField {
        self.steady.add(&self.oscillating.scaled(t.cos()))
    }

    pub fn bilinear(&self, u: &SpectralField, v: &SpectralField) -> SpectralField {
        self.grid.bilinear(&self.basis, u, v)
    }

    /// `β̂ = Σ_j β(φ_j)`, computed once.
    pub fn beta_hat(&self) -> Result<f64> {
        if let Some(b) = self.beta.get() {
            return Ok(*b);
        }
        let mut total = 0.0;
        for phi in &self.phis {
            total += estimate_beta(&self.basis, &self.grid, phi)?;
        }
        Ok(*self.beta.get_or_init(|| total))
    }

    /// `z = Σ_j φ_j z_j`.
    pub fn noise_field(&self, zj: &[f64]) -> SpectralField {
        let mut z = SpectralField::zeros(&self.basis);
        for (phi, c) in self.phis.iter().zip(zj) {
            for (a, b) in z.psi_mut().iter_mut().zip(phi.psi()) {
                *a += b * c;
            }
        }
        z
    }

    /// `z_j(t_n)` for every grid time of `[s, t]`, indexed `[j][n]`.
    pub fn ou_paths(&self, omega: &NoiseRealization, s: DyadicTime, t: DyadicTime) -> Result<Vec<Vec<f64>>> {
        let steps = (t - s).grid_index_checked(self.cfg.level)? as usize;
        let cut = self.ou.cutoff_steps();
        (0..self.phis.len())
            .map(|j| {
                let incs = omega.increments(j, s - self.ou.cutoff(), t, self.cfg.level)?;
                Ok((0..=steps).map(|n| self.ou.convolve(&incs[..cut + n])).collect())
            })
            .collect()
    }

    /// Advance `x` from `s` to `t`, showing every step to `observe`.
    pub fn run(
        &self,
        omega: &NoiseRealization,
        s: DyadicTime,
        t: DyadicTime,
        x: &[f64],
        mut observe: impl FnMut(&StepView<'_>),
    ) -> Result<StateVector> {
        let level = self.cfg.level;
        let h = self.cfg.step_size();
        let nu = self.cfg.viscosity;
        let alpha = self.cfg.ou_rate;
        let n_max = self.cfg.resolution as f64;
        let steps = (t - s).grid_index_checked(level)? as usize;
        let i0 = s.grid_index_checked(level)?;
        let paths = self.ou_paths(omega, s, t)?;
        let zj_at = |n: usize| paths.iter().map(|p| p[n]).collect::<Vec<f64>>();
        let k_sq = self.basis.k_sq();
        let mut state = x.to_vec();
        let mut zj = zj_at(0);
        let mut z = self.noise_field(&zj);
        for n in 0..steps {
            let time = DyadicTime::from_grid(i0 + n as i64, level);
            let u = SpectralField::from_state(&self.basis, &state)?;
            let (b, speed) = self.grid.bilinear_with_speed(&self.basis, &u, &u);
            if !(speed * h * n_max <= 1.0) {
                return Err(Error::Divergence {
                    step: n,
                    reason: format!("CFL violated: max|u|·h·N = {:e}", speed * h * n_max),
                });
            }
            let f = self.forcing_at(time.to_f64());
            let v = u.sub(&z);
            let mut v_next = SpectralField::zeros(&self.basis);
            for (m, out) in v_next.psi_mut().iter_mut().enumerate() {
                let zk = z.psi()[m];
                let rhs = v.psi()[m] + (f.psi()[m] + zk * alpha - zk * (nu * k_sq[m]) - b.psi()[m]) * h;
                *out = rhs / (1.0 + nu * h * k_sq[m]);
            }
            let zj_next = zj_at(n + 1);
            let z_next = self.noise_field(&zj_next);
            let u_next = v_next.add(&z_next);
            state = u_next.to_state(&self.basis);
            if state.iter().any(|c| !c.is_finite()) {
                return Err(Error::Divergence { step: n, reason: "non-finite state".into() });
            }
            observe(&StepView {
                index: n,
                time,
                u: &u,
                v: &v,
                z: &z,
                v_next: &v_next,
                z_next: &z_next,
                zj: zj.clone(),
                zj_next: zj_next.clone(),
            });
            zj = zj_next;
            z = z_next;
        }
        Ok(state)
    }

    /// The path of `(v, z)` on every grid time of `[s, t]`.
    pub fn trajectory(
        &self,
        omega: &NoiseRealization,
        s: DyadicTime,
        t: DyadicTime,
        u0: &SpectralField,
    ) -> Result<NseTrajectory> {
        let mut traj = NseTrajectory::default();
        let x = u0.to_state(&self.basis);
        let level = self.cfg.level;
        self.run(omega, s, t, &x, |step| {
            if step.index == 0 {
                traj.times.push(step.time);
                traj.v.push(step.v.clone());
                traj.z.push(step.z.clone());
                traj.zj.push(step.zj.clone());
            }
            traj.times.push(step.time + DyadicTime::from_grid(1, level));
            traj.v.push(step.v_next.clone());
            traj.z.push(step.z_next.clone());
            traj.zj.push(step.zj_next.clone());
        })?;
        Ok(traj)
    }

    /// Term-by-term discrete version of the energy inequality along `traj`.
    pub fn energy_diagnostics(&self, traj: &NseTrajectory, late_window: DyadicTime) -> Result<EnergyDiagnostics> {
        let len = traj.times.len();
        for other in [traj.v.len(), traj.z.len(), traj.zj.len()] {
            if other != len {
                return Err(Error::Dimension { expected: len, found: other });
            }
        }
        if len < 2 {
            return Err(Error::Precondition("trajectory needs at least two times".into()));
        }
        let basis = &self.basis;
        let nu = self.cfg.viscosity;
        let alpha = self.cfg.ou_rate;
        let h = self.cfg.step_size();
        let beta = if self.phis.is_empty() { 0.0 } else { self.beta_hat()? };
        let mut d = EnergyDiagnostics { beta_hat: beta, poincare_holds: true, ..Default::default() };
        let rows: Vec<_> = (0..len - 1)
            .into_par_iter()
            .map(|n| {
                let (v, v1, z) = (&traj.v[n], &traj.v[n + 1], &traj.z[n]);
                let u = v.add(z);
                let b = self.bilinear(&u, &u);
                let f = self.forcing_at(traj.times[n].to_f64());
                let sum_z: f64 = traj.zj[n].iter().map(|x| x.abs()).sum();
                let (hv1, vv1, hv, vv) = (v1.h_norm_sq(basis), v1.v_norm_sq(basis), v.h_norm_sq(basis), v.v_norm_sq(basis));
                let (hz, vz) = (z.h_norm_sq(basis), z.v_norm_sq(basis));
                let rate = (hv1 - hv) / h;
                let dissipation = nu / 4.0 * vv1;
                let damping = (nu / 4.0 - 2.0 * beta * sum_z) * hv1;
                let two_g = 4.0 * f.h_norm_sq(basis) / nu
                    + 4.0 * alpha * alpha * hz / nu
                    + 4.0 * nu * vz
                    + 4.0 * beta * sum_z * hz;
                let nonlinear = b.inner(basis, v).abs();
                let bound = 2.0 * beta * sum_z * (hv + hz);
                (rate, dissipation, damping, two_g, hv1, vv1, sum_z, (vv1 - vv) / h, nonlinear, bound)
            })
            .collect();
        for (n, r) in rows.into_iter().enumerate() {
            let (rate, dissipation, damping, two_g, hv1, vv1, sum_z, ens, nl, bound) = r;
            d.times.push(traj.times[n + 1].to_f64());
            d.energy_rate.push(rate);
            d.dissipation.push(dissipation);
            d.damping.push(damping);
            d.two_g.push(two_g);
            d.slack.push(two_g - (rate + dissipation + damping));
            d.h_norm_sq.push(hv1);
            d.v_norm_sq.push(vv1);
            d.sum_abs_z.push(sum_z);
            d.enstrophy_rate.push(ens);
            d.nonlinear.push(nl);
            d.nonlinear_bound.push(bound);
            d.poincare_holds &= hv1 <= vv1;
        }
        let end = *traj.times.last().expect("nonempty");
        let from = end - late_window;
        d.absorbing_radius = traj
            .times
            .iter()
            .zip(traj.v.iter().zip(&traj.z))
            .filter(|(t, _)| **t >= from)
            .map(|(_, (v, z))| v.v_norm_sq(basis).sqrt() + z.v_norm_sq(basis).sqrt())
            .fold(0.0, f64::max);
        Ok(d)
    }

    /// `max (‖v‖ + ‖z‖)` over `[t − window, t]` starting from `u0` at `s`.
    pub fn late_radius(
        &self,
        omega: &NoiseRealization,
        s: DyadicTime,
        t: DyadicTime,
        u0: &SpectralField,
        window: DyadicTime,
    ) -> Result<f64> {
        let split = (t - window).max(s);
        let x = evolve(self, omega, s, split, &u0.to_state(&self.basis))?;
        let basis = &self.basis;
        let mut radius: f64 = 0.0;
        self.run(omega, split, t, &x, |step| {
            let r0 = step.v.v_norm_sq(basis).sqrt() + step.z.v_norm_sq(basis).sqrt();
            let r1 = step.v_next.v_norm_sq(basis).sqrt() + step.z_next.v_norm_sq(basis).sqrt();
            radius = radius.max(r0).max(r1);
        })?;
        Ok(radius)
    }

    /// A fixed low-mode field scaled to `|u| = amplitude`.
    pub fn low_mode_field(&self, amplitude: f64) -> SpectralField {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let shape = SpectralField::from_modes(&self.basis, &[(1, 0, c(1.0, 0.0)), (1, 1, c(0.0, 0.5)), (0, 2, c(-0.25, 0.0))])
            .expect("low modes fit every resolution");
        shape.scaled(amplitude / shape.h_norm_sq(&self.basis).sqrt())
    }

    /// Pull back initial fields of the given energies from `t − T` for each
    /// lookback `T` and compare their late-window radii.
    pub fn absorbing_experiment(
        &self,
        omega: &NoiseRealization,
        t: DyadicTime,
        lookbacks: &[DyadicTime],
        amplitudes: &[f64],
        window: DyadicTime,
        tolerance: f64,
    ) -> Result<AbsorbingReport> {
        let mut sorted = lookbacks.to_vec();
        sorted.sort();
        let jobs: Vec<(usize, usize)> = (0..sorted.len()).flat_map(|i| (0..amplitudes.len()).map(move |a| (i, a))).collect();
        let radii: Vec<f64> = jobs
            .par_iter()
            .map(|&(i, a)| self.late_radius(omega, t - sorted[i], t, &self.low_mode_field(amplitudes[a]), window))
            .collect::<Result<_>>()?;
        let rows: Vec<AbsorbingRow> = sorted
            .iter()
            .enumerate()
            .map(|(i, lb)| {
                let r = radii[i * amplitudes.len()..(i + 1) * amplitudes.len()].to_vec();
                let hi = r.iter().cloned().fold(f64::MIN, f64::max);
                let lo = r.iter().cloned().fold(f64::MAX, f64::min);
                AbsorbingRow { lookback: lb.to_f64(), radii: r, relative_spread: (hi - lo) / hi }
            })
            .collect();
        let mut t_star = None;
        for row in rows.iter().rev() {
            if row.relative_spread <= tolerance {
                t_star = Some(row.lookback);
            } else {
                break;
            }
        }
        Ok(AbsorbingReport { amplitudes: amplitudes.to_vec(), tolerance, rows, t_star })
    }
}

impl FlowModel for NseModel {
    fn name(&self) -> &str {
        "nse"
    }
    fn state_dim(&self) -> usize {
        self.basis.state_dim()
    }
    fn grid_level(&self) -> u32 {
        self.cfg.level
    }
    fn noise_components(&self) -> usize {
        self.phis.len()
    }
    fn flow(&self, omega: &NoiseRealization, s: DyadicTime, t: DyadicTime, x: &[f64]) -> Result<StateVector> {
        self.run(omega, s, t, x, |_| {})
    }
}

/// `S(t,s;ω)u_s` on fields.
pub fn nse_evolve(
    model: &NseModel,
    omega: &NoiseRealization,
    s: DyadicTime,
    t: DyadicTime,
    u: &SpectralField,
) -> Result<SpectralField> {
    let y = evolve(model, omega, s, t, &u.to_state(model.basis()))?;
    SpectralField::from_state(model.basis(), &y)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NseTrajectory {
    pub times: Vec<DyadicTime>,
    pub v: Vec<SpectralField>,
    pub z: Vec<SpectralField>,
    pub zj: Vec<Vec<f64>>,
}

/// Per-step series; entry `n` describes the step ending at `times[n]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyDiagnostics {
    pub times: Vec<f64>,
    /// `|v|²`.
    pub h_norm_sq: Vec<f64>,
    /// `‖v‖²`.
    pub v_norm_sq: Vec<f64>,
    /// `Σ_j |z_j|` at the start of the step.
    pub sum_abs_z: Vec<f64>,
    /// Difference quotient of `|v|²`.
    pub energy_rate: Vec<f64>,
    /// `ν/4 ‖v‖²`.
    pub dissipation: Vec<f64>,
    /// `(νλ₁/4 − 2β̂Σ|z_j|)|v|²`, `λ₁ = 1`.
    pub damping: Vec<f64>,
    /// `4|f|²/ν + 4α²|z|²/ν + 4ν‖z‖² + 4β̂Σ|z_j||z|²`.
    pub two_g: Vec<f64>,
    /// `2g` minus the left-hand side.
    pub slack: Vec<f64>,
    /// Difference quotient of `‖v‖²`.
    pub enstrophy_rate: Vec<f64>,
    /// `|(B(v+z, v+z), v)|`.
    pub nonlinear: Vec<f64>,
    /// `2β̂Σ|z_j|(|v|² + |z|²)`.
    pub nonlinear_bound: Vec<f64>,
    pub beta_hat: f64,
    /// `max (‖v‖ + ‖z‖)` over the late window.
    pub absorbing_radius: f64,
    pub poincare_holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbsorbingRow {
    pub lookback: f64,
    pub radii: Vec<f64>,
    /// `(max − min) / max` over the initial fields.
    pub relative_spread: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbsorbingReport {
    pub amplitudes: Vec<f64>,
    pub tolerance: f64,
    pub rows: Vec<AbsorbingRow>,
    /// Smallest tested lookback from which every longer one agrees.
    pub t_star: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{flow_residual, noise_for};
    use crate::wiener::KeySurgery;

    fn small(viscosity: f64) -> NseConfig {
        NseConfig { resolution: 6, level: 4, ..NseConfig::desk(viscosity) }
    }

    #[test]
    fn rejects_unstable_steps() {
        let cfg = NseConfig { level: 3, ..NseConfig::desk(0.1) };
        assert!(NseModel::new(cfg).is_err());
        assert!(NseModel::new(NseConfig::desk(0.0)).is_err());
    }

    #[test]
    fn single_mode_decays_geometrically() {
        let m = NseModel::new(small(0.2).unforced().noiseless()).unwrap();
        let u0 = SpectralField::from_modes(m.basis(), &[(2, 1, Complex64::new(0.3, -0.2))]).unwrap();
        let w = noise_for(&m, 1, 0);
        let steps = 5;
        let t = DyadicTime::from_grid(steps, m.config().level);
        let u = nse_evolve(&m, &w, DyadicTime::ZERO, t, &u0).unwrap();
        let factor = (1.0 + 0.2 * 5.0 * m.config().step_size()).powi(-(steps as i32));
        let (i, _) = m.basis().locate(2, 1).unwrap();
        assert!((u.psi()[i] - u0.psi()[i] * factor).norm() < 1e-14);
    }

    #[test]
    fn composition_is_bit_exact() {
        let m = NseModel::new(small(0.1)).unwrap();
        let w = noise_for(&m, 3, 1);
        let x = m.low_mode_field(2.0).to_state(m.basis());
        let (s, r, t) = (DyadicTime::new(-3, 2), DyadicTime::new(1, 4), DyadicTime::from_int(1));
        assert_eq!(flow_residual(&m, &w, s, r, t, &[x]).unwrap(), 0.0);
    }

    #[test]
    fn noise_outside_window_is_invisible() {
        let m = NseModel::new(small(0.1)).unwrap();
        let w = noise_for(&m, 4, 2);
        let (s, t) = (DyadicTime::ZERO, DyadicTime::from_int(1));
        let u0 = m.low_mode_field(1.0);
        let base = nse_evolve(&m, &w, s, t, &u0).unwrap();
        let after = w.clone().with_surgery(KeySurgery::after(t, 9));
        let before = w.clone().with_surgery(KeySurgery::before(s - m.ou().cutoff(), 9));
        assert_eq!(nse_evolve(&m, &after, s, t, &u0).unwrap(), base);
        assert_eq!(nse_evolve(&m, &before, s, t, &u0).unwrap(), base);
        let inside = w.with_surgery(KeySurgery::after(s - DyadicTime::from_int(2), 9));
        assert_ne!(nse_evolve(&m, &inside, s, t, &u0).unwrap(), base);
    }

    #[test]
    fn dissipation_identity_without_input() {
        let m = NseModel::new(small(0.1).unforced().noiseless()).unwrap();
        let w = noise_for(&m, 0, 0);
        let traj = m.trajectory(&w, DyadicTime::ZERO, DyadicTime::from_int(1), &m.low_mode_field(1.0)).unwrap();
        let d = m.energy_diagnostics(&traj, DyadicTime::from_int(1)).unwrap();
        let (b, h, nu) = (m.basis(), m.config().step_size(), 0.1);
        for n in 0..d.slack.len() {
            let v = &traj.v[n + 1];
            let bn = m.bilinear(&traj.v[n], &traj.v[n]);
            let expected = 1.75 * nu * v.v_norm_sq(b) - nu / 4.0 * v.h_norm_sq(b) + nu * nu * h * v.a_norm_sq(b)
                - h * bn.h_norm_sq(b);
            assert!((d.slack[n] - expected).abs() <= 1e-8 * expected.abs().max(1.0));
            assert!(d.slack[n] >= -1e-8);
        }
        assert!(d.h_norm_sq.windows(2).all(|p| p[1] < p[0]));
        assert!(d.poincare_holds);
    }

    #[test]
    fn diagnostics_reject_ragged_trajectories() {
        let m = NseModel::new(small(0.1).noiseless()).unwrap();
        let w = noise_for(&m, 0, 0);
        let mut traj = m.trajectory(&w, DyadicTime::ZERO, DyadicTime::new(1, 2), &m.low_mode_field(1.0)).unwrap();
        traj.z.pop();
        assert!(m.energy_diagnostics(&traj, DyadicTime::from_int(1)).is_err());
    }
}
