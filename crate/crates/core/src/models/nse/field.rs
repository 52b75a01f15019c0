//! Divergence-free velocity fields on the torus `[0, 2π]²`, stored through
//! their stream function on a canonical half-plane of wavevectors.
//!
//! With `u = (∂_y ψ, −∂_x ψ)` the velocity coefficients are
//! `û_k = i(k₂, −k₁) ψ̂_k`, so `k·û_k = 0` for every `k`. Only wavevectors
//! with `k₂ > 0`, or `k₂ = 0` and `k₁ > 0`, are stored; the others follow from
//! `ψ̂_{−k} = conj ψ̂_k`. The zero mode is absent.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Wavevector bookkeeping for resolution `N` (`|k₁|, |k₂| ≤ N`).
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    n: usize,
    modes: Vec<(i64, i64)>,
    k_sq: Vec<f64>,
    /// `√2 · 2π · |k|`: maps stream coefficients to coordinates whose
    /// Euclidean norm is the `H` norm of the velocity.
    scale: Vec<f64>,
    lookup: Vec<Option<usize>>,
}

impl Basis {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("spectral resolution must be positive".into()));
        }
        let ni = n as i64;
        let side = 2 * n + 1;
        let mut modes = Vec::new();
        let mut lookup = vec![None; side * side];
        for k2 in 0..=ni {
            for k1 in -ni..=ni {
                if k2 == 0 && k1 <= 0 {
                    continue;
                }
                lookup[Self::slot(n, k1, k2)] = Some(modes.len());
                modes.push((k1, k2));
            }
        }
        let k_sq: Vec<f64> = modes.iter().map(|&(a, b)| (a * a + b * b) as f64).collect();
        let scale = k_sq.iter().map(|k| std::f64::consts::SQRT_2 * 2.0 * PI * k.sqrt()).collect();
        Ok(Basis { n, modes, k_sq, scale, lookup })
    }

    fn slot(n: usize, k1: i64, k2: i64) -> usize {
        let side = 2 * n as i64 + 1;
        ((k1 + n as i64) * side + (k2 + n as i64)) as usize
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[(i64, i64)] {
        &self.modes
    }

    /// `|k|²` per stored mode.
    pub fn k_sq(&self) -> &[f64] {
        &self.k_sq
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn contains(&self, k1: i64, k2: i64) -> bool {
        let n = self.n as i64;
        (k1, k2) != (0, 0) && k1.abs() <= n && k2.abs() <= n
    }

    /// Stored index of `k` and whether `k` is the conjugate partner.
    pub fn locate(&self, k1: i64, k2: i64) -> Option<(usize, bool)> {
        if !self.contains(k1, k2) {
            return None;
        }
        if let Some(i) = self.lookup[Self::slot(self.n, k1, k2)] {
            return Some((i, false));
        }
        self.lookup[Self::slot(self.n, -k1, -k2)].map(|i| (i, true))
    }

    /// Dimension of the real state vector.
    pub fn state_dim(&self) -> usize {
        2 * self.len()
    }
}

/// A velocity field in the truncated space, by its stream coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    n: usize,
    psi: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(basis: &Basis) -> Self {
        SpectralField { n: basis.n, psi: vec![Complex64::new(0.0, 0.0); basis.len()] }
    }

    pub fn from_psi(basis: &Basis, psi: Vec<Complex64>) -> Result<Self> {
        if psi.len() != basis.len() {
            return Err(Error::Dimension { expected: basis.len(), found: psi.len() });
        }
        Ok(SpectralField { n: basis.n, psi })
    }

    /// Set `ψ̂_k` for listed wavevectors (either half-plane).
    pub fn from_modes(basis: &Basis, modes: &[(i64, i64, Complex64)]) -> Result<Self> {
        let mut f = Self::zeros(basis);
        for &(k1, k2, c) in modes {
            let (i, conj) = basis.locate(k1, k2).ok_or_else(|| {
                Error::Config(format!("wavevector ({k1},{k2}) outside the resolution-{} truncation", basis.n))
            })?;
            f.psi[i] += if conj { c.conj() } else { c };
        }
        Ok(f)
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    pub fn psi_mut(&mut self) -> &mut [Complex64] {
        &mut self.psi
    }

    pub fn stream(&self, basis: &Basis, k1: i64, k2: i64) -> Complex64 {
        match basis.locate(k1, k2) {
            Some((i, false)) => self.psi[i],
            Some((i, true)) => self.psi[i].conj(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// `(û¹_k, û²_k) = i(k₂, −k₁)ψ̂_k`.
    pub fn velocity(&self, basis: &Basis, k1: i64, k2: i64) -> (Complex64, Complex64) {
        let p = self.stream(basis, k1, k2);
        let i = Complex64::new(0.0, 1.0);
        (i * (k2 as f64) * p, -i * (k1 as f64) * p)
    }

    pub fn scaled(&self, c: f64) -> SpectralField {
        SpectralField { n: self.n, psi: self.psi.iter().map(|p| p * c).collect() }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        SpectralField { n: self.n, psi: self.psi.iter().zip(&other.psi).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        SpectralField { n: self.n, psi: self.psi.iter().zip(&other.psi).map(|(a, b)| a - b).collect() }
    }

    fn weighted_sq(&self, basis: &Basis, power: i32) -> f64 {
        let c = 2.0 * (2.0 * PI) * (2.0 * PI);
        c * self.psi.iter().zip(basis.k_sq()).map(|(p, k)| k.powi(power) * p.norm_sqr()).sum::<f64>()
    }

    /// `|u|² = ∫ |u|²`.
    pub fn h_norm_sq(&self, basis: &Basis) -> f64 {
        self.weighted_sq(basis, 1)
    }

    /// `‖u‖² = Σ_{ij} ∫ |∂_j u_i|²`.
    pub fn v_norm_sq(&self, basis: &Basis) -> f64 {
        self.weighted_sq(basis, 2)
    }

    /// `|Au|²` with `A = −Δ` on divergence-free fields.
    pub fn a_norm_sq(&self, basis: &Basis) -> f64 {
        self.weighted_sq(basis, 3)
    }

    /// `(u, w) = ∫ u·w`.
    pub fn inner(&self, basis: &Basis, other: &SpectralField) -> f64 {
        let c = 2.0 * (2.0 * PI) * (2.0 * PI);
        c * self
            .psi
            .iter()
            .zip(&other.psi)
            .zip(basis.k_sq())
            .map(|((a, b), k)| k * (a * b.conj()).re)
            .sum::<f64>()
    }

    /// `⟨u, w⟩ = Σ_{ij} ∫ ∂_j u_i ∂_j w_i`.
    pub fn v_inner(&self, basis: &Basis, other: &SpectralField) -> f64 {
        let c = 2.0 * (2.0 * PI) * (2.0 * PI);
        c * self
            .psi
            .iter()
            .zip(&other.psi)
            .zip(basis.k_sq())
            .map(|((a, b), k)| k * k * (a * b.conj()).re)
            .sum::<f64>()
    }

    /// Coordinates `(Re ψ̂, Im ψ̂)·√2·2π|k|`; the Euclidean norm equals `|u|`.
    pub fn to_state(&self, basis: &Basis) -> Vec<f64> {
        let mut x = Vec::with_capacity(basis.state_dim());
        for (p, c) in self.psi.iter().zip(basis.scale()) {
            x.push(p.re * c);
            x.push(p.im * c);
        }
        x
    }

    pub fn from_state(basis: &Basis, x: &[f64]) -> Result<Self> {
        if x.len() != basis.state_dim() {
            return Err(Error::Dimension { expected: basis.state_dim(), found: x.len() });
        }
        let psi = x.chunks_exact(2).zip(basis.scale()).map(|(p, c)| Complex64::new(p[0] / c, p[1] / c)).collect();
        Ok(SpectralField { n: basis.n, psi })
    }

    /// Full velocity coefficient pair on every wavevector.
    pub fn to_pair(&self, basis: &Basis) -> FourierPair {
        let mut pair = FourierPair::zeros(basis.n);
        let n = basis.n as i64;
        for k1 in -n..=n {
            for k2 in -n..=n {
                if (k1, k2) == (0, 0) {
                    continue;
                }
                let (a, b) = self.velocity(basis, k1, k2);
                let s = pair.slot(k1, k2);
                pair.u1[s] = a;
                pair.u2[s] = b;
            }
        }
        pair
    }

    /// `max_k |k·û_k|`; zero up to the rounding of the coefficient products.
    pub fn max_divergence(&self, basis: &Basis) -> f64 {
        let pair = self.to_pair(basis);
        pair.max_divergence()
    }

    /// Text snapshot: header `N=… time=… seed=…`, then one line per stored
    /// wavevector with the two velocity coefficients at 17 significant digits.
    pub fn write_snapshot<W: Write>(&self, basis: &Basis, time: f64, seed: u64, mut out: W) -> Result<()> {
        writeln!(out, "N={} time={time:.16e} seed={seed}", basis.n)?;
        writeln!(out, "k1 k2 re_u1 im_u1 re_u2 im_u2")?;
        for &(k1, k2) in basis.modes() {
            let (a, b) = self.velocity(basis, k1, k2);
            writeln!(out, "{k1} {k2} {:.16e} {:.16e} {:.16e} {:.16e}", a.re, a.im, b.re, b.im)?;
        }
        Ok(())
    }

    /// Inverse of [`write_snapshot`](Self::write_snapshot); returns the field,
    /// time and seed. Lines may list any wavevectors; the result is projected.
    pub fn read_snapshot<R: BufRead>(input: R) -> Result<(Basis, SpectralField, f64, u64)> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty snapshot".into()))??;
        let mut n = None;
        let mut time = None;
        let mut seed = None;
        for tok in header.split_whitespace() {
            let (key, val) = tok.split_once('=').ok_or_else(|| Error::Parse(format!("bad header token {tok:?}")))?;
            let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("header {key}: {e}"));
            match key {
                "N" => n = Some(val.parse::<usize>().map_err(|e| bad(&e))?),
                "time" => time = Some(val.parse::<f64>().map_err(|e| bad(&e))?),
                "seed" => seed = Some(val.parse::<u64>().map_err(|e| bad(&e))?),
                _ => return Err(Error::Parse(format!("unknown header key {key:?}"))),
            }
        }
        let (Some(n), Some(time), Some(seed)) = (n, time, seed) else {
            return Err(Error::Parse("snapshot header needs N, time and seed".into()));
        };
        let basis = Basis::new(n)?;
        let _columns = lines.next().ok_or_else(|| Error::Parse("missing column header".into()))??;
        let mut pair = FourierPair::zeros(n);
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(Error::Parse(format!("row {}: expected 6 fields", row + 3)));
            }
            let int = |s: &str| s.parse::<i64>().map_err(|e| Error::Parse(format!("row {}: {e}", row + 3)));
            let real = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", row + 3)));
            let (k1, k2) = (int(f[0])?, int(f[1])?);
            if !basis.contains(k1, k2) {
                return Err(Error::Parse(format!("row {}: wavevector ({k1},{k2}) out of range", row + 3)));
            }
            let a = Complex64::new(real(f[2])?, real(f[3])?);
            let b = Complex64::new(real(f[4])?, real(f[5])?);
            pair.set(k1, k2, a, b);
        }
        let field = leray_project(&basis, &pair);
        Ok((basis, field, time, seed))
    }
}

/// Unconstrained velocity coefficients `(û¹_k, û²_k)` on every `|k_i| ≤ N`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierPair {
    n: usize,
    pub u1: Vec<Complex64>,
    pub u2: Vec<Complex64>,
}

impl FourierPair {
    pub fn zeros(n: usize) -> Self {
        let side = 2 * n + 1;
        let z = Complex64::new(0.0, 0.0);
        FourierPair { n, u1: vec![z; side * side], u2: vec![z; side * side] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn slot(&self, k1: i64, k2: i64) -> usize {
        Basis::slot(self.n, k1, k2)
    }

    pub fn get(&self, k1: i64, k2: i64) -> (Complex64, Complex64) {
        let s = self.slot(k1, k2);
        (self.u1[s], self.u2[s])
    }

    /// Set `k` and its conjugate partner `−k`.
    pub fn set(&mut self, k1: i64, k2: i64, a: Complex64, b: Complex64) {
        let s = self.slot(k1, k2);
        self.u1[s] = a;
        self.u2[s] = b;
        let t = self.slot(-k1, -k2);
        self.u1[t] = a.conj();
        self.u2[t] = b.conj();
    }

    pub fn max_divergence(&self) -> f64 {
        let n = self.n as i64;
        let mut worst: f64 = 0.0;
        for k1 in -n..=n {
            for k2 in -n..=n {
                let (a, b) = self.get(k1, k2);
                worst = worst.max((a * k1 as f64 + b * k2 as f64).norm());
            }
        }
        worst
    }
}

/// Leray projection `û_k − k(k·û_k)/|k|²`, returned as a stream function.
///
/// Assumes `û_{−k} = conj û_k`; only the stored half-plane is read. The
/// zero mode is dropped.
pub fn leray_project(basis: &Basis, pair: &FourierPair) -> SpectralField {
    let mut out = SpectralField::zeros(basis);
    let i = Complex64::new(0.0, 1.0);
    for (idx, &(k1, k2)) in basis.modes().iter().enumerate() {
        let (a, b) = pair.get(k1, k2);
        out.psi[idx] = -i * (a * k2 as f64 - b * k1 as f64) / basis.k_sq()[idx];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mode_count_and_lookup() {
        let b = Basis::new(3).unwrap();
        assert_eq!(b.len(), (7 * 7 - 1) / 2);
        assert_eq!(b.locate(1, 0), Some((b.locate(1, 0).unwrap().0, false)));
        assert!(b.locate(-1, 0).unwrap().1);
        assert_eq!(b.locate(0, 0), None);
        assert_eq!(b.locate(4, 0), None);
    }

    #[test]
    fn state_norm_is_energy_norm() {
        let b = Basis::new(4).unwrap();
        let f = SpectralField::from_modes(&b, &[(1, 2, c(0.3, -0.1)), (-3, 1, c(0.0, 0.7)), (2, 0, c(1.0, 0.0))]).unwrap();
        let x = f.to_state(&b);
        let e: f64 = x.iter().map(|v| v * v).sum();
        assert!((e - f.h_norm_sq(&b)).abs() < 1e-12 * e);
        let back = SpectralField::from_state(&b, &x).unwrap();
        for (p, q) in f.psi().iter().zip(back.psi()) {
            assert!((p - q).norm() < 1e-15);
        }
    }

    #[test]
    fn shear_mode_norms() {
        // u = (sin y, 0): ψ = −cos y, |u|² = ∫ sin² y = 2π², ‖u‖² = 2π²
        let b = Basis::new(2).unwrap();
        let f = SpectralField::from_modes(&b, &[(0, 1, c(-0.5, 0.0))]).unwrap();
        let (u1, u2) = f.velocity(&b, 0, 1);
        assert!((u1 - c(0.0, -0.5)).norm() < 1e-16 && u2.norm() == 0.0);
        assert!((f.h_norm_sq(&b) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((f.v_norm_sq(&b) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn leray_kills_gradients_and_fixes_solenoidal_fields() {
        let b = Basis::new(3).unwrap();
        let mut grad = FourierPair::zeros(3);
        for &(k1, k2) in b.modes() {
            let phi = c(0.1 * k1 as f64, 0.05 * k2 as f64 + 0.2);
            grad.set(k1, k2, c(0.0, 1.0) * k1 as f64 * phi, c(0.0, 1.0) * k2 as f64 * phi);
        }
        let p = leray_project(&b, &grad);
        assert!(p.psi().iter().all(|z| z.norm() < 1e-16));

        let f = SpectralField::from_modes(&b, &[(1, 1, c(0.2, 0.1)), (-2, 3, c(-1.0, 0.4))]).unwrap();
        let again = leray_project(&b, &f.to_pair(&b));
        for (x, y) in f.psi().iter().zip(again.psi()) {
            assert!((x - y).norm() <= 1e-15 * x.norm().max(1e-300));
        }
        assert_eq!(f.max_divergence(&b), 0.0);
    }

    #[test]
    fn snapshot_round_trip() {
        let b = Basis::new(2).unwrap();
        let f = SpectralField::from_modes(&b, &[(1, 1, c(0.25, -0.125)), (2, -1, c(1.0 / 3.0, 0.0))]).unwrap();
        let mut buf = Vec::new();
        f.write_snapshot(&b, 1.5, 42, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("N=2 time=1.5000000000000000e0 seed=42\nk1 k2 re_u1"));
        let (b2, g, t, s) = SpectralField::read_snapshot(buf.as_slice()).unwrap();
        assert_eq!((b2.n(), t, s), (2, 1.5, 42));
        for (x, y) in f.psi().iter().zip(g.psi()) {
            assert!((x - y).norm() <= 1e-16);
        }
        assert!(SpectralField::read_snapshot("N=2 seed=1\n".as_bytes()).is_err());
    }
}
