//! The constant `β` in `|⟨B(u, φ), u⟩| ≤ β|u|²` on the truncated space.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::field::{Basis, SpectralField};
use super::grid::Grid;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 10_000;

/// `sup_u |⟨B(u, φ), u⟩| / |u|²` over the truncation.
///
/// In the energy-orthonormal coordinates of [`SpectralField::to_state`] the
/// map `u ↦ B(u, φ)` is a matrix `T`; the quadratic form depends only on its
/// symmetric part, whose spectral radius is the answer.
pub fn estimate_beta(basis: &Basis, grid: &Grid, phi: &SpectralField) -> Result<f64> {
    if phi.resolution() != basis.n() {
        return Err(Error::Dimension { expected: basis.n(), found: phi.resolution() });
    }
    if phi.psi().iter().all(|p| p.norm() == 0.0) {
        return Ok(0.0);
    }
    let dim = basis.state_dim();
    let columns: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            let u = SpectralField::from_state(basis, &e).expect("basis-sized");
            grid.bilinear(basis, &u, phi).to_state(basis)
        })
        .collect();
    let t = DMatrix::from_fn(dim, dim, |i, j| columns[j][i]);
    let sym = (&t + t.transpose()) * 0.5;
    let eig = sym.try_symmetric_eigen(f64::EPSILON, MAX_SWEEPS).ok_or(Error::Iteration { iterations: MAX_SWEEPS })?;
    Ok(eig.eigenvalues.iter().fold(0.0, |m: f64, l| m.max(l.abs())))
}
