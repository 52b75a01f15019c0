//! Weighted particle measures and the energy distance between them.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{euclidean, StateVector};

/// Weight sums further than this from one are renormalized on construction.
const RENORMALIZE_TOL: f64 = 1e-13;

/// Recursive pairwise summation; the association order depends only on the length.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if v.len() <= LEAF {
        return v.iter().fold(0.0, |a, b| a + b);
    }
    let (l, r) = v.split_at(v.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

/// A probability measure carried by finitely many weighted particles.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    particles: Vec<StateVector>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(particles: Vec<StateVector>, weights: Vec<f64>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::Weights("a measure needs at least one particle".into()));
        }
        if particles.len() != weights.len() {
            return Err(Error::Weights(format!(
                "{} particles but {} weights",
                particles.len(),
                weights.len()
            )));
        }
        let dim = particles[0].len();
        if let Some(p) = particles.iter().find(|p| p.len() != dim) {
            return Err(Error::Dimension { expected: dim, found: p.len() });
        }
        if particles.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("particle coordinate".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Weights("weights must be finite and nonnegative".into()));
        }
        let total = pairwise_sum(&weights);
        if total <= 0.0 {
            return Err(Error::Weights("weights sum to zero".into()));
        }
        let weights = if (total - 1.0).abs() > RENORMALIZE_TOL {
            weights.into_iter().map(|w| w / total).collect()
        } else {
            weights
        };
        Ok(EmpiricalMeasure { particles, weights })
    }

    pub fn uniform(particles: Vec<StateVector>) -> Result<Self> {
        let n = particles.len().max(1);
        Self::new(particles, vec![1.0 / n as f64; n])
    }

    pub fn dirac(x: StateVector) -> Self {
        EmpiricalMeasure { particles: vec![x], weights: vec![1.0] }
    }

    pub fn dim(&self) -> usize {
        self.particles[0].len()
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[StateVector] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// Image measure under `g`; weights are carried over unchanged.
    pub fn pushforward<G>(&self, g: G) -> Result<EmpiricalMeasure>
    where
        G: Fn(&[f64]) -> Result<StateVector>,
    {
        let particles = self.particles.iter().map(|x| g(x)).collect::<Result<Vec<_>>>()?;
        if particles.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("pushforward produced a non-finite particle".into()));
        }
        let dim = particles[0].len();
        if let Some(p) = particles.iter().find(|p| p.len() != dim) {
            return Err(Error::Dimension { expected: dim, found: p.len() });
        }
        Ok(EmpiricalMeasure { particles, weights: self.weights.clone() })
    }

    /// Replace the particle set, keeping the weights. Used for flows applied in batch.
    pub fn with_particles(&self, particles: Vec<StateVector>) -> Result<EmpiricalMeasure> {
        if particles.len() != self.len() {
            return Err(Error::Weights("particle count changed".into()));
        }
        Self::new(particles, self.weights.clone())
    }

    /// `Σ wᵢ f(xᵢ)`.
    pub fn expect<F: Fn(&[f64]) -> f64>(&self, f: F) -> Result<f64> {
        let terms = self
            .particles
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| {
                let v = f(x);
                if v.is_finite() {
                    Ok(w * v)
                } else {
                    Err(Error::Evaluation(format!("test function returned {v}")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&terms))
    }

    pub fn mean(&self) -> StateVector {
        (0..self.dim())
            .map(|i| {
                let terms: Vec<f64> = self.particles.iter().zip(&self.weights).map(|(x, w)| w * x[i]).collect();
                pairwise_sum(&terms)
            })
            .collect()
    }

    /// Root mean squared distance from the weighted mean.
    pub fn spread(&self) -> f64 {
        let m = self.mean();
        let terms: Vec<f64> = self
            .particles
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * euclidean(x, &m).powi(2))
            .collect();
        pairwise_sum(&terms).sqrt()
    }

    /// Largest pairwise distance between particles.
    pub fn diameter(&self) -> f64 {
        diameter(&self.particles)
    }

    /// Write `weight,x0,x1,…` rows with 17 significant digits.
    pub fn write_table<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("weight".to_string())
            .chain((0..self.dim()).map(|i| format!("x{i}")))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (x, w) in self.particles.iter().zip(&self.weights) {
            let mut row = format!("{w:.16e}");
            for v in x {
                row.push_str(&format!(",{v:.16e}"));
            }
            writeln!(out, "{row}")?;
        }
        Ok(())
    }

    pub fn read_table<R: BufRead>(input: R) -> Result<EmpiricalMeasure> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty measure table".into()))??;
        let cols = header.split(',').count();
        if cols < 2 || !header.starts_with("weight") {
            return Err(Error::Parse(format!("bad measure table header {header:?}")));
        }
        let mut particles = Vec::new();
        let mut weights = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", lineno + 2)))?;
            if fields.len() != cols {
                return Err(Error::Parse(format!("row {}: expected {cols} fields", lineno + 2)));
            }
            weights.push(fields[0]);
            particles.push(fields[1..].to_vec());
        }
        EmpiricalMeasure::new(particles, weights)
    }
}

/// `Σᵢ Σⱼ aᵢ bⱼ ‖xᵢ − yⱼ‖` with rows in parallel and a fixed reduction tree.
fn cross_mean(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    let rows: Vec<f64> = a
        .particles
        .par_iter()
        .zip(a.weights.par_iter())
        .map(|(x, wa)| {
            let terms: Vec<f64> = b.particles.iter().zip(&b.weights).map(|(y, wb)| wb * euclidean(x, y)).collect();
            wa * pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&rows)
}

/// Energy distance `2E‖X−Y‖ − E‖X−X′‖ − E‖Y−Y′‖`, clamped at zero against round-off.
pub fn distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::Dimension { expected: mu.dim(), found: nu.dim() });
    }
    let xy = cross_mean(mu, nu);
    let xx = cross_mean(mu, mu);
    let yy = cross_mean(nu, nu);
    Ok((2.0 * xy - xx - yy).max(0.0))
}

/// `Σ cₖ μₖ`.
pub fn mixture(measures: &[EmpiricalMeasure], mix_weights: &[f64]) -> Result<EmpiricalMeasure> {
    if measures.is_empty() || measures.len() != mix_weights.len() {
        return Err(Error::Weights(format!(
            "{} measures but {} mixing weights",
            measures.len(),
            mix_weights.len()
        )));
    }
    if mix_weights.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::Weights("mixing weights must be nonnegative".into()));
    }
    if (pairwise_sum(mix_weights) - 1.0).abs() > 1e-12 {
        return Err(Error::Weights("mixing weights must sum to one".into()));
    }
    let dim = measures[0].dim();
    let mut particles = Vec::new();
    let mut weights = Vec::new();
    for (m, c) in measures.iter().zip(mix_weights) {
        if m.dim() != dim {
            return Err(Error::Dimension { expected: dim, found: m.dim() });
        }
        particles.extend(m.particles.iter().cloned());
        weights.extend(m.weights.iter().map(|w| w * c));
    }
    EmpiricalMeasure::new(particles, weights)
}

/// One measure per realization index, for a contiguous block of indices.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomMeasure {
    assignment: BTreeMap<u64, EmpiricalMeasure>,
}

impl RandomMeasure {
    pub fn new(assignment: BTreeMap<u64, EmpiricalMeasure>) -> Result<Self> {
        let (Some(first), Some(last)) = (assignment.keys().next(), assignment.keys().next_back()) else {
            return Err(Error::Precondition("empty ensemble".into()));
        };
        if last - first + 1 != assignment.len() as u64 {
            return Err(Error::Precondition("realization indices must be contiguous".into()));
        }
        Ok(RandomMeasure { assignment })
    }

    pub fn from_sequence(first_index: u64, members: Vec<EmpiricalMeasure>) -> Result<Self> {
        Self::new((first_index..).zip(members).collect())
    }

    pub fn ensemble_size(&self) -> usize {
        self.assignment.len()
    }

    pub fn get(&self, index: u64) -> Option<&EmpiricalMeasure> {
        self.assignment.get(&index)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &EmpiricalMeasure)> {
        self.assignment.iter().map(|(k, v)| (*k, v))
    }
}

/// Largest pairwise distance within a point cloud.
pub fn diameter(points: &[StateVector]) -> f64 {
    points
        .par_iter()
        .enumerate()
        .map(|(i, x)| points[i + 1..].iter().map(|y| euclidean(x, y)).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

/// `sup_{a∈A} inf_{b∈B} ‖a − b‖` by exhaustive search.
pub fn hausdorff_semi(a: &[StateVector], b: &[StateVector]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if b.is_empty() {
        return f64::INFINITY;
    }
    a.par_iter()
        .map(|x| b.iter().map(|y| euclidean(x, y)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max)
}

pub fn hausdorff(a: &[StateVector], b: &[StateVector]) -> f64 {
    hausdorff_semi(a, b).max(hausdorff_semi(b, a))
}
