//! Oracles shared by the integration tests. Nothing here calls the library's
//! own closed forms; each value is recomputed from first principles.

#![allow(dead_code)]

use std::f64::consts::PI;

use rayon::prelude::*;
use stochflow::time::DyadicTime;
use stochflow::wiener::NoiseRealization;

/// Periodic solution of `m' = −a m + A cos t`.
pub fn cosine_response(rate: f64, amplitude: f64, t: f64) -> f64 {
    amplitude * (rate * t.cos() + t.sin()) / (1.0 + rate * rate)
}

/// `∫_{t−T}^t e^{−a(t−u)} cos u du` by composite Simpson with `n` panels.
pub fn simpson_cosine(rate: f64, t: f64, horizon: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = horizon / n as f64;
    let g = |u: f64| (-rate * (t - u)).exp() * u.cos();
    let mut acc = g(t - horizon) + g(t);
    for i in 1..n {
        let u = t - horizon + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(u);
    }
    acc * h / 3.0
}

/// `σ ∫_{t−T}^t e^{−a(t−u)} dW(u)` by the midpoint rule on Wiener values
/// sampled pointwise at level `level`.
pub fn stochastic_convolution(
    omega: &NoiseRealization,
    rate: f64,
    sigma: f64,
    t: DyadicTime,
    horizon: i64,
    level: u32,
) -> f64 {
    let h = (-(level as f64)).exp2();
    let steps = horizon << level;
    let start = t.grid_index(level).expect("aligned") - steps;
    let values: Vec<f64> = (0..=steps)
        .into_par_iter()
        .map(|i| omega.wiener_at(0, DyadicTime::from_grid(start + i, level)).unwrap())
        .collect();
    let terms: Vec<f64> = (0..steps as usize)
        .map(|i| {
            let mid = (steps as usize - i) as f64 * h - 0.5 * h;
            (-rate * mid).exp() * (values[i + 1] - values[i])
        })
        .collect();
    sigma * terms.iter().sum::<f64>()
}

/// Energy distance between `N(0, v1)` and `N(0, v2)`.
pub fn centered_gaussian_energy_distance(v1: f64, v2: f64) -> f64 {
    let cross = (2.0 * (v1 + v2) / PI).sqrt();
    2.0 * cross - (4.0 * v1 / PI).sqrt() - (4.0 * v2 / PI).sqrt()
}

pub fn sample_mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_variance(v: &[f64]) -> f64 {
    let m = sample_mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (sample_mean(a), sample_mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}
