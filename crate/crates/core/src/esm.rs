//! Pullback limits of measures and sets, trajectory selection, and evolution
//! systems of measures for the flow and for its Markov semigroup.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{evolve, evolve_batch, noise_for, FlowModel, RealizationStream, StateVector};
use crate::measure::{distance, hausdorff, mixture, EmpiricalMeasure, RandomMeasure};
use crate::time::DyadicTime;
use crate::wiener::keyed::{hash_words, inverse_normal_cdf, uniform_open};
use crate::wiener::NoiseRealization;

pub const DEFAULT_EPSILON: f64 = 0.02;
pub const DEFAULT_PARTICLES: usize = 1 << 10;

const TAG_FAMILY: u64 = 0x4641_4d49_4c59_0001;

/// Start times `s₀ > s₁ > …` pulled back from a fixed anchor `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct PullbackSchedule {
    anchor: DyadicTime,
    starts: Vec<DyadicTime>,
    epsilon: f64,
}

impl PullbackSchedule {
    pub fn new(anchor: DyadicTime, starts: Vec<DyadicTime>, epsilon: f64) -> Result<Self> {
        if starts.is_empty() {
            return Err(Error::Config("pullback schedule needs at least one start time".into()));
        }
        if starts.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Config("start times must be strictly decreasing".into()));
        }
        if starts[0] > anchor {
            return Err(Error::Ordering { start: starts[0].to_f64(), end: anchor.to_f64() });
        }
        if !(epsilon > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {epsilon}")));
        }
        Ok(PullbackSchedule { anchor, starts, epsilon })
    }

    /// `s_k = t − c·2^k` for `k = 0..=k_max`.
    pub fn geometric(anchor: DyadicTime, c: DyadicTime, k_max: u32, epsilon: f64) -> Result<Self> {
        let starts = (0..=k_max)
            .map(|k| {
                let lookback = DyadicTime::new(c.numerator() << k, c.level());
                anchor.checked_sub(lookback).ok_or_else(|| Error::Resolution("schedule underflows".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(anchor, starts, epsilon)
    }

    pub fn anchor(&self) -> DyadicTime {
        self.anchor
    }

    pub fn starts(&self) -> &[DyadicTime] {
        &self.starts
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// A time-indexed source of initial measures `ρ_s`.
pub trait MeasureFamily: Send + Sync {
    fn dim(&self) -> usize;

    /// `n` particles for time `t`; distinct `key`s give independent draws.
    fn sample(&self, t: DyadicTime, n: usize, key: u64) -> Result<EmpiricalMeasure>;
}

/// The same measure at every time.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantFamily(pub EmpiricalMeasure);

impl MeasureFamily for ConstantFamily {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn sample(&self, _: DyadicTime, _: usize, _: u64) -> Result<EmpiricalMeasure> {
        Ok(self.0.clone())
    }
}

fn keyed_std_normal(words: &[u64]) -> f64 {
    inverse_normal_cdf(uniform_open(hash_words(words)))
}

/// Isotropic Gaussians `N(m(t), std²·I)`, sampled from keyed randomness.
#[derive(Clone)]
pub struct GaussianFamily {
    mean: Arc<dyn Fn(f64) -> StateVector + Send + Sync>,
    std: f64,
    dim: usize,
    seed: u64,
}

impl std::fmt::Debug for GaussianFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaussianFamily").field("std", &self.std).field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl GaussianFamily {
    pub fn new(dim: usize, std: f64, seed: u64, mean: Arc<dyn Fn(f64) -> StateVector + Send + Sync>) -> Self {
        GaussianFamily { mean, std, dim, seed }
    }

    /// Time-independent `N(center, std²·I)`.
    pub fn fixed(center: StateVector, std: f64, seed: u64) -> Self {
        let dim = center.len();
        Self::new(dim, std, seed, Arc::new(move |_| center.clone()))
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn mean_at(&self, t: f64) -> StateVector {
        (self.mean)(t)
    }
}

impl MeasureFamily for GaussianFamily {
    fn dim(&self) -> usize {
        self.dim
    }
    fn sample(&self, t: DyadicTime, n: usize, key: u64) -> Result<EmpiricalMeasure> {
        let m = (self.mean)(t.to_f64());
        if m.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, found: m.len() });
        }
        let tk = ((t.numerator() as u64) << 8) ^ t.level() as u64;
        let particles = (0..n)
            .map(|i| {
                (0..self.dim)
                    .map(|c| m[c] + self.std * keyed_std_normal(&[TAG_FAMILY, self.seed, key, tk, i as u64, c as u64]))
                    .collect()
            })
            .collect();
        EmpiricalMeasure::uniform(particles)
    }
}

/// Uniform draws from an axis-aligned box, time-independent.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxFamily {
    pub lo: StateVector,
    pub hi: StateVector,
    pub seed: u64,
}

impl MeasureFamily for BoxFamily {
    fn dim(&self) -> usize {
        self.lo.len()
    }
    fn sample(&self, _: DyadicTime, n: usize, key: u64) -> Result<EmpiricalMeasure> {
        let particles = (0..n)
            .map(|i| {
                (0..self.lo.len())
                    .map(|c| {
                        let u = uniform_open(hash_words(&[TAG_FAMILY + 1, self.seed, key, i as u64, c as u64]));
                        self.lo[c] + u * (self.hi[c] - self.lo[c])
                    })
                    .collect()
            })
            .collect();
        EmpiricalMeasure::uniform(particles)
    }
}

/// Sampling key for the `k`-th iterate drawn under `omega`.
pub fn draw_key(omega: &NoiseRealization, k: usize) -> u64 {
    hash_words(&[omega.master_seed, omega.realization_index, k as u64])
}

/// Per-iterate record of a pullback run.
#[derive(Clone, Debug, PartialEq)]
pub struct PullbackDiagnostics {
    pub start_times: Vec<DyadicTime>,
    /// `distances[k−1] = D(iterate_k, iterate_{k−1})`.
    pub distances: Vec<f64>,
    pub means: Vec<StateVector>,
    pub spreads: Vec<f64>,
    pub converged: bool,
    pub converged_at: Option<usize>,
    /// Why the run stopped early without converging, if it did.
    pub stop_reason: Option<String>,
}

fn is_blow_up(e: &Error) -> bool {
    matches!(e, Error::NonFinite(_) | Error::Divergence { .. })
}

/// `S(t, s_k; ω)ρ_{s_k}` along the schedule until two consecutive iterates are
/// within `ε` twice in a row, or an iterate coincides exactly with its
/// predecessor. Running out of schedule is reported, not raised.
pub fn pullback_measure(
    model: &dyn FlowModel,
    omega: &NoiseRealization,
    schedule: &PullbackSchedule,
    family: &dyn MeasureFamily,
    n_particles: usize,
) -> Result<(EmpiricalMeasure, PullbackDiagnostics)> {
    if family.dim() != model.state_dim() {
        return Err(Error::Dimension { expected: model.state_dim(), found: family.dim() });
    }
    let t = schedule.anchor();
    let mut diag = PullbackDiagnostics {
        start_times: Vec::new(),
        distances: Vec::new(),
        means: Vec::new(),
        spreads: Vec::new(),
        converged: false,
        converged_at: None,
        stop_reason: None,
    };
    let mut previous: Option<EmpiricalMeasure> = None;
    let mut hits = 0;
    for (k, &s) in schedule.starts().iter().enumerate() {
        let rho = family.sample(s, n_particles, draw_key(omega, k))?;
        let pushed = match evolve_batch(model, omega, s, t, rho.particles()) {
            Ok(p) => p,
            Err(e) if is_blow_up(&e) => {
                diag.stop_reason = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        let iterate = rho.with_particles(pushed)?;
        diag.start_times.push(s);
        diag.means.push(iterate.mean());
        diag.spreads.push(iterate.spread());
        if let Some(prev) = &previous {
            let d = distance(&iterate, prev)?;
            diag.distances.push(d);
            hits = if d < schedule.epsilon() { hits + 1 } else { 0 };
            if d == 0.0 || hits >= 2 {
                diag.converged = true;
                diag.converged_at = Some(k);
                return Ok((iterate, diag));
            }
        }
        previous = Some(iterate);
    }
    let last = previous.ok_or_else(|| Error::Precondition("no iterate could be computed".into()))?;
    if diag.stop_reason.is_none() {
        diag.stop_reason = Some("schedule exhausted".into());
    }
    Ok((last, diag))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleTrace {
    pub lookbacks: Vec<DyadicTime>,
    pub values: Vec<f64>,
    pub test_function: String,
}

/// `M_s = ∫ f d(S(t, t−s; ω)ρ_{t−s})` for each lookback `s`.
pub fn martingale_trace<F>(
    model: &dyn FlowModel,
    omega: &NoiseRealization,
    t: DyadicTime,
    f: F,
    f_id: &str,
    family: &dyn MeasureFamily,
    lookbacks: &[DyadicTime],
    n_particles: usize,
) -> Result<MartingaleTrace>
where
    F: Fn(&[f64]) -> f64,
{
    if lookbacks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("lookbacks must be strictly increasing".into()));
    }
    let mut values = Vec::with_capacity(lookbacks.len());
    for (k, &s) in lookbacks.iter().enumerate() {
        let start = t - s;
        let rho = family.sample(start, n_particles, draw_key(omega, k))?;
        let pushed = rho.with_particles(evolve_batch(model, omega, start, t, rho.particles())?)?;
        values.push(pushed.expect(&f)?);
    }
    Ok(MartingaleTrace { lookbacks: lookbacks.to_vec(), values, test_function: f_id.to_string() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttractorCloud {
    pub time: DyadicTime,
    pub particles: Vec<StateVector>,
    /// Hausdorff distance between consecutive clouds.
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Union over seed clouds of `S(t, s_k; ω)B`, until consecutive clouds are
/// within `ε` in Hausdorff distance.
pub fn pullback_attractor(
    model: &dyn FlowModel,
    omega: &NoiseRealization,
    seed_clouds: &[Vec<StateVector>],
    schedule: &PullbackSchedule,
) -> Result<AttractorCloud> {
    if seed_clouds.is_empty() || seed_clouds.iter().any(|b| b.is_empty()) {
        return Err(Error::Precondition("seed clouds must be nonempty".into()));
    }
    let t = schedule.anchor();
    let seeds: Vec<StateVector> = seed_clouds.concat();
    let mut history = Vec::new();
    let mut previous: Option<Vec<StateVector>> = None;
    for &s in schedule.starts() {
        let cloud = match evolve_batch(model, omega, s, t, &seeds) {
            Ok(c) => c,
            Err(e) if is_blow_up(&e) => break,
            Err(e) => return Err(e),
        };
        if let Some(prev) = &previous {
            let d = hausdorff(&cloud, prev);
            history.push(d);
            if d < schedule.epsilon() {
                return Ok(AttractorCloud { time: t, particles: cloud, history, converged: true });
            }
        }
        previous = Some(cloud);
    }
    Ok(AttractorCloud { time: t, particles: previous.unwrap_or_default(), history, converged: false })
}

/// Hausdorff distance between `S(t,s;ω)A(s)` and `A(t)`.
pub fn attractor_invariance_residual(
    model: &dyn FlowModel,
    omega: &NoiseRealization,
    cloud_s: &AttractorCloud,
    cloud_t: &AttractorCloud,
) -> Result<f64> {
    if !(cloud_s.converged && cloud_t.converged) {
        return Err(Error::Precondition("attractor clouds must be converged".into()));
    }
    let pushed = evolve_batch(model, omega, cloud_s.time, cloud_t.time, &cloud_s.particles)?;
    Ok(hausdorff(&pushed, &cloud_t.particles))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectedTrajectory {
    pub times: Vec<DyadicTime>,
    pub states: Vec<StateVector>,
}

/// How the attractor is accessed when selecting a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub enum AttractorSource {
    /// Singleton attractor: pull `probes` back by `lookback`; they must agree within `tolerance`.
    Contracting { lookback: DyadicTime, probes: Vec<StateVector>, tolerance: f64 },
    /// Finite lift: nested-set intersection to the given depth.
    Finite { depth: usize },
}

/// A trajectory `x_t` inside the attractor with `x_t = S(t,s;ω)x_s`.
pub fn select_trajectory(
    model: &dyn FlowModel,
    omega: &NoiseRealization,
    times: &[DyadicTime],
    source: &AttractorSource,
) -> Result<SelectedTrajectory> {
    let Some(&t0) = times.first() else {
        return Err(Error::Precondition("no times given".into()));
    };
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Ordering { start: t0.to_f64(), end: times[times.len() - 1].to_f64() });
    }
    let states = match source {
        AttractorSource::Finite { depth } => {
            let lift = model
                .as_finite()
                .ok_or_else(|| Error::Unsupported("nested-set selection needs a finite model".into()))?;
            lift.select_trajectory(omega, times, *depth)?
        }
        AttractorSource::Contracting { lookback, probes, tolerance } => {
            if probes.is_empty() {
                return Err(Error::Precondition("need at least one probe".into()));
            }
            let start = t0 - *lookback;
            let pulled = evolve_batch(model, omega, start, t0, probes)?;
            let spread = crate::measure::diameter(&pulled);
            if spread > *tolerance {
                return Err(Error::Unsupported(format!(
                    "attractor is not a singleton: probes stay {spread:e} apart after lookback {lookback}"
                )));
            }
            let mut states = vec![pulled[0].clone()];
            for w in times.windows(2) {
                let next = evolve(model, omega, w[0], w[1], states.last().unwrap())?;
                states.push(next);
            }
            states
        }
    };
    Ok(SelectedTrajectory { times: times.to_vec(), states })
}

/// Equal-weight mixture over the realizations of a random measure.
pub fn esm_mean(family: &RandomMeasure) -> Result<EmpiricalMeasure> {
    let members: Vec<EmpiricalMeasure> = family.iter().map(|(_, m)| m.clone()).collect();
    let w = 1.0 / members.len() as f64;
    mixture(&members, &vec![w; members.len()])
}

#[derive(Clone, Debug, PartialEq)]
pub struct EsmResidual {
    pub per_pair: Vec<f64>,
    pub max: f64,
    /// Mean distance between two independent `n`-particle draws of `ρ_t`.
    pub baseline: f64,
    /// `4 × baseline`.
    pub tolerance: f64,
}

impl EsmResidual {
    pub fn within_tolerance(&self) -> bool {
        self.max <= self.tolerance
    }
}

const BASELINE_REPLICATES: u64 = 4;

/// `max D(P_st ρ_s, ρ_t)` over the given pairs; each particle of `ρ_s` is
/// pushed with its own fresh realization.
pub fn esm_residual(
    model: &dyn FlowModel,
    family: &dyn MeasureFamily,
    pairs: &[(DyadicTime, DyadicTime)],
    n: usize,
    stream: &mut RealizationStream,
) -> Result<EsmResidual> {
    if n < 2 {
        return Err(Error::Precondition("esm_residual needs n ≥ 2".into()));
    }
    let seed = stream.seed;
    let mut per_pair = Vec::with_capacity(pairs.len());
    let mut baselines = Vec::new();
    for &(s, t) in pairs {
        let key = stream.take(1).start;
        let rho_s = family.sample(s, n, key)?;
        let idx = stream.take(n as u64);
        let first = idx.start;
        let pushed: Vec<StateVector> = rho_s
            .particles()
            .par_iter()
            .enumerate()
            .map(|(i, x)| evolve(model, &noise_for(model, seed, first + i as u64), s, t, x))
            .collect::<Result<_>>()?;
        let estimate = rho_s.with_particles(pushed)?;
        let target = family.sample(t, n, stream.take(1).start)?;
        per_pair.push(distance(&estimate, &target)?);
        for _ in 0..BASELINE_REPLICATES {
            let a = family.sample(t, n, stream.take(1).start)?;
            let b = family.sample(t, n, stream.take(1).start)?;
            baselines.push(distance(&a, &b)?);
        }
    }
    let baseline = baselines.iter().sum::<f64>() / baselines.len().max(1) as f64;
    let max = per_pair.iter().copied().fold(0.0, f64::max);
    Ok(EsmResidual { per_pair, max, baseline, tolerance: 4.0 * baseline })
}
