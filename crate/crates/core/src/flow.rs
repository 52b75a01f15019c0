//! Stochastic flows `S(t,s;ω)` and the Markov semigroup they induce.
//!
//! A [`FlowModel`] maps a state at time `s` to a state at time `t ≥ s` for a
//! given noise realization. Times live on a dyadic grid; composition
//! `S(t,r;ω)∘S(r,s;ω) = S(t,s;ω)` is promised on that grid. Transition
//! operators `P_st f(x) = E f(S(t,s;ω)x)` are estimated by Monte Carlo over
//! fresh realizations.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::oracle::lift::FiniteFlowLift;
use crate::time::DyadicTime;
use crate::wiener::NoiseRealization;

pub type StateVector = Vec<f64>;

/// The flow-map contract. Implementations must be immutable after construction.
pub trait FlowModel: Send + Sync {
    fn name(&self) -> &str;

    fn state_dim(&self) -> usize;

    /// Level of the time grid on which composition is exact.
    fn grid_level(&self) -> u32;

    /// Number of Wiener components the model reads.
    fn noise_components(&self) -> usize;

    /// Apply `S(t,s;ω)` to `x`. Callers go through [`evolve`], which validates
    /// ordering, alignment and finiteness first and handles `s == t`.
    fn flow(&self, omega: &NoiseRealization, s: DyadicTime, t: DyadicTime, x: &[f64]) -> Result<StateVector>;

    /// Apply the same flow map to many states. Must agree bit-for-bit with
    /// repeated [`FlowModel::flow`] calls.
    fn flow_batch(
        &self,
        omega: &NoiseRealization,
        s: DyadicTime,
        t: DyadicTime,
        xs: &[StateVector],
    ) -> Result<Vec<StateVector>> {
        xs.iter().map(|x| self.flow(omega, s, t, x)).collect()
    }

    /// Finite-state models expose their exact kernel algebra through this hook.
    fn as_finite(&self) -> Option<&FiniteFlowLift> {
        None
    }
}

/// Realization `index` under `seed`, sized for `model`.
pub fn noise_for(model: &dyn FlowModel, seed: u64, index: u64) -> NoiseRealization {
    NoiseRealization::new(seed, index, model.noise_components().max(1))
}

fn check_span(model: &dyn FlowModel, s: DyadicTime, t: DyadicTime) -> Result<()> {
    if s > t {
        return Err(Error::Ordering { start: s.to_f64(), end: t.to_f64() });
    }
    let level = model.grid_level();
    s.grid_index_checked(level)?;
    t.grid_index_checked(level)?;
    Ok(())
}

fn check_state(model: &dyn FlowModel, x: &[f64]) -> Result<()> {
    if x.len() != model.state_dim() {
        return Err(Error::Dimension { expected: model.state_dim(), found: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("input state to {}", model.name())));
    }
    Ok(())
}

fn check_output(model: &dyn FlowModel, y: &[f64]) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("output of {}", model.name())));
    }
    Ok(())
}

/// `S(t,s;ω)x`.
pub fn evolve(
    model: &dyn FlowModel,
    omega: &NoiseRealization,
    s: DyadicTime,
    t: DyadicTime,
    x: &[f64],
) -> Result<StateVector> {
    check_span(model, s, t)?;
    check_state(model, x)?;
    if s == t {
        return Ok(x.to_vec());
    }
    let y = model.flow(omega, s, t, x)?;
    check_output(model, &y)?;
    Ok(y)
}

/// `S(t,s;ω)` applied to every state in `xs`.
pub fn evolve_batch(
    model: &dyn FlowModel,
    omega: &NoiseRealization,
    s: DyadicTime,
    t: DyadicTime,
    xs: &[StateVector],
) -> Result<Vec<StateVector>> {
    check_span(model, s, t)?;
    for x in xs {
        check_state(model, x)?;
    }
    if s == t {
        return Ok(xs.to_vec());
    }
    let ys = model.flow_batch(omega, s, t, xs)?;
    for y in &ys {
        check_output(model, y)?;
    }
    Ok(ys)
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `max_x ‖S(t,r)S(r,s)x − S(t,s)x‖` over `points`.
pub fn flow_residual(
    model: &dyn FlowModel,
    omega: &NoiseRealization,
    s: DyadicTime,
    r: DyadicTime,
    t: DyadicTime,
    points: &[StateVector],
) -> Result<f64> {
    let level = model.grid_level();
    for time in [s, r, t] {
        if !time.is_aligned(level) {
            return Err(Error::Alignment(format!(
                "time {time} is not on the level-{level} grid of {}",
                model.name()
            )));
        }
    }
    if !(s <= r && r <= t) {
        return Err(Error::Ordering { start: s.to_f64(), end: t.to_f64() });
    }
    let mut worst: f64 = 0.0;
    for x in points {
        let split = evolve(model, omega, r, t, &evolve(model, omega, s, r, x)?)?;
        let direct = evolve(model, omega, s, t, x)?;
        worst = worst.max(euclidean(&split, &direct));
    }
    Ok(worst)
}

/// Bounded test functions used for transition-operator estimates.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// `x ↦ x_i`; bounded on the compact sets the experiments visit.
    Coordinate(usize),
    Tanh(usize),
    /// Indicator of the box `lo ≤ x < hi` (componentwise).
    IndicatorBox { lo: Vec<f64>, hi: Vec<f64> },
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Constant(c) => *c,
            TestFunction::Coordinate(i) => x[*i],
            TestFunction::Tanh(i) => x[*i].tanh(),
            TestFunction::IndicatorBox { lo, hi } => {
                let inside = x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *v >= *l && *v < *h);
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn id(&self) -> String {
        match self {
            TestFunction::Constant(c) => format!("const({c})"),
            TestFunction::Coordinate(i) => format!("x{i}"),
            TestFunction::Tanh(i) => format!("tanh(x{i})"),
            TestFunction::IndicatorBox { lo, hi } => format!("1[{lo:?},{hi:?})"),
        }
    }
}

/// Hands out fresh realization indices so that repeated estimates are
/// independent yet reproducible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealizationStream {
    pub seed: u64,
    next: u64,
}

impl RealizationStream {
    pub fn new(seed: u64) -> Self {
        RealizationStream { seed, next: 0 }
    }

    pub fn starting_at(seed: u64, first: u64) -> Self {
        RealizationStream { seed, next: first }
    }

    pub fn take(&mut self, n: u64) -> std::ops::Range<u64> {
        let start = self.next;
        self.next += n;
        start..self.next
    }

    pub fn peek(&self) -> u64 {
        self.next
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Result<Estimate> {
        let n = values.len();
        if n < 2 {
            return Err(Error::Precondition("need at least two samples".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Evaluation(format!("test function returned {v}")));
        }
        if values.iter().all(|v| v.to_bits() == values[0].to_bits()) {
            return Ok(Estimate { mean: values[0], stderr: 0.0, n });
        }
        let mean = crate::measure::pairwise_sum(values) / n as f64;
        let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = crate::measure::pairwise_sum(&dev) / (n - 1) as f64;
        Ok(Estimate { mean, stderr: (var / n as f64).sqrt(), n })
    }
}

/// Monte Carlo estimate of `P_st f(x) = E f(S(t,s;ω)x)`.
pub fn markov_apply<F>(
    model: &dyn FlowModel,
    s: DyadicTime,
    t: DyadicTime,
    f: F,
    x: &[f64],
    stream: &mut RealizationStream,
    n_realizations: usize,
) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n_realizations < 2 {
        return Err(Error::Precondition("markov_apply needs n_realizations ≥ 2".into()));
    }
    let seed = stream.seed;
    let values: Vec<f64> = stream
        .take(n_realizations as u64)
        .into_par_iter()
        .map(|i| evolve(model, &noise_for(model, seed, i), s, t, x).map(|y| f(&y)))
        .collect::<Result<_>>()?;
    Estimate::from_samples(&values)
}

/// Direct and composed estimates of `P_su f(x)` versus `P_st(P_tu f)(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChapmanResidual {
    pub direct: f64,
    pub composed: f64,
    pub difference: f64,
    /// Combined standard error of the two estimates; zero for exact evaluations.
    pub combined_stderr: f64,
}

/// Compare `P_su f(x)` with `P_st(P_tu f)(x)`, the inner operator estimated
/// pointwise at each intermediate sample with `n_inner` fresh realizations.
#[allow(clippy::too_many_arguments)]
pub fn chapman_residual<F>(
    model: &dyn FlowModel,
    s: DyadicTime,
    t: DyadicTime,
    u: DyadicTime,
    f: F,
    x: &[f64],
    stream: &mut RealizationStream,
    n_outer: usize,
    n_inner: usize,
) -> Result<ChapmanResidual>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if !(s <= t && t <= u) {
        return Err(Error::Ordering { start: s.to_f64(), end: u.to_f64() });
    }
    if let Some(lift) = model.as_finite() {
        return lift.exact_chapman(s, t, u, &f, x);
    }
    let direct = markov_apply(model, s, u, &f, x, stream, n_outer)?;
    let seed = stream.seed;
    let outer = stream.take(n_outer as u64);
    let outer_first = outer.start;
    let inner_first = stream.take((n_outer * n_inner) as u64).start;
    let values: Vec<f64> = outer
        .into_par_iter()
        .map(|i| {
            let k = i - outer_first;
            let y = evolve(model, &noise_for(model, seed, i), s, t, x)?;
            let mut inner = RealizationStream::starting_at(seed, inner_first + k * n_inner as u64);
            markov_apply(model, t, u, &f, &y, &mut inner, n_inner).map(|e| e.mean)
        })
        .collect::<Result<_>>()?;
    let composed = Estimate::from_samples(&values)?;
    Ok(ChapmanResidual {
        direct: direct.mean,
        composed: composed.mean,
        difference: (direct.mean - composed.mean).abs(),
        combined_stderr: direct.stderr.hypot(composed.stderr),
    })
}
