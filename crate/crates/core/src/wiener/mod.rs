//! Deterministic two-sided Wiener paths.
//!
//! A [`NoiseRealization`] is a handle, not a buffer. Path values are computed
//! on demand from keyed randomness:
//!
//! * each unit interval `[n, n+1]` gets an independent `N(0,1)` increment keyed
//!   by `(seed, realization, component, n)`;
//! * points inside a unit interval come from Lévy midpoint displacement, keyed
//!   additionally by `(level, offset)`.
//!
//! Values are held internally as integer multiples of `2^-30` ("ticks"). All
//! path arithmetic is therefore exact: a coarse increment is bit-for-bit the
//! sum of its two children, and a sum of grid increments equals the endpoint
//! difference exactly.

pub mod keyed;

use crate::error::{Error, Result};
use crate::time::DyadicTime;

use keyed::{hash_words, inverse_normal_cdf, uniform_open};

const TICK_BITS: i32 = 30;
const TICK: f64 = 1.0 / (1u64 << TICK_BITS) as f64;

const TAG_UNIT: u64 = 0x5749_454e_4552_0001;
const TAG_BRIDGE: u64 = 0x5749_454e_4552_0002;

/// Resolution and horizon of the noise store.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WienerLimits {
    pub max_level: u32,
    /// Largest admissible `|t|`.
    pub horizon: i64,
}

impl Default for WienerLimits {
    fn default() -> Self {
        WienerLimits { max_level: 20, horizon: 1 << 16 }
    }
}

/// Re-keys the unit intervals `start..end` (optionally of one component).
///
/// Used to check that a computation does not read noise it should not depend on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeySurgery {
    pub component: Option<usize>,
    pub start: i64,
    pub end: i64,
    pub salt: u64,
}

impl KeySurgery {
    /// Every unit interval lying entirely after `t`.
    pub fn after(t: DyadicTime, salt: u64) -> Self {
        KeySurgery { component: None, start: t.ceil_int(), end: i64::MAX, salt }
    }

    /// Every unit interval lying entirely before `t`.
    pub fn before(t: DyadicTime, salt: u64) -> Self {
        KeySurgery { component: None, start: i64::MIN, end: t.floor_int(), salt }
    }

    fn applies(&self, component: usize, interval: i64) -> bool {
        self.component.is_none_or(|c| c == component) && interval >= self.start && interval < self.end
    }
}

/// One noise realization `ω`: a family of independent two-sided Brownian paths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseRealization {
    pub master_seed: u64,
    pub realization_index: u64,
    pub num_components: usize,
    pub limits: WienerLimits,
    pub surgery: Option<KeySurgery>,
}

impl NoiseRealization {
    pub fn new(master_seed: u64, realization_index: u64, num_components: usize) -> Self {
        NoiseRealization {
            master_seed,
            realization_index,
            num_components,
            limits: WienerLimits::default(),
            surgery: None,
        }
    }

    pub fn with_limits(mut self, limits: WienerLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn with_surgery(mut self, surgery: KeySurgery) -> Self {
        self.surgery = Some(surgery);
        self
    }

    fn salt(&self, component: usize, interval: i64) -> u64 {
        match self.surgery {
            Some(s) if s.applies(component, interval) => s.salt,
            _ => 0,
        }
    }

    /// The keyed uniform behind the unit increment of `[interval, interval+1]`.
    pub fn unit_uniform(&self, component: usize, interval: i64) -> f64 {
        uniform_open(hash_words(&[
            TAG_UNIT,
            self.master_seed,
            self.realization_index,
            component as u64,
            interval as u64,
            self.salt(component, interval),
        ]))
    }

    fn unit_ticks(&self, component: usize, interval: i64) -> i64 {
        to_ticks(inverse_normal_cdf(self.unit_uniform(component, interval)))
    }

    /// Midpoint displacement at `offset · 2^-level` inside `[interval, interval+1]`.
    fn bridge_ticks(&self, component: usize, interval: i64, level: u32, offset: i64, left: i64, right: i64) -> i64 {
        let z = inverse_normal_cdf(uniform_open(hash_words(&[
            TAG_BRIDGE,
            self.master_seed,
            self.realization_index,
            component as u64,
            interval as u64,
            level as u64,
            offset as u64,
            self.salt(component, interval),
        ])));
        // conditional variance of the midpoint of an interval of length 2^-(level-1)
        let sd = (-((level + 1) as f64) / 2.0).exp2();
        (left + right).div_euclid(2) + to_ticks(sd * z)
    }

    fn check_component(&self, component: usize) -> Result<()> {
        if component >= self.num_components {
            return Err(Error::Index { index: component, limit: self.num_components });
        }
        Ok(())
    }

    fn check_time(&self, t: DyadicTime) -> Result<()> {
        if t.level() > self.limits.max_level {
            return Err(Error::Resolution(format!(
                "time {t} needs level {} > L_max {}",
                t.level(),
                self.limits.max_level
            )));
        }
        if t.floor_int() < -self.limits.horizon || t.ceil_int() > self.limits.horizon {
            return Err(Error::Resolution(format!("time {t} beyond horizon {}", self.limits.horizon)));
        }
        Ok(())
    }

    /// `W(n)` for integer `n`, in ticks.
    fn integer_ticks(&self, component: usize, n: i64) -> i64 {
        if n >= 0 {
            (0..n).map(|k| self.unit_ticks(component, k)).sum()
        } else {
            -(n..0).map(|k| self.unit_ticks(component, k)).sum::<i64>()
        }
    }

    /// Bridge value `W(n + offset·2^-level) − W(n)` by bisection, in ticks.
    fn bridge_point(&self, component: usize, interval: i64, unit: i64, level: u32, offset: i64) -> i64 {
        if offset == 0 {
            return 0;
        }
        let mut lo = (0i64, 0i64); // (position at current level, value)
        let mut hi = (1i64, unit);
        for l in 1..=level {
            let mid_pos = lo.0 + hi.0; // position at level l
            let mid_val = self.bridge_ticks(component, interval, l, mid_pos, lo.1, hi.1);
            let mid_full = mid_pos << (level - l);
            let (lo_pos, hi_pos) = (lo.0 * 2, hi.0 * 2);
            if offset == mid_full {
                return mid_val;
            } else if offset < mid_full {
                lo = (lo_pos, lo.1);
                hi = (mid_pos, mid_val);
            } else {
                lo = (mid_pos, mid_val);
                hi = (hi_pos, hi.1);
            }
        }
        unreachable!("offset {offset} not reached at level {level}")
    }

    fn ticks_at(&self, component: usize, t: DyadicTime) -> i64 {
        let n = t.floor_int();
        let base = self.integer_ticks(component, n);
        if t.level() == 0 {
            return base;
        }
        let offset = t.numerator() - (n << t.level());
        let unit = self.unit_ticks(component, n);
        base + self.bridge_point(component, n, unit, t.level(), offset)
    }

    /// `W_component(t)`; `W(0) = 0`.
    pub fn wiener_at(&self, component: usize, t: DyadicTime) -> Result<f64> {
        self.check_component(component)?;
        self.check_time(t)?;
        Ok(self.ticks_at(component, t) as f64 * TICK)
    }

    /// All path values of one unit interval on the level grid, relative to `W(n)`.
    fn refine_interval(&self, component: usize, interval: i64, level: u32) -> Vec<i64> {
        let m = 1usize << level;
        let mut v = vec![0i64; m + 1];
        v[m] = self.unit_ticks(component, interval);
        for l in 1..=level {
            let stride = 1usize << (level - l);
            for k in (1..(1usize << l)).step_by(2) {
                let i = k * stride;
                v[i] = self.bridge_ticks(component, interval, l, k as i64, v[i - stride], v[i + stride]);
            }
        }
        v
    }

    fn increments_ticks(&self, component: usize, s: DyadicTime, t: DyadicTime, level: u32) -> Result<Vec<i64>> {
        self.check_component(component)?;
        if s > t {
            return Err(Error::Ordering { start: s.to_f64(), end: t.to_f64() });
        }
        if level > self.limits.max_level {
            return Err(Error::Resolution(format!("level {level} > L_max {}", self.limits.max_level)));
        }
        self.check_time(s)?;
        self.check_time(t)?;
        let i0 = s.grid_index_checked(level)?;
        let i1 = t.grid_index_checked(level)?;
        let per_unit = 1i64 << level;
        let mut out = Vec::with_capacity((i1 - i0) as usize);
        let mut i = i0;
        while i < i1 {
            let interval = i.div_euclid(per_unit);
            let path = self.refine_interval(component, interval, level);
            let stop = ((interval + 1) * per_unit).min(i1);
            while i < stop {
                let k = (i - interval * per_unit) as usize;
                out.push(path[k + 1] - path[k]);
                i += 1;
            }
        }
        Ok(out)
    }

    /// Grid increments of `W_component` over `[s, t]` at spacing `2^-level`.
    pub fn increments(&self, component: usize, s: DyadicTime, t: DyadicTime, level: u32) -> Result<Vec<f64>> {
        Ok(self
            .increments_ticks(component, s, t, level)?
            .into_iter()
            .map(|d| d as f64 * TICK)
            .collect())
    }

    /// Stationary Ornstein-Uhlenbeck value `z(t) = ∫_{t-T_cut}^t e^{-α(t-u)} dW(u)`.
    pub fn ou_at(&self, component: usize, cfg: &OUConfig, t: DyadicTime) -> Result<f64> {
        let start = t
            .checked_sub(cfg.cutoff())
            .ok_or_else(|| Error::Resolution("O-U window underflows".into()))?;
        if start.floor_int() < -self.limits.horizon {
            return Err(Error::Resolution(format!(
                "O-U window starting at {start} leaves the horizon {}",
                self.limits.horizon
            )));
        }
        let incs = self.increments(component, start, t, cfg.level)?;
        Ok(cfg.convolve(&incs))
    }
}

fn to_ticks(x: f64) -> i64 {
    (x * (1u64 << TICK_BITS) as f64).round() as i64
}

/// Interval-averaged exponential kernel weight for the `j`-th step back.
///
/// `∫` of `e^{-rate(t-u)}` over the step `[t-(j+1)h, t-jh]`, divided by `h`.
pub fn kernel_weight(rate: f64, h: f64, j: usize) -> f64 {
    let avg = if rate * h == 0.0 { 1.0 } else { -(-rate * h).exp_m1() / (rate * h) };
    (-rate * h * j as f64).exp() * avg
}

/// Discretized Ornstein-Uhlenbeck process with mean-reversion `rate` (α).
#[derive(Clone, Debug, PartialEq)]
pub struct OUConfig {
    rate: f64,
    level: u32,
    cutoff_steps: usize,
    weights: Vec<f64>,
}

impl OUConfig {
    pub const DEFAULT_TOLERANCE: f64 = 1e-8;

    /// Cutoff chosen as the smallest integer `T_cut` with `exp(-rate·T_cut) ≤ 1e-8`.
    pub fn new(rate: f64, level: u32) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Config(format!("O-U rate must be positive, got {rate}")));
        }
        let cutoff = (Self::DEFAULT_TOLERANCE.recip().ln() / rate).ceil().max(1.0) as i64;
        Self::with_cutoff(rate, DyadicTime::from_int(cutoff), level, Self::DEFAULT_TOLERANCE)
    }

    pub fn with_cutoff(rate: f64, cutoff: DyadicTime, level: u32, tolerance: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Config(format!("O-U rate must be positive, got {rate}")));
        }
        if (-rate * cutoff.to_f64()).exp() > tolerance {
            return Err(Error::Config(format!(
                "cutoff {cutoff} too short: exp(-{rate}·T_cut) exceeds {tolerance}"
            )));
        }
        let steps = cutoff.grid_index_checked(level)?;
        if steps <= 0 {
            return Err(Error::Config("cutoff must be positive".into()));
        }
        let h = (-(level as f64)).exp2();
        let weights = (0..steps as usize).map(|j| kernel_weight(rate, h, j)).collect();
        Ok(OUConfig { rate, level, cutoff_steps: steps as usize, weights })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cutoff_steps(&self) -> usize {
        self.cutoff_steps
    }

    pub fn cutoff(&self) -> DyadicTime {
        DyadicTime::from_grid(self.cutoff_steps as i64, self.level)
    }

    /// Truncation error bound `exp(-rate · T_cut)`.
    pub fn truncation_bound(&self) -> f64 {
        (-self.rate * self.cutoff().to_f64()).exp()
    }

    /// Convolve the kernel against the last `cutoff_steps` increments of `window`
    /// (oldest first). The result depends only on those increments.
    pub fn convolve(&self, window: &[f64]) -> f64 {
        assert!(window.len() >= self.cutoff_steps, "O-U window too short");
        let tail = &window[window.len() - self.cutoff_steps..];
        tail.iter()
            .zip(self.weights.iter().rev())
            .fold(0.0, |acc, (dw, w)| acc + w * dw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega(i: u64) -> NoiseRealization {
        NoiseRealization::new(42, i, 2)
    }

    #[test]
    fn anchored_at_zero() {
        for i in 0..5 {
            assert_eq!(omega(i).wiener_at(0, DyadicTime::ZERO).unwrap(), 0.0);
            assert_eq!(omega(i).wiener_at(1, DyadicTime::ZERO).unwrap(), 0.0);
        }
    }

    #[test]
    fn repeated_queries_are_bit_identical() {
        let w = omega(3);
        let t = DyadicTime::new(-37, 4);
        let a = w.wiener_at(1, t).unwrap();
        let _ = w.wiener_at(1, DyadicTime::new(-100, 4)).unwrap();
        assert_eq!(a.to_bits(), w.wiener_at(1, t).unwrap().to_bits());
    }

    #[test]
    fn level_and_component_errors() {
        let w = omega(0);
        assert!(matches!(w.wiener_at(0, DyadicTime::new(1, 21)), Err(Error::Resolution(_))));
        assert!(matches!(w.wiener_at(2, DyadicTime::ZERO), Err(Error::Index { .. })));
        assert!(matches!(
            w.wiener_at(0, DyadicTime::from_int((1 << 16) + 1)),
            Err(Error::Resolution(_))
        ));
        let s = DyadicTime::from_int(1);
        assert!(matches!(w.increments(0, s, DyadicTime::ZERO, 2), Err(Error::Ordering { .. })));
    }

    #[test]
    fn empty_interval_gives_no_increments() {
        let t = DyadicTime::new(3, 2);
        assert!(omega(0).increments(0, t, t, 4).unwrap().is_empty());
    }

    #[test]
    fn increments_telescope_exactly() {
        let w = omega(9);
        let (s, t) = (DyadicTime::new(-7, 2), DyadicTime::new(13, 3));
        let incs = w.increments(0, s, t, 5).unwrap();
        assert_eq!(incs.len(), 108);
        let sum: f64 = incs.iter().sum();
        let diff = w.wiener_at(0, t).unwrap() - w.wiener_at(0, s).unwrap();
        assert_eq!(sum.to_bits(), diff.to_bits());
    }

    #[test]
    fn level3_increments_over_unit_interval() {
        let w = omega(1);
        let incs = w.increments(1, DyadicTime::ZERO, DyadicTime::from_int(1), 3).unwrap();
        assert_eq!(incs.len(), 8);
        let sum: f64 = incs.iter().sum();
        assert_eq!(sum, w.wiener_at(1, DyadicTime::from_int(1)).unwrap());
    }

    #[test]
    fn grid_values_agree_with_pointwise_bisection() {
        let w = omega(5);
        let level = 6;
        let s = DyadicTime::from_int(-2);
        let incs = w.increments(0, s, DyadicTime::from_int(1), level).unwrap();
        let mut acc = w.wiener_at(0, s).unwrap();
        for (k, d) in incs.iter().enumerate() {
            acc += d;
            let t = s + DyadicTime::from_grid(k as i64 + 1, level);
            assert_eq!(acc.to_bits(), w.wiener_at(0, t).unwrap().to_bits(), "k={k}");
        }
    }

    #[test]
    fn surgery_only_touches_selected_intervals() {
        let w = omega(2);
        let cut = w.with_surgery(KeySurgery::after(DyadicTime::from_int(3), 99));
        let s = DyadicTime::from_int(-4);
        let t = DyadicTime::from_int(3);
        assert_eq!(w.increments(0, s, t, 4).unwrap(), cut.increments(0, s, t, 4).unwrap());
        let later = DyadicTime::from_int(5);
        assert_ne!(w.increments(0, t, later, 4).unwrap(), cut.increments(0, t, later, 4).unwrap());
    }

    #[test]
    fn ou_cutoff_respects_tolerance() {
        let cfg = OUConfig::new(1.0, 6).unwrap();
        assert!(cfg.truncation_bound() <= 1e-8);
        assert_eq!(cfg.cutoff(), DyadicTime::from_int(19));
        assert!(OUConfig::with_cutoff(1.0, DyadicTime::from_int(5), 6, 1e-8).is_err());
        assert!(OUConfig::new(0.0, 6).is_err());
    }

    #[test]
    fn ou_is_deterministic() {
        let cfg = OUConfig::new(2.0, 5).unwrap();
        let w = omega(4);
        let t = DyadicTime::new(3, 1);
        assert_eq!(w.ou_at(0, &cfg, t).unwrap().to_bits(), w.ou_at(0, &cfg, t).unwrap().to_bits());
    }
}
