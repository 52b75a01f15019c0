//! Finite-state random maps with exact rational kernels.
//!
//! A [`FiniteFlow`] draws one symbol per integer time step, independently
//! across steps, and applies the step map indexed by `(time mod period,
//! symbol)`. Every quantity here is a [`BigRational`]; equality is exact.

pub mod lemma;
pub mod lift;
pub mod remarks;

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub const DEFAULT_DEPTH_LIMIT: usize = 12;

/// A probability vector over `0..n` with exact rational masses.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactMeasure {
    masses: Vec<Q>,
}

impl ExactMeasure {
    pub fn new(masses: Vec<Q>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::Weights("empty exact measure".into()));
        }
        if masses.iter().any(|m| m.is_negative()) {
            return Err(Error::Weights("negative mass".into()));
        }
        let total: Q = masses.iter().sum();
        if !total.is_one() {
            return Err(Error::Weights(format!("masses sum to {total}, not 1")));
        }
        Ok(ExactMeasure { masses })
    }

    pub fn dirac(n: usize, x: usize) -> Self {
        let mut masses = vec![Q::zero(); n];
        masses[x] = Q::one();
        ExactMeasure { masses }
    }

    pub fn uniform(n: usize) -> Self {
        ExactMeasure { masses: vec![q(1, n as i64); n] }
    }

    pub fn masses(&self) -> &[Q] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|i| !self.masses[*i].is_zero()).collect()
    }

    pub fn expect(&self, f: &[Q]) -> Q {
        self.masses.iter().zip(f).map(|(m, v)| m * v).sum()
    }

    /// Image under a deterministic map of states.
    pub fn push_map(&self, map: &[usize]) -> ExactMeasure {
        let mut out = vec![Q::zero(); self.len()];
        for (x, m) in self.masses.iter().enumerate() {
            if !m.is_zero() {
                out[map[x]] += m;
            }
        }
        ExactMeasure { masses: out }
    }

    pub fn apply(&self, k: &Kernel) -> ExactMeasure {
        ExactMeasure { masses: k.left_apply(&self.masses) }
    }

    pub fn total_variation(&self, other: &ExactMeasure) -> Q {
        let sum: Q = self.masses.iter().zip(&other.masses).map(|(a, b)| (a - b).abs()).sum();
        sum / q(2, 1)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.masses.iter().map(to_f64).collect()
    }
}

pub fn to_f64(x: &Q) -> f64 {
    num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::NAN)
}

/// Row-stochastic rational matrix; `k[x][y] = P(x → y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Kernel {
    rows: Vec<Vec<Q>>,
}

impl Kernel {
    pub fn identity(n: usize) -> Self {
        Kernel {
            rows: (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect(),
        }
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        Kernel { rows }
    }

    pub fn rows(&self) -> &[Vec<Q>] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// `self · other` (first `self`, then `other`).
    pub fn then(&self, other: &Kernel) -> Kernel {
        let n = self.n();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| &self.rows[i][k] * &other.rows[k][j]).sum())
                    .collect()
            })
            .collect();
        Kernel { rows }
    }

    /// Row vector times kernel.
    pub fn left_apply(&self, v: &[Q]) -> Vec<Q> {
        let n = self.n();
        (0..n).map(|j| (0..n).map(|i| &v[i] * &self.rows[i][j]).sum()).collect()
    }

    /// Kernel times column vector: `(Kf)(x) = Σ_y k[x][y] f(y)`.
    pub fn right_apply(&self, f: &[Q]) -> Vec<Q> {
        self.rows.iter().map(|row| row.iter().zip(f).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn is_row_stochastic(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|v| !v.is_negative()) && r.iter().sum::<Q>().is_one())
    }
}

/// Finite-state, finite-alphabet random dynamical system in discrete time.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteFlow {
    n_states: usize,
    probs: Vec<Q>,
    /// `maps[phase][symbol][state]`.
    maps: Vec<Vec<Vec<usize>>>,
    depth_limit: usize,
}

impl FiniteFlow {
    pub fn new(n_states: usize, probs: Vec<Q>, maps: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if n_states == 0 {
            return Err(Error::Precondition("finite flow needs at least one state".into()));
        }
        if probs.is_empty() || probs.iter().any(|p| p.is_negative()) {
            return Err(Error::Weights("alphabet probabilities must be nonnegative".into()));
        }
        let total: Q = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::Weights(format!("alphabet probabilities sum to {total}")));
        }
        if maps.is_empty() {
            return Err(Error::Precondition("period must be positive".into()));
        }
        for phase in &maps {
            if phase.len() != probs.len() {
                return Err(Error::Dimension { expected: probs.len(), found: phase.len() });
            }
            for map in phase {
                if map.len() != n_states {
                    return Err(Error::Dimension { expected: n_states, found: map.len() });
                }
                if let Some(&y) = map.iter().find(|&&y| y >= n_states) {
                    return Err(Error::Index { index: y, limit: n_states });
                }
            }
        }
        Ok(FiniteFlow { n_states, probs, maps, depth_limit: DEFAULT_DEPTH_LIMIT })
    }

    /// Time-homogeneous flow with one map per symbol.
    pub fn homogeneous(n_states: usize, probs: Vec<Q>, maps: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(n_states, probs, vec![maps])
    }

    pub fn identity(n_states: usize, alphabet: usize) -> Self {
        let id: Vec<usize> = (0..n_states).collect();
        Self::homogeneous(n_states, vec![q(1, alphabet as i64); alphabet], vec![id; alphabet])
            .expect("identity flow is valid")
    }

    pub fn with_depth_limit(mut self, limit: usize) -> Self {
        self.depth_limit = limit;
        self
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn alphabet(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[Q] {
        &self.probs
    }

    pub fn period(&self) -> usize {
        self.maps.len()
    }

    pub fn depth_limit(&self) -> usize {
        self.depth_limit
    }

    pub fn phase(&self, time: i64) -> usize {
        time.rem_euclid(self.period() as i64) as usize
    }

    pub fn step_map(&self, time: i64, symbol: usize) -> &[usize] {
        &self.maps[self.phase(time)][symbol]
    }

    pub fn step_kernel(&self, time: i64) -> Kernel {
        let n = self.n_states;
        let mut rows = vec![vec![Q::zero(); n]; n];
        for (a, p) in self.probs.iter().enumerate() {
            for (x, &y) in self.step_map(time, a).iter().enumerate() {
                rows[x][y] += p;
            }
        }
        Kernel { rows }
    }

    /// Averaged transition kernel over `[s, t)`.
    pub fn kernel(&self, s: i64, t: i64) -> Result<Kernel> {
        if s > t {
            return Err(Error::Ordering { start: s as f64, end: t as f64 });
        }
        let mut k = Kernel::identity(self.n_states);
        for time in s..t {
            k = k.then(&self.step_kernel(time));
        }
        Ok(k)
    }

    /// Composed map `S(t,s)` for a word covering `[s, t)`.
    pub fn composed_map(&self, word: &[usize], s: i64) -> Vec<usize> {
        let mut map: Vec<usize> = (0..self.n_states).collect();
        for (k, &a) in word.iter().enumerate() {
            let step = self.step_map(s + k as i64, a);
            for y in map.iter_mut() {
                *y = step[*y];
            }
        }
        map
    }

    /// Probability of a word under the i.i.d. symbol law.
    pub fn word_prob(&self, word: &[usize]) -> Q {
        word.iter().map(|a| self.probs[*a].clone()).product()
    }

    /// All words of a given length, symbol at position 0 varying fastest.
    pub fn words(&self, len: usize) -> Result<Vec<Vec<usize>>> {
        if len > self.depth_limit {
            return Err(Error::DepthLimit { depth: len, limit: self.depth_limit });
        }
        let a = self.alphabet();
        let count = a.checked_pow(len as u32).ok_or(Error::DepthLimit { depth: len, limit: self.depth_limit })?;
        Ok((0..count)
            .map(|mut w| {
                (0..len)
                    .map(|_| {
                        let sym = w % a;
                        w /= a;
                        sym
                    })
                    .collect()
            })
            .collect())
    }
}

/// `S(t,s;ω)x` where `word[k]` is the symbol at time `s + k`.
pub fn ff_evolve(flow: &FiniteFlow, word: &[usize], s: i64, t: i64, state: usize) -> Result<usize> {
    if s > t {
        return Err(Error::Ordering { start: s as f64, end: t as f64 });
    }
    let steps = (t - s) as usize;
    if word.len() < steps {
        return Err(Error::Precondition(format!("word of length {} does not cover {steps} steps", word.len())));
    }
    if state >= flow.n_states {
        return Err(Error::Index { index: state, limit: flow.n_states });
    }
    if let Some(&a) = word[..steps].iter().find(|&&a| a >= flow.alphabet()) {
        return Err(Error::Index { index: a, limit: flow.alphabet() });
    }
    Ok(flow.composed_map(&word[..steps], s)[state])
}

/// Exact pushforward of `mu` over `[s, t)`, per word and averaged.
#[derive(Clone, Debug, PartialEq)]
pub struct Pushforward {
    pub per_word: Vec<(Vec<usize>, Q, ExactMeasure)>,
    pub averaged: ExactMeasure,
    pub kernel: Kernel,
}

pub fn ff_pushforward(flow: &FiniteFlow, mu: &ExactMeasure, s: i64, t: i64) -> Result<Pushforward> {
    if s > t {
        return Err(Error::Ordering { start: s as f64, end: t as f64 });
    }
    if mu.len() != flow.n_states {
        return Err(Error::Dimension { expected: flow.n_states, found: mu.len() });
    }
    let words = flow.words((t - s) as usize)?;
    let per_word: Vec<(Vec<usize>, Q, ExactMeasure)> = words
        .into_par_iter()
        .map(|w| {
            let image = mu.push_map(&flow.composed_map(&w, s));
            let p = flow.word_prob(&w);
            (w, p, image)
        })
        .collect();
    let mut avg = vec![Q::zero(); flow.n_states];
    for (_, p, m) in &per_word {
        for (a, b) in avg.iter_mut().zip(m.masses()) {
            *a += p * b;
        }
    }
    let kernel = flow.kernel(s, t)?;
    Ok(Pushforward { per_word, averaged: ExactMeasure { masses: avg }, kernel })
}

/// Periodic evolution system `ρ_t`, indexed by `t mod period`.
#[derive(Clone, Debug, PartialEq)]
pub struct EsmFamily {
    phases: Vec<ExactMeasure>,
}

impl EsmFamily {
    pub fn at(&self, t: i64) -> &ExactMeasure {
        &self.phases[t.rem_euclid(self.phases.len() as i64) as usize]
    }

    pub fn phases(&self) -> &[ExactMeasure] {
        &self.phases
    }

    /// `ρ_t K_t = ρ_{t+1}` for every phase.
    pub fn verify(&self, flow: &FiniteFlow) -> bool {
        (0..flow.period() as i64).all(|t| &self.at(t).apply(&flow.step_kernel(t)) == self.at(t + 1))
    }
}

/// What the period map's stationary set looks like when it is not a point.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplicityReport {
    /// Number of extreme stationary measures (affine dimension + 1).
    pub dimension: usize,
    pub closed_classes: Vec<Vec<usize>>,
    /// One periodic family per closed class; every ESM of this kind is a convex combination.
    pub extreme_families: Vec<EsmFamily>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EsmSolution {
    Unique(EsmFamily),
    Multiple(MultiplicityReport),
}

impl EsmSolution {
    pub fn unique(self) -> Result<EsmFamily> {
        match self {
            EsmSolution::Unique(f) => Ok(f),
            EsmSolution::Multiple(r) => Err(Error::Precondition(format!(
                "evolution system is not unique ({} extreme families)",
                r.dimension
            ))),
        }
    }
}

/// Basis of the null space of `m` by exact row reduction.
pub fn null_space(m: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for v in a[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let factor = a[i][c].clone();
                for j in 0..cols {
                    let delta = &factor * &a[r][j];
                    a[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); cols];
            v[f] = Q::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[i][f].clone();
            }
            v
        })
        .collect()
}

/// Stationary row vectors of `k`: null space of `kᵀ − I`.
fn stationary_basis(k: &Kernel) -> Vec<Vec<Q>> {
    let n = k.n();
    let m: Vec<Vec<Q>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let v = k.rows[j][i].clone();
                    if i == j {
                        v - Q::one()
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    null_space(&m)
}

fn normalize(v: Vec<Q>) -> Result<ExactMeasure> {
    let total: Q = v.iter().sum();
    if total.is_zero() {
        return Err(Error::Precondition("stationary vector has zero mass".into()));
    }
    ExactMeasure::new(v.into_iter().map(|x| x / &total).collect())
}

/// Closed communicating classes of the directed graph `k[x][y] > 0`.
pub fn closed_classes(k: &Kernel) -> Vec<Vec<usize>> {
    let n = k.n();
    let mut reach: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j || !k.rows[i][j].is_zero()).collect()).collect();
    for m in 0..n {
        for i in 0..n {
            if reach[i][m] {
                for j in 0..n {
                    if reach[m][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let mut classes = Vec::new();
    for x in 0..n {
        if seen[x] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&y| reach[x][y] && reach[y][x]).collect();
        for &y in &class {
            seen[y] = true;
        }
        let closed = (0..n).all(|y| !reach[x][y] || class.contains(&y));
        if closed {
            classes.push(class);
        }
    }
    classes
}

/// Propagate a stationary vector of the period map through one period.
fn family_from(flow: &FiniteFlow, rho0: ExactMeasure) -> EsmFamily {
    let mut phases = vec![rho0];
    for t in 0..flow.period() as i64 - 1 {
        let next = phases[t as usize].apply(&flow.step_kernel(t));
        phases.push(next);
    }
    EsmFamily { phases }
}

/// Solve `P_{t,t+1} ρ_t = ρ_{t+1}` for periodic families.
pub fn ff_esm_solve(flow: &FiniteFlow) -> Result<EsmSolution> {
    let period_map = flow.kernel(0, flow.period() as i64)?;
    let basis = stationary_basis(&period_map);
    if basis.len() == 1 {
        let fam = family_from(flow, normalize(basis.into_iter().next().unwrap())?);
        debug_assert!(fam.verify(flow));
        return Ok(EsmSolution::Unique(fam));
    }
    let classes = closed_classes(&period_map);
    let mut extreme_families = Vec::new();
    for class in &classes {
        let sub = Kernel::from_rows(
            class.iter().map(|&i| class.iter().map(|&j| period_map.rows[i][j].clone()).collect()).collect(),
        );
        let local = stationary_basis(&sub);
        let local = normalize(local.into_iter().next().ok_or_else(|| {
            Error::Precondition("closed class without a stationary vector".into())
        })?)?;
        let mut full = vec![Q::zero(); flow.n_states];
        for (k, &i) in class.iter().enumerate() {
            full[i] = local.masses[k].clone();
        }
        extreme_families.push(family_from(flow, ExactMeasure { masses: full }));
    }
    Ok(EsmSolution::Multiple(MultiplicityReport { dimension: basis.len(), closed_classes: classes, extreme_families }))
}

/// `S(t, t−depth; ω)X` for the symbol path `path(time)`.
pub fn ff_attractor(flow: &FiniteFlow, path: &dyn Fn(i64) -> usize, t: i64, depth: usize) -> BTreeSet<usize> {
    let s = t - depth as i64;
    let word: Vec<usize> = (s..t).map(path).collect();
    flow.composed_map(&word, s).into_iter().collect()
}

/// Flow-ESM `μ_{tω} = S(t,t−D;ω)ρ_{t−D}`, enumerated over all words on `[t−D, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PullbackEsm {
    pub depth: usize,
    pub per_word: Vec<(Vec<usize>, Q, ExactMeasure)>,
    /// Probability of the words whose composed map is constant.
    pub synchronized_mass: Q,
    /// `E TV(μ^{(D)}, μ^{(D−1)})`; zero once every word has synchronized.
    pub tv_gap: Q,
    pub average: ExactMeasure,
}

pub fn ff_pullback_esm(flow: &FiniteFlow, family: &EsmFamily, t: i64, depth: usize) -> Result<PullbackEsm> {
    if depth == 0 {
        return Err(Error::Precondition("pullback depth must be positive".into()));
    }
    let s = t - depth as i64;
    let words = flow.words(depth)?;
    let rows: Vec<(Vec<usize>, Q, ExactMeasure, bool, Q)> = words
        .into_par_iter()
        .map(|w| {
            let map = flow.composed_map(&w, s);
            let sync = map.iter().all(|&y| y == map[0]);
            let deep = family.at(s).push_map(&map);
            let shallow = family.at(s + 1).push_map(&flow.composed_map(&w[1..], s + 1));
            let tv = deep.total_variation(&shallow);
            let p = flow.word_prob(&w);
            (w, p, deep, sync, tv)
        })
        .collect();
    let mut avg = vec![Q::zero(); flow.n_states];
    let mut synchronized_mass = Q::zero();
    let mut tv_gap = Q::zero();
    let mut per_word = Vec::with_capacity(rows.len());
    for (w, p, m, sync, tv) in rows {
        for (a, b) in avg.iter_mut().zip(m.masses()) {
            *a += &p * b;
        }
        if sync {
            synchronized_mass += &p;
        }
        tv_gap += &p * tv;
        per_word.push((w, p, m));
    }
    Ok(PullbackEsm { depth, per_word, synchronized_mass, tv_gap, average: ExactMeasure { masses: avg } })
}

/// Nested-set selection: `A(t₀)` from the intersection of `S(t₀,−n)A(−n)`
/// over increasing `n`, then the smallest state pushed forward.
pub fn ff_select_trajectory(
    flow: &FiniteFlow,
    path: &dyn Fn(i64) -> usize,
    times: &[i64],
    depth: usize,
) -> Result<Vec<usize>> {
    let Some(&t0) = times.first() else {
        return Err(Error::Precondition("no times given".into()));
    };
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Ordering { start: times[0] as f64, end: times[times.len() - 1] as f64 });
    }
    // C_{n,m} = S(t0, t0−n) A(t0−n) with A(t0−n) taken as the depth-`depth` image of X.
    let mut nested: Option<BTreeSet<usize>> = None;
    for n in 0..=depth as i64 {
        let base = ff_attractor(flow, path, t0 - n, depth);
        let word: Vec<usize> = (t0 - n..t0).map(path).collect();
        let map = flow.composed_map(&word, t0 - n);
        let c: BTreeSet<usize> = base.iter().map(|&x| map[x]).collect();
        nested = Some(match nested {
            None => c,
            Some(prev) => prev.intersection(&c).copied().collect(),
        });
    }
    let set = nested.unwrap_or_default();
    let &x0 = set.iter().next().ok_or_else(|| Error::Precondition("empty nested intersection".into()))?;
    let mut out = vec![x0];
    for w in times.windows(2) {
        let word: Vec<usize> = (w[0]..w[1]).map(path).collect();
        let prev = *out.last().unwrap();
        out.push(ff_evolve(flow, &word, w[0], w[1], prev)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap_hold() -> FiniteFlow {
        FiniteFlow::homogeneous(2, vec![q(1, 2), q(1, 2)], vec![vec![1, 0], vec![0, 1]]).unwrap()
    }

    #[test]
    fn validation() {
        assert!(FiniteFlow::homogeneous(2, vec![q(1, 2), q(1, 3)], vec![vec![0, 1], vec![0, 1]]).is_err());
        assert!(FiniteFlow::homogeneous(2, vec![Q::one()], vec![vec![0, 2]]).is_err());
        assert!(ExactMeasure::new(vec![q(1, 2), q(1, 3)]).is_err());
        assert!(ExactMeasure::new(vec![q(3, 2), q(-1, 2)]).is_err());
    }

    #[test]
    fn evolve_basics() {
        let f = swap_hold();
        assert_eq!(ff_evolve(&f, &[], 3, 3, 1).unwrap(), 1);
        assert_eq!(ff_evolve(&f, &[0, 0, 0], 0, 3, 0).unwrap(), 1);
        assert!(ff_evolve(&f, &[0], 0, 2, 0).is_err());
        let id = FiniteFlow::identity(3, 2);
        assert_eq!(ff_evolve(&id, &[1, 0, 1], -2, 1, 2).unwrap(), 2);
        let sync = FiniteFlow::homogeneous(2, vec![q(1, 2), q(1, 2)], vec![vec![0, 0], vec![1, 1]]).unwrap();
        for x in 0..2 {
            assert_eq!(ff_evolve(&sync, &[0, 1], 0, 2, x).unwrap(), 1);
        }
    }

    #[test]
    fn swap_hold_kernel() {
        let f = swap_hold();
        let push = ff_pushforward(&f, &ExactMeasure::dirac(2, 0), 0, 1).unwrap();
        let half = q(1, 2);
        assert_eq!(push.kernel.rows(), &[vec![half.clone(), half.clone()], vec![half.clone(), half.clone()]]);
        assert_eq!(push.averaged, ExactMeasure::uniform(2));
        assert_eq!(push.per_word.len(), 2);
    }

    #[test]
    fn chapman_is_exact() {
        let f = FiniteFlow::new(
            3,
            vec![q(1, 3), q(2, 3)],
            vec![vec![vec![1, 2, 0], vec![0, 0, 1]], vec![vec![2, 2, 2], vec![0, 1, 1]]],
        )
        .unwrap();
        let direct = f.kernel(-1, 4).unwrap();
        let split = f.kernel(-1, 2).unwrap().then(&f.kernel(2, 4).unwrap());
        assert_eq!(direct, split);
        assert!(direct.is_row_stochastic());
    }

    #[test]
    fn depth_limit_is_enforced() {
        let f = swap_hold().with_depth_limit(3);
        assert!(matches!(
            ff_pushforward(&f, &ExactMeasure::uniform(2), 0, 4),
            Err(Error::DepthLimit { depth: 4, limit: 3 })
        ));
    }

    #[test]
    fn doubly_stochastic_gives_uniform() {
        let f = FiniteFlow::homogeneous(3, vec![q(1, 2), q(1, 2)], vec![vec![1, 2, 0], vec![0, 2, 1]]).unwrap();
        let fam = ff_esm_solve(&f).unwrap().unique().unwrap();
        assert_eq!(fam.at(0), &ExactMeasure::uniform(3));
    }

    #[test]
    fn alternating_period_two() {
        // phase 0: collapse to state 0 or stay; phase 1: move 0→1 w.p. 1/3
        let f = FiniteFlow::new(
            2,
            vec![q(1, 3), q(2, 3)],
            vec![vec![vec![0, 0], vec![0, 1]], vec![vec![1, 1], vec![0, 1]]],
        )
        .unwrap();
        let fam = ff_esm_solve(&f).unwrap().unique().unwrap();
        assert!(fam.verify(&f));
        // two-step product P = K0·K1 = [[2/3,1/3],[2/9,7/9]], stationary (2/5, 3/5)
        assert_eq!(fam.at(0).masses(), &[q(2, 5), q(3, 5)]);
        assert_eq!(fam.at(1).masses(), &[q(3, 5), q(2, 5)]);
        assert_eq!(fam.at(-1), fam.at(1));
    }

    #[test]
    fn identity_flow_has_full_simplex() {
        let id = FiniteFlow::identity(2, 2);
        match ff_esm_solve(&id).unwrap() {
            EsmSolution::Multiple(r) => {
                assert_eq!(r.dimension, 2);
                assert_eq!(r.closed_classes, vec![vec![0], vec![1]]);
                assert_eq!(r.extreme_families[1].at(0), &ExactMeasure::dirac(2, 1));
            }
            other => panic!("expected multiplicity, got {other:?}"),
        }
    }

    #[test]
    fn null_space_of_rank_one() {
        let m = vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]];
        let ns = null_space(&m);
        assert_eq!(ns, vec![vec![q(-2, 1), q(1, 1)]]);
    }

    #[test]
    fn synchronizing_pullback_is_exact() {
        let f = FiniteFlow::homogeneous(2, vec![q(1, 2), q(1, 2)], vec![vec![0, 0], vec![1, 0]]).unwrap();
        let fam = ff_esm_solve(&f).unwrap().unique().unwrap();
        let pb = ff_pullback_esm(&f, &fam, 0, 6).unwrap();
        assert_eq!(&pb.average, fam.at(0));
        // every word containing symbol 0 synchronizes; only 1^6 does not
        assert_eq!(pb.synchronized_mass, Q::one() - q(1, 64));
    }

    #[test]
    fn selected_trajectory_is_consistent() {
        let f = FiniteFlow::homogeneous(3, vec![q(1, 2), q(1, 2)], vec![vec![1, 1, 2], vec![0, 2, 2]]).unwrap();
        let path = |t: i64| (t.rem_euclid(3) == 1) as usize;
        let times = [-4, -1, 0, 3];
        let xs = ff_select_trajectory(&f, &path, &times, 6).unwrap();
        for k in 0..times.len() - 1 {
            let word: Vec<usize> = (times[k]..times[k + 1]).map(path).collect();
            assert_eq!(ff_evolve(&f, &word, times[k], times[k + 1], xs[k]).unwrap(), xs[k + 1]);
        }
        let att = ff_attractor(&f, &path, times[0], 6);
        assert!(att.contains(&xs[0]));
    }
}
