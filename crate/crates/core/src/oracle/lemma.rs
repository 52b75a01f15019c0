//! Conditional-expectation, martingale and averaging identities, checked by
//! enumerating every symbol word.

use std::collections::BTreeMap;
use std::ops::Range;

use num_traits::{Signed, Zero};

use super::{EsmFamily, ExactMeasure, FiniteFlow, Q};
use crate::error::{Error, Result};

/// Words of a fixed length over an i.i.d. alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct WordSpace {
    pub probs: Vec<Q>,
    pub length: usize,
}

impl WordSpace {
    pub fn for_flow(flow: &FiniteFlow, length: usize) -> Result<Self> {
        if length > flow.depth_limit() {
            return Err(Error::DepthLimit { depth: length, limit: flow.depth_limit() });
        }
        Ok(WordSpace { probs: flow.probs().to_vec(), length })
    }

    fn words(&self) -> Vec<(Vec<usize>, Q)> {
        let a = self.probs.len();
        let count = a.pow(self.length as u32);
        (0..count)
            .map(|mut w| {
                let word: Vec<usize> = (0..self.length)
                    .map(|_| {
                        let s = w % a;
                        w /= a;
                        s
                    })
                    .collect();
                let p = word.iter().map(|s| self.probs[*s].clone()).product();
                (word, p)
            })
            .collect()
    }
}

/// The partition of words generated by the symbols at positions `window`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderAlgebra {
    pub window: Range<usize>,
}

impl CylinderAlgebra {
    pub fn trivial() -> Self {
        CylinderAlgebra { window: 0..0 }
    }

    pub fn block_of(&self, word: &[usize]) -> Vec<usize> {
        word[self.window.clone()].to_vec()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaReport {
    /// Averaged measure `ρ = E μ_ω`.
    pub rho: ExactMeasure,
    /// `|E(∫ f μ_ω | block) − ∫ f(ω,·) dρ|` per block.
    pub per_block: BTreeMap<Vec<usize>, Q>,
    pub max_residual: Q,
}

/// Check `E(∫ f(ω,x) μ_ω(dx) | 𝒢) = ∫ f(ω,x) ρ(dx)` block by block.
///
/// `f` must depend on `ω` only through the symbols generating `𝒢`, and the
/// law of `μ_ω` must be the same on every block (independence from `𝒢`).
pub fn lemma_cond_expect_check(
    space: &WordSpace,
    algebra: &CylinderAlgebra,
    mu: &dyn Fn(&[usize]) -> ExactMeasure,
    f: &dyn Fn(&[usize], usize) -> Q,
) -> Result<LemmaReport> {
    if algebra.window.end > space.length {
        return Err(Error::Precondition("partition window exceeds word length".into()));
    }
    let words = space.words();
    let measures: Vec<ExactMeasure> = words.iter().map(|(w, _)| mu(w)).collect();
    let n = measures[0].len();
    if let Some(m) = measures.iter().find(|m| m.len() != n) {
        return Err(Error::Dimension { expected: n, found: m.len() });
    }

    let mut blocks: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, (w, _)) in words.iter().enumerate() {
        blocks.entry(algebra.block_of(w)).or_default().push(i);
    }

    // measurability of f with respect to the partition
    for members in blocks.values() {
        let first = &words[members[0]].0;
        for &i in &members[1..] {
            if (0..n).any(|x| f(&words[i].0, x) != f(first, x)) {
                return Err(Error::Precondition(
                    "f is not measurable with respect to the partition".into(),
                ));
            }
        }
    }

    // independence: the law of μ_ω is the same given every block
    let law = |idx: &mut dyn Iterator<Item = usize>| -> BTreeMap<ExactMeasure, Q> {
        let mut out: BTreeMap<ExactMeasure, Q> = BTreeMap::new();
        let mut total = Q::zero();
        let picked: Vec<usize> = idx.collect();
        for &i in &picked {
            total += &words[i].1;
        }
        for &i in &picked {
            *out.entry(measures[i].clone()).or_insert_with(Q::zero) += &words[i].1 / &total;
        }
        out
    };
    let overall = law(&mut (0..words.len()));
    for (label, members) in &blocks {
        let mass: Q = members.iter().map(|&i| words[i].1.clone()).sum();
        if mass.is_zero() {
            continue;
        }
        if law(&mut members.iter().copied()) != overall {
            return Err(Error::Independence { block: label.clone() });
        }
    }

    let mut rho = vec![Q::zero(); n];
    for ((_, p), m) in words.iter().zip(&measures) {
        for (r, v) in rho.iter_mut().zip(m.masses()) {
            *r += p * v;
        }
    }
    let rho = ExactMeasure::new(rho)?;

    let mut per_block = BTreeMap::new();
    let mut max_residual = Q::zero();
    for (label, members) in &blocks {
        let mass: Q = members.iter().map(|&i| words[i].1.clone()).sum();
        if mass.is_zero() {
            continue;
        }
        let mut lhs = Q::zero();
        for &i in members {
            let w = &words[i].0;
            let inner: Q = (0..n).map(|x| f(w, x) * &measures[i].masses()[x]).sum();
            lhs += &words[i].1 * inner;
        }
        lhs /= &mass;
        let w0 = &words[members[0]].0;
        let rhs: Q = (0..n).map(|x| f(w0, x) * &rho.masses()[x]).sum();
        let r = (lhs - rhs).abs();
        if r > max_residual {
            max_residual = r.clone();
        }
        per_block.insert(label.clone(), r);
    }
    Ok(LemmaReport { rho, per_block, max_residual })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleReport {
    pub depth: usize,
    pub cylinders_checked: usize,
    pub max_residual: Q,
    /// `M_0 = ∫ f dρ_t`, the common mean.
    pub mean: Q,
}

impl MartingaleReport {
    pub fn passed(&self) -> bool {
        self.max_residual.is_zero()
    }
}

/// `M_s(ω) = ∫ f d(S(t,t−s;ω)ρ_{t−s})`; verifies `E[M_{s+1} | word on [t−s,t)] = M_s`
/// on every cylinder for `s < depth`.
pub fn ff_martingale_check(
    flow: &FiniteFlow,
    family: &EsmFamily,
    t: i64,
    f: &[Q],
    depth: usize,
) -> Result<MartingaleReport> {
    if depth > flow.depth_limit() {
        return Err(Error::DepthLimit { depth, limit: flow.depth_limit() });
    }
    if f.len() != flow.n_states() {
        return Err(Error::Dimension { expected: flow.n_states(), found: f.len() });
    }
    let m_value = |s: usize, map: &[usize]| -> Q {
        let rho = family.at(t - s as i64);
        rho.masses().iter().zip(map).map(|(p, &y)| p * &f[y]).sum()
    };
    let identity: Vec<usize> = (0..flow.n_states()).collect();
    let mean = m_value(0, &identity);
    let mut level: Vec<(Vec<usize>, Q)> = vec![(identity, mean.clone())];
    let mut cylinders_checked = 0;
    let mut max_residual = Q::zero();
    for s in 0..depth {
        let time = t - s as i64 - 1;
        let mut next = Vec::with_capacity(level.len() * flow.alphabet());
        for (map, m_s) in &level {
            let mut cond = Q::zero();
            for (a, p) in flow.probs().iter().enumerate() {
                let step = flow.step_map(time, a);
                let composed: Vec<usize> = step.iter().map(|&y| map[y]).collect();
                let m_next = m_value(s + 1, &composed);
                cond += p * &m_next;
                next.push((composed, m_next));
            }
            let r = (cond - m_s).abs();
            if r > max_residual {
                max_residual = r;
            }
            cylinders_checked += 1;
        }
        level = next;
    }
    Ok(MartingaleReport { depth, cylinders_checked, max_residual, mean })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AveragingReport {
    pub pairs_checked: usize,
    /// `S(t,s;ω)μ_{sω} = μ_{tω}` for every word and pair.
    pub flow_esm_holds: bool,
    /// `E μ_{tω} = ρ_t` for every `t`.
    pub averages_match: bool,
    /// `ρ_s K(s,t) = ρ_t` for the averages.
    pub semigroup_esm_holds: bool,
}

/// The adapted flow-ESM `μ_{tω} = S(t,s₀;ω)ρ_{s₀}` on `[s₀, s₀+horizon]`
/// averages to the semigroup ESM.
pub fn ff_averaging_check(flow: &FiniteFlow, family: &EsmFamily, s0: i64, horizon: usize) -> Result<AveragingReport> {
    let space = WordSpace::for_flow(flow, horizon)?;
    let words = space.words();
    let times: Vec<i64> = (s0..=s0 + horizon as i64).collect();
    let rho0 = family.at(s0);
    // μ per word per time
    let per_word: Vec<Vec<ExactMeasure>> = words
        .iter()
        .map(|(w, _)| {
            times
                .iter()
                .map(|&t| rho0.push_map(&flow.composed_map(&w[..(t - s0) as usize], s0)))
                .collect()
        })
        .collect();
    let mut flow_esm_holds = true;
    let mut pairs_checked = 0;
    for (k, (w, _)) in words.iter().enumerate() {
        for (i, &s) in times.iter().enumerate() {
            for (j, &t) in times.iter().enumerate().skip(i) {
                let seg = &w[(s - s0) as usize..(t - s0) as usize];
                let pushed = per_word[k][i].push_map(&flow.composed_map(seg, s));
                flow_esm_holds &= pushed == per_word[k][j];
                pairs_checked += 1;
            }
        }
    }
    let mut averages = Vec::new();
    for i in 0..times.len() {
        let mut avg = vec![Q::zero(); flow.n_states()];
        for ((_, p), ms) in words.iter().zip(&per_word) {
            for (a, b) in avg.iter_mut().zip(ms[i].masses()) {
                *a += p * b;
            }
        }
        averages.push(ExactMeasure::new(avg)?);
    }
    let averages_match = times.iter().zip(&averages).all(|(&t, a)| a == family.at(t));
    let mut semigroup_esm_holds = true;
    for (i, &s) in times.iter().enumerate() {
        for (j, &t) in times.iter().enumerate().skip(i) {
            semigroup_esm_holds &= averages[i].apply(&flow.kernel(s, t)?) == averages[j];
        }
    }
    Ok(AveragingReport { pairs_checked, flow_esm_holds, averages_match, semigroup_esm_holds })
}
