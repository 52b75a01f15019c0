//! A [`FiniteFlow`] driven by the Wiener store, so that the generic
//! Monte Carlo routines can be compared with exact answers.

use num_rational::BigRational;

use super::{ff_select_trajectory, to_f64, FiniteFlow, Q};
use crate::error::{Error, Result};
use crate::flow::{ChapmanResidual, FlowModel, StateVector};
use crate::time::DyadicTime;
use crate::wiener::NoiseRealization;

/// States are encoded as the single coordinate `x[0] = index`.
#[derive(Clone, Debug)]
pub struct FiniteFlowLift {
    flow: FiniteFlow,
    /// Upper cumulative probabilities; symbol `a` is drawn when `u < cumulative[a]`.
    cumulative: Vec<Q>,
}

impl FiniteFlowLift {
    pub fn new(flow: FiniteFlow) -> Self {
        let mut acc = Q::from_integer(0.into());
        let cumulative = flow
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc.clone()
            })
            .collect();
        FiniteFlowLift { flow, cumulative }
    }

    pub fn flow(&self) -> &FiniteFlow {
        &self.flow
    }

    /// Symbol at integer time `time`, from the keyed unit uniform of that interval.
    /// The uniform is a dyadic rational and is compared exactly.
    pub fn symbol(&self, omega: &NoiseRealization, time: i64) -> usize {
        let u = BigRational::from_float(omega.unit_uniform(0, time)).expect("uniform is finite");
        self.cumulative.iter().position(|c| &u < c).unwrap_or(self.cumulative.len() - 1)
    }

    pub fn state_index(&self, x: &[f64]) -> Result<usize> {
        let v = x[0];
        if v.fract() != 0.0 || v < 0.0 || v as usize >= self.flow.n_states() {
            return Err(Error::Index { index: v.max(0.0) as usize, limit: self.flow.n_states() });
        }
        Ok(v as usize)
    }

    fn int_time(t: DyadicTime) -> Result<i64> {
        t.grid_index_checked(0)
    }

    /// Exact `P_su f(x)` against `P_st P_tu f(x)`.
    pub fn exact_chapman(
        &self,
        s: DyadicTime,
        t: DyadicTime,
        u: DyadicTime,
        f: &dyn Fn(&[f64]) -> f64,
        x: &[f64],
    ) -> Result<ChapmanResidual> {
        let (s, t, u) = (Self::int_time(s)?, Self::int_time(t)?, Self::int_time(u)?);
        let x = self.state_index(x)?;
        let fv = (0..self.flow.n_states())
            .map(|y| {
                let v = f(&[y as f64]);
                BigRational::from_float(v).ok_or_else(|| Error::Evaluation(format!("test function returned {v}")))
            })
            .collect::<Result<Vec<Q>>>()?;
        let direct = self.flow.kernel(s, u)?.right_apply(&fv);
        let inner = self.flow.kernel(t, u)?.right_apply(&fv);
        let composed = self.flow.kernel(s, t)?.right_apply(&inner);
        let diff = &direct[x] - &composed[x];
        Ok(ChapmanResidual {
            direct: to_f64(&direct[x]),
            composed: to_f64(&composed[x]),
            difference: to_f64(&diff).abs(),
            combined_stderr: 0.0,
        })
    }

    /// Nested-set selection along the symbol path of `omega`.
    pub fn select_trajectory(&self, omega: &NoiseRealization, times: &[DyadicTime], depth: usize) -> Result<Vec<StateVector>> {
        let ints = times.iter().map(|t| Self::int_time(*t)).collect::<Result<Vec<i64>>>()?;
        let path = |time: i64| self.symbol(omega, time);
        let states = ff_select_trajectory(&self.flow, &path, &ints, depth)?;
        Ok(states.into_iter().map(|x| vec![x as f64]).collect())
    }
}

impl FlowModel for FiniteFlowLift {
    fn name(&self) -> &str {
        "finite-lift"
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn grid_level(&self) -> u32 {
        0
    }
    fn noise_components(&self) -> usize {
        1
    }
    fn flow(&self, omega: &NoiseRealization, s: DyadicTime, t: DyadicTime, x: &[f64]) -> Result<StateVector> {
        let (s, t) = (Self::int_time(s)?, Self::int_time(t)?);
        let mut y = self.state_index(x)?;
        for time in s..t {
            y = self.flow.step_map(time, self.symbol(omega, time))[y];
        }
        Ok(vec![y as f64])
    }
    fn as_finite(&self) -> Option<&FiniteFlowLift> {
        Some(self)
    }
}
