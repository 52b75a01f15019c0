//! Three exact counterexamples: an attractor that misses an evolution system,
//! a drift with no evolution system, and an identity flow whose flow-level
//! systems are not determined by the semigroup one.

use num_traits::{One, Zero};

use super::{ff_esm_solve, q, EsmSolution, ExactMeasure, FiniteFlow, Q};
use crate::error::{Error, Result};

pub const REMARK_ATTRACTOR: &str = "remark-attractor";
pub const REMARK_SHIFT: &str = "remark-shift";
pub const REMARK_IDENTITY: &str = "remark-identity";

pub const SCENARIOS: [&str; 3] = [REMARK_ATTRACTOR, REMARK_SHIFT, REMARK_IDENTITY];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.to_string(), passed, detail }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub name: &'static str,
    pub claim: &'static str,
    /// Human-readable description of the constructed object.
    pub object: String,
    pub checks: Vec<Check>,
}

impl Scenario {
    pub fn verdict(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn pow2(k: i64) -> Q {
    let mag = Q::from_integer((1i64 << k.unsigned_abs()).into());
    if k >= 0 {
        mag
    } else {
        mag.recip()
    }
}

/// `x ↦ x/2` per unit step on the rationals.
fn attractor_scenario() -> Scenario {
    const WINDOW: i64 = 8;
    const DEPTH: i64 = 24;
    let lambda = q(1, 2);
    let c = q(3, 1);
    let radius = q(4, 1);
    let step = |x: &Q, steps: i64| -> Q { (0..steps).fold(x.clone(), |acc, _| acc * &lambda) };

    // pulled-back images of [-R, R] are [-R 2^-d, R 2^-d], nested and shrinking to {0}
    let mut shrinking = step(&Q::zero(), 5).is_zero();
    for d in 0..DEPTH {
        let hi = step(&radius, d);
        let lo = step(&-radius.clone(), d);
        shrinking &= hi == &radius * pow2(-d) && lo == -hi.clone();
        shrinking &= step(&hi, 1) < hi;
    }

    let family = |t: i64| &c * pow2(-t);
    let mut esm = true;
    for s in -WINDOW..=WINDOW {
        for t in s..=WINDOW {
            esm &= step(&family(s), t - s) == family(t);
        }
    }
    let off = (-WINDOW..=WINDOW).all(|t| !family(t).is_zero());

    Scenario {
        name: REMARK_ATTRACTOR,
        claim: "the pullback attractor {0} does not support the evolution system δ_{c·2^{-t}}",
        object: format!("x ↦ x/2 per step; family δ_(c·2^-t) with c = {c}"),
        checks: vec![
            Check::new("attractor_is_zero", shrinking, format!("images of [-{radius},{radius}] halve for {DEPTH} steps")),
            Check::new("esm_verified", esm, format!("S(t,s)δ_(c2^-s) = δ_(c2^-t) for all -{WINDOW} ≤ s ≤ t ≤ {WINDOW}")),
            Check::new("esm_off_attractor", off, "c·2^-t ≠ 0 for every t in the window".into()),
        ],
    }
}

/// `x ↦ x + 1` on `{0, …, W−1}` plus an absorbing escape state `W`.
fn shift_scenario() -> Result<Scenario> {
    const WINDOW: usize = 10;
    let escape = WINDOW;
    let truncated: Vec<usize> = (0..=WINDOW).map(|x| (x + 1).min(escape)).collect();
    let flow = FiniteFlow::homogeneous(WINDOW + 1, vec![Q::one()], vec![truncated])?;
    let no_esm_in_window = match ff_esm_solve(&flow)? {
        EsmSolution::Unique(fam) => fam.at(0).support() == vec![escape],
        EsmSolution::Multiple(_) => false,
    };

    // without truncation the mean moves up by exactly one per step
    let big = 2 * WINDOW + 1;
    let free: Vec<usize> = (0..big).map(|x| (x + 1).min(big - 1)).collect();
    let line = FiniteFlow::homogeneous(big, vec![Q::one()], vec![free])?;
    let start = ExactMeasure::new((0..big).map(|x| if x < 2 { q(1, 2) } else { Q::zero() }).collect())?;
    let mean = |m: &ExactMeasure| -> Q { m.masses().iter().enumerate().map(|(x, p)| p * q(x as i64, 1)).sum() };
    let mut means = vec![mean(&start)];
    let mut current = start;
    for t in 0..WINDOW as i64 {
        current = current.apply(&line.step_kernel(t));
        means.push(mean(&current));
    }
    let increasing = means.windows(2).all(|w| &w[1] - &w[0] == Q::one());

    Ok(Scenario {
        name: REMARK_SHIFT,
        claim: "the drift x ↦ x + t − s on [0, ∞) admits no evolution system of measures",
        object: format!("x ↦ x+1 on {{0..{}}} with absorbing escape state {escape}", WINDOW - 1),
        checks: vec![
            Check::new("means_strictly_increase", increasing, format!("pushforward means {:?}", means.iter().map(|m| m.to_string()).collect::<Vec<_>>())),
            Check::new("no_esm_in_window", no_esm_in_window, "the only periodic solution sits on the escape state".into()),
        ],
    })
}

/// Identity flow on two states with a fair coin; `A = {symbol at time 0 is 0}`.
fn identity_scenario() -> Result<Scenario> {
    let flow = FiniteFlow::identity(2, 2);
    let alphas = [Q::zero(), q(1, 4), q(1, 2), Q::one()];
    let horizon = 3usize;
    let words = flow.words(horizon)?;
    let mu = |alpha: &Q, word: &[usize]| -> ExactMeasure {
        let a = alpha.clone();
        let b = Q::one() - alpha;
        if word[0] == 0 {
            ExactMeasure::new(vec![a, b]).expect("valid")
        } else {
            ExactMeasure::new(vec![b, a]).expect("valid")
        }
    };
    let mut flow_esm = true;
    let mut shared = true;
    for alpha in &alphas {
        let mut avg = vec![Q::zero(), Q::zero()];
        for w in &words {
            let m = mu(alpha, w);
            for s in 0..horizon as i64 {
                for t in s..=horizon as i64 {
                    let seg = &w[s as usize..t as usize];
                    flow_esm &= m.push_map(&flow.composed_map(seg, s)) == m;
                }
            }
            let p = flow.word_prob(w);
            for (x, v) in avg.iter_mut().zip(m.masses()) {
                *x += &p * v;
            }
        }
        shared &= ExactMeasure::new(avg)? == ExactMeasure::uniform(2);
    }
    let distinct = words.iter().any(|w| mu(&alphas[0], w) != mu(&alphas[1], w));
    let multiplicity = match ff_esm_solve(&flow)? {
        EsmSolution::Multiple(r) => r.dimension == 2,
        EsmSolution::Unique(_) => false,
    };
    Ok(Scenario {
        name: REMARK_IDENTITY,
        claim: "flow-level evolution systems are not determined by the semigroup one",
        object: "identity flow on {x1, x2}, μ_α = αδ_x1 + (1-α)δ_x2 on A, swapped off A".into(),
        checks: vec![
            Check::new("each_family_is_flow_esm", flow_esm, format!("α ∈ {{0, 1/4, 1/2, 1}}, words of length {horizon}")),
            Check::new("shared_semigroup_esm", shared, "E μ_α = (δ_x1 + δ_x2)/2 for every α".into()),
            Check::new("families_distinct", distinct, "μ_0 ≠ μ_1/4 on a positive-probability set".into()),
            Check::new("multiplicity_reported", multiplicity, "semigroup solve reports a 2-point simplex".into()),
        ],
    })
}

/// The full catalog.
pub fn counterexamples() -> Result<Vec<Scenario>> {
    SCENARIOS.iter().map(|n| scenario(n)).collect()
}

pub fn scenario(name: &str) -> Result<Scenario> {
    match name {
        REMARK_ATTRACTOR => Ok(attractor_scenario()),
        REMARK_SHIFT => shift_scenario(),
        REMARK_IDENTITY => identity_scenario(),
        other => Err(Error::Config(format!("unknown scenario {other:?}"))),
    }
}
