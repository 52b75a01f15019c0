//! Experiment configuration: flat TOML with dotted sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stochflow::flow::FlowModel;
use stochflow::models::nse::{NseConfig, NseModel};
use stochflow::models::{EmModel, ExponentialFlow, IdentityFlow, LinearOUModel, PeriodicForcing, ShiftFlow};
use stochflow::time::DyadicTime;

use crate::error::{CliError, CliResult};

pub const KINDS: [(&str, &str); 7] = [
    ("noise", "Wiener store: refinement consistency, W(1) variance, increment correlation"),
    ("pullback", "pullback limits of a fixed initial law, one per realization"),
    ("attractor", "pullback attractor clouds and their invariance"),
    ("esm-verify", "stationary Gaussian family of the linear model against the transition operator"),
    ("oracle", "exact finite-state checks of the measure correspondences"),
    ("nse", "stochastic Navier-Stokes: absorbing radius and energy diagnostics"),
    ("counterexamples", "the three exact counterexample scenarios"),
];

pub const MODELS: [&str; 6] = ["linear", "em", "nse", "identity", "shift", "exponential"];

/// Time on the dyadic grid, written as a decimal with a finite binary expansion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct GridTime(DyadicTime);

impl GridTime {
    pub fn get(self) -> DyadicTime {
        self.0
    }
}

impl TryFrom<f64> for GridTime {
    type Error = String;
    fn try_from(v: f64) -> Result<Self, String> {
        let scaled = v * (1u64 << 30) as f64;
        if !scaled.is_finite() || scaled.fract() != 0.0 || scaled.abs() >= 2f64.powi(62) {
            return Err(format!("{v} is not a multiple of 2^-30"));
        }
        Ok(GridTime(DyadicTime::new(scaled as i64, 30)))
    }
}

impl From<GridTime> for f64 {
    fn from(t: GridTime) -> f64 {
        t.0.to_f64()
    }
}

impl From<i64> for GridTime {
    fn from(n: i64) -> Self {
        GridTime(DyadicTime::from_int(n))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    pub name: String,
    pub level: u32,
    pub rate: f64,
    pub sigma: f64,
    /// Amplitude of the `cos t` forcing.
    pub forcing: f64,
    pub dim: usize,
    pub viscosity: f64,
    pub resolution: usize,
    pub ou_rate: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            name: "linear".into(),
            level: 8,
            rate: 1.0,
            sigma: 0.5,
            forcing: 1.0,
            dim: 1,
            viscosity: 0.5,
            resolution: 16,
            ou_rate: 1.0,
        }
    }
}

impl ModelParams {
    fn run<T>(r: stochflow::Result<T>) -> CliResult<T> {
        r.map_err(|e| CliError::Config { key: "model".into(), message: e.to_string() })
    }

    pub fn linear(&self) -> CliResult<LinearOUModel> {
        Ok(Self::run(LinearOUModel::new(self.rate, self.sigma, self.level))?
            .with_forcing(PeriodicForcing::cosine(self.forcing)))
    }

    pub fn nse(&self) -> CliResult<NseModel> {
        let cfg = NseConfig {
            resolution: self.resolution,
            level: self.level,
            ou_rate: self.ou_rate,
            ..NseConfig::desk(self.viscosity)
        };
        Self::run(NseModel::new(cfg))
    }

    pub fn build(&self) -> CliResult<Box<dyn FlowModel>> {
        Ok(match self.name.as_str() {
            "linear" => Box::new(self.linear()?),
            "em" => Box::new(Self::run(EmModel::linear(
                self.rate,
                self.sigma,
                PeriodicForcing::cosine(self.forcing),
                self.level,
            ))?),
            "nse" => Box::new(self.nse()?),
            "identity" => Box::new(IdentityFlow::new(self.dim)),
            "shift" => Box::new(ShiftFlow::new(self.level)),
            "exponential" => Box::new(ExponentialFlow::new(self.rate, self.dim, self.level)),
            other => {
                return Err(CliError::Config {
                    key: "model.name".into(),
                    message: format!("unknown model {other:?}; expected one of {}", MODELS.join(", ")),
                })
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleParams {
    pub anchor: GridTime,
    /// Base lookback `c`; starts are `anchor − c·2^k`.
    pub step: GridTime,
    pub depth: u32,
    pub epsilon: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        ScheduleParams { anchor: 0.into(), step: 1.into(), depth: 6, epsilon: stochflow::esm::DEFAULT_EPSILON }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureParams {
    pub particles: usize,
    pub std: f64,
    pub center: f64,
}

impl Default for MeasureParams {
    fn default() -> Self {
        MeasureParams { particles: stochflow::esm::DEFAULT_PARTICLES, std: 1.0, center: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseParams {
    pub level: u32,
    pub horizon: i64,
    pub intervals: usize,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams { level: 10, horizon: 4, intervals: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NseParams {
    pub lookbacks: Vec<GridTime>,
    pub amplitudes: Vec<f64>,
    pub window: GridTime,
    pub tolerance: f64,
    /// Length of the energy-diagnostics run ending at the anchor.
    pub horizon: GridTime,
}

impl Default for NseParams {
    fn default() -> Self {
        NseParams {
            lookbacks: [1, 2, 4, 8, 16].into_iter().map(GridTime::from).collect(),
            amplitudes: vec![1.0, 10.0],
            window: 1.into(),
            tolerance: 0.05,
            horizon: 4.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioParams {
    /// Run one scenario instead of the whole catalog.
    pub scenario: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: String,
    pub seed: Option<u64>,
    #[serde(default = "default_ensemble")]
    pub ensemble: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default)]
    pub schedule: ScheduleParams,
    #[serde(default)]
    pub measure: MeasureParams,
    #[serde(default)]
    pub noise: NoiseParams,
    #[serde(default)]
    pub nse: NseParams,
    #[serde(default)]
    pub counterexamples: ScenarioParams,
}

fn default_ensemble() -> u64 {
    100
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config { key: "config".into(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> CliResult<()> {
        if !KINDS.iter().any(|(k, _)| *k == self.kind) {
            let known: Vec<&str> = KINDS.iter().map(|(k, _)| *k).collect();
            return Err(CliError::Config {
                key: "kind".into(),
                message: format!("unknown experiment kind {:?}; expected one of {}", self.kind, known.join(", ")),
            });
        }
        if !MODELS.contains(&self.model.name.as_str()) {
            return Err(CliError::Config {
                key: "model.name".into(),
                message: format!("unknown model {:?}; expected one of {}", self.model.name, MODELS.join(", ")),
            });
        }
        if self.ensemble == 0 {
            return Err(CliError::Config { key: "ensemble".into(), message: "must be positive".into() });
        }
        Ok(())
    }

    /// The seed, which must be given either here or on the command line.
    pub fn require_seed(&self) -> CliResult<u64> {
        self.seed.ok_or_else(|| CliError::Config {
            key: "seed".into(),
            message: "no seed given; set `seed` or pass --seed".into(),
        })
    }
}
