//! Experiment configuration files and the bundled presets.

use std::path::{Path, PathBuf};

use cqdon_core::conformal::{PeakMeasure, DEFAULT_EPSILON};
use cqdon_core::datagen::TaskSpec;
use cqdon_core::ensemble::ExecMode;
use cqdon_core::noise::{Execution, NoiseProfile, SamplingMethod, Shots};
use cqdon_core::operator::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experiment id written into every metrics row.
    pub name: String,
    /// Root of every derived stream: data, member initialization, shot sampling.
    pub seed: u64,
    /// Used when neither `--output-dir` nor `CQDON_OUTPUT_DIR` is given.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub task: TaskSpec,
    pub model: ModelConfig,
    pub ensemble: EnsembleConfig,
    pub training: TrainConfig,
    #[serde(default)]
    pub noise: NoiseGrid,
    #[serde(default)]
    pub conformal: ConformalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub layers: usize,
    pub width: usize,
    #[serde(default)]
    pub residual: bool,
    /// Number of dominant target frequencies fed to the trunk; absent means no
    /// Fourier features.
    #[serde(default)]
    pub fourier_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub members: usize,
    /// Execution mode of noisy evaluation.
    #[serde(default)]
    pub mode: ExecMode,
    /// Re-seeded training attempts per member before giving up.
    #[serde(default = "default_attempts")]
    pub attempts: usize,
}

fn default_attempts() -> usize {
    3
}

/// Where the conformal threshold of a noisy cell comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationSource {
    /// Calibration split run under the same noise and shots as the test split.
    #[default]
    Matched,
    /// Noiseless calibration reused for every cell.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseGrid {
    pub lambdas: Vec<f64>,
    /// Shot budgets per circuit; 0 stands for the infinite-shot limit.
    pub shots: Vec<u64>,
    #[serde(default)]
    pub readout: f64,
    #[serde(default = "default_two_qubit_scale")]
    pub two_qubit_scale: f64,
    #[serde(default)]
    pub method: SamplingMethod,
    #[serde(default = "default_true")]
    pub postselect: bool,
    #[serde(default)]
    pub calibration: CalibrationSource,
    /// Independent shot-noise replicates per cell.
    #[serde(default = "default_one")]
    pub replicates: usize,
    /// Evaluate only the first `n` calibration and test scenarios.
    #[serde(default)]
    pub max_scenarios: Option<usize>,
}

fn default_two_qubit_scale() -> f64 {
    NoiseProfile::TWO_QUBIT_SCALE
}

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

impl Default for NoiseGrid {
    fn default() -> Self {
        NoiseGrid {
            lambdas: vec![2e-4, 4e-4, 6e-4, 8e-4],
            shots: vec![1_000, 10_000, 100_000],
            readout: 0.0,
            two_qubit_scale: NoiseProfile::TWO_QUBIT_SCALE,
            method: SamplingMethod::Multinomial,
            postselect: true,
            calibration: CalibrationSource::Matched,
            replicates: 1,
            max_scenarios: None,
        }
    }
}

impl NoiseGrid {
    pub fn execution(&self, lambda: f64, shots: u64) -> Result<Execution> {
        let noise = NoiseProfile::scaled(lambda, self.two_qubit_scale, self.readout)?;
        let shots = if shots == 0 { Shots::Exact } else { Shots::Finite(shots) };
        Ok(Execution { noise, shots, method: self.method, postselect: self.postselect })
    }

    /// Cells in row-major `(lambda, shots)` order.
    pub fn cells(&self) -> Vec<(f64, u64)> {
        self.lambdas.iter().flat_map(|&l| self.shots.iter().map(move |&s| (l, s))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConformalConfig {
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub peak: PeakMeasure,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl Default for ConformalConfig {
    fn default() -> Self {
        ConformalConfig { alpha: 0.1, epsilon: DEFAULT_EPSILON, peak: PeakMeasure::FullWidth }
    }
}

pub const PRESETS: [(&str, &str); 5] = [
    ("antiderivative", include_str!("../presets/antiderivative.toml")),
    ("antiderivative-w5", include_str!("../presets/antiderivative-w5.toml")),
    ("advection", include_str!("../presets/advection.toml")),
    ("forecasting", include_str!("../presets/forecasting.toml")),
    ("online", include_str!("../presets/online.toml")),
];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| HarnessError::Config(format!("unknown preset `{name}`; known: {}", preset_names())))?;
        Self::from_toml(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.name.is_empty() || self.name.contains(['\n', '\r']) {
            return bad("name must be a non-empty single line".into());
        }
        if self.model.layers == 0 || self.model.width == 0 {
            return bad("model.layers and model.width must be positive".into());
        }
        if self.model.fourier_k == Some(0) {
            return bad("model.fourier_k must be positive when set".into());
        }
        if self.ensemble.members == 0 {
            return bad("ensemble.members must be at least 1".into());
        }
        self.training.validate()?;
        let c = &self.conformal;
        if !(c.alpha > 0.0 && c.alpha < 1.0) {
            return bad(format!("conformal.alpha = {} outside (0, 1)", c.alpha));
        }
        if !(c.epsilon >= 0.0 && c.epsilon.is_finite()) {
            return bad(format!("conformal.epsilon = {} must be finite and non-negative", c.epsilon));
        }
        let n = &self.noise;
        if n.lambdas.is_empty() || n.shots.is_empty() {
            return bad("noise.lambdas and noise.shots must be non-empty".into());
        }
        if n.replicates == 0 || n.max_scenarios == Some(0) {
            return bad("noise.replicates and noise.max_scenarios must be positive".into());
        }
        for &l in &n.lambdas {
            n.execution(l, 1)?;
        }
        Ok(())
    }
}

pub fn preset_names() -> String {
    PRESETS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
}
