//! Experiment configuration files.

use std::path::{Path, PathBuf};

use fracorder::forward::FracParams;
use fracorder::spectral::{InitialData, SpectralModel};
use serde::Deserialize;

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub initial: InitialConfig,
    pub frac: FracConfig,
    pub times: Vec<f64>,
    #[serde(default)]
    pub output: OutputConfig,
    /// Truncation tolerance of the forward series.
    #[serde(default)]
    pub tol: Option<f64>,
    /// Spatial points for field output.
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Interval { length: f64, modes: usize },
    Rectangle { lx: f64, ly: f64, modes: usize },
    Custom { eigenvalues: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub coefficients: Option<Vec<f64>>,
    #[serde(default)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Mode1,
    #[serde(rename = "decay_1_over_k")]
    Decay1OverK,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracConfig {
    pub rho: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Everything the commands need, validated.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: SpectralModel,
    pub data: InitialData,
    pub params: FracParams,
    pub times: Vec<f64>,
    pub output: OutputConfig,
    pub tol: f64,
    pub points: Option<Vec<Vec<f64>>>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config: {e}"))
    }

    pub fn build(self) -> Result<Experiment, String> {
        let model = match self.model {
            ModelConfig::Interval { length, modes } => SpectralModel::interval(length, modes),
            ModelConfig::Rectangle { lx, ly, modes } => SpectralModel::rectangle(lx, ly, modes),
            ModelConfig::Custom { eigenvalues } => SpectralModel::custom(eigenvalues),
        }
        .map_err(|e| format!("model: {e}"))?;
        let n = model.len();
        let data = match (self.initial.coefficients, self.initial.preset) {
            (Some(c), None) => InitialData::new(c).map_err(|e| format!("initial: {e}"))?,
            (None, Some(Preset::Mode1)) => InitialData::unit(1, n).map_err(|e| format!("initial: {e}"))?,
            (None, Some(Preset::Decay1OverK)) => InitialData::decay_1_over_k(n),
            _ => return Err("initial: exactly one of coefficients or preset is required".into()),
        };
        let params = FracParams::new(self.frac.rho, self.frac.sigma).map_err(|e| format!("frac: {e}"))?;
        if self.times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err("times: every time must be positive".into());
        }
        let tol = self.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0) {
            return Err("tol: must be positive".into());
        }
        if let Some(points) = &self.points {
            let dim = match model.domain {
                fracorder::spectral::Domain::Rectangle { .. } => 2,
                _ => 1,
            };
            if points.iter().any(|p| p.len() != dim) {
                return Err(format!("points: each point needs {dim} coordinate(s)"));
            }
        }
        Ok(Experiment {
            model,
            data,
            params,
            times: self.times,
            output: self.output,
            tol,
            points: self.points,
        })
    }
}
