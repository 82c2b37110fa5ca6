//! Run configuration (JSON).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gl::SignConvention;
use crate::model::Potential;
use crate::spectral::BoundaryConditions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Kernels,
    Response,
    Connect,
    Krein,
    Gl,
    Spectral,
}

impl Stage {
    pub const ALL: [Stage; 6] = [Stage::Kernels, Stage::Response, Stage::Connect, Stage::Krein, Stage::Gl, Stage::Spectral];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Kernels => "kernels",
            Stage::Response => "response",
            Stage::Connect => "connect",
            Stage::Krein => "krein",
            Stage::Gl => "gl",
            Stage::Spectral => "spectral",
        }
    }

    /// Stages that must run before this one.
    pub fn dependencies(self) -> &'static [Stage] {
        match self {
            Stage::Kernels => &[],
            Stage::Response => &[Stage::Kernels],
            Stage::Connect => &[Stage::Kernels, Stage::Response],
            Stage::Krein | Stage::Gl | Stage::Spectral => &[Stage::Kernels, Stage::Response, Stage::Connect],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralOptions {
    /// Interval half-length; defaults to `4 T`.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub half_length: Option<f64>,
    #[serde(default)]
    pub bc: BoundaryConditions,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    #[serde(default = "default_mesh")]
    pub mesh: usize,
    /// Seeded control pairs for the connecting-form comparison.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
}

fn default_cutoff() -> usize {
    400
}

fn default_mesh() -> usize {
    2048
}

fn default_pairs() -> usize {
    5
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            half_length: None,
            bc: BoundaryConditions::default(),
            cutoff: default_cutoff(),
            mesh: default_mesh(),
            pairs: default_pairs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Krein mask: `|y| < eps_y max|y|` is excluded.
    #[serde(default = "default_eps_y")]
    pub eps_y: f64,
    /// Error band `[lo, hi]` for `|x|`, as fractions of `T`.
    #[serde(default = "default_band")]
    pub band: [f64; 2],
    /// Spectral tail indicator above which results are flagged.
    #[serde(default = "default_tail")]
    pub tail: f64,
}

fn default_eps_y() -> f64 {
    crate::krein::DEFAULT_EPS_Y
}

fn default_band() -> [f64; 2] {
    [0.1, 0.8]
}

fn default_tail() -> f64 {
    crate::spectral::TAIL_TOLERANCE
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eps_y: default_eps_y(), band: default_band(), tail: default_tail() }
    }
}

fn all_stages() -> Vec<Stage> {
    Stage::ALL.to_vec()
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Potential>,
    /// External response data replacing the forward stages.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_csv: Option<PathBuf>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n: usize,
    #[serde(default)]
    pub spectral: SpectralOptions,
    #[serde(default = "all_stages")]
    pub stages: Vec<Stage>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub sign: SignConvention,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn new(potential: Potential, horizon: f64, n: usize) -> Self {
        Self {
            potential: Some(potential),
            response_csv: None,
            horizon,
            n,
            spectral: SpectralOptions::default(),
            stages: all_stages(),
            out: default_out(),
            sign: SignConvention::default(),
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }

    pub fn spectral_half_length(&self) -> f64 {
        self.spectral.half_length.unwrap_or(4.0 * self.horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::config(format!("T must be positive, got {}", self.horizon)));
        }
        if self.n < crate::model::grid::MIN_STEPS {
            return Err(Error::config(format!("n must be at least 8, got {}", self.n)));
        }
        match (&self.potential, &self.response_csv) {
            (None, None) => return Err(Error::config("either potential or response_csv is required")),
            (Some(_), Some(_)) => return Err(Error::config("potential and response_csv are mutually exclusive")),
            _ => {}
        }
        if self.stages.is_empty() {
            return Err(Error::config("stages must not be empty"));
        }
        if self.stages.contains(&Stage::Spectral) {
            let big_n = self.spectral_half_length();
            if big_n <= self.horizon || big_n.is_nan() {
                return Err(Error::config(format!("spectral N = {big_n} must exceed T = {}", self.horizon)));
            }
            if self.spectral.cutoff == 0 || self.spectral.pairs == 0 {
                return Err(Error::config("spectral cutoff and pairs must be positive"));
            }
        }
        let [lo, hi] = self.tolerances.band;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::config(format!("tolerances.band must satisfy 0 <= lo < hi <= 1, got [{lo}, {hi}]")));
        }
        if !(self.tolerances.eps_y >= 0.0 && self.tolerances.eps_y < 1.0) {
            return Err(Error::config("tolerances.eps_y must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Strict parse: unknown keys are rejected by name.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn write_config(cfg: &RunConfig) -> Result<String> {
    crate::io::to_json_string(cfg)
}
