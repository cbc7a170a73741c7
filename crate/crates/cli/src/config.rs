//! Run configuration: JSON file, defaults, and command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use h1stiefel::geometry::NormSpec;
use h1stiefel::matrix_io::read_matrix;
use h1stiefel::stiefel::ReferenceFrame;
use h1stiefel::two_norm_space::{build_space, GramPair, SpaceSpec};

use crate::CliError;

/// Named tolerances and their defaults.
pub const DEFAULT_TOLERANCES: [(&str, f64); 12] = [
    ("adjoint_oracle", 1e-10),
    ("curve", 1e-6),
    ("equivalence", 1e-8),
    ("grassmann", 1e-9),
    ("group", 1e-10),
    ("lie", 1e-12),
    ("metric_slack", 1e-10),
    ("section", 1e-9),
    ("split", 1e-12),
    ("sqrt", 1e-8),
    ("tangent", 1e-10),
    ("transitivity", 1e-9),
];

/// Largest supported number of grid coefficients.
pub const MAX_DIM: usize = 512;

fn default_seed() -> u64 {
    42
}

fn default_n() -> usize {
    2
}

fn default_trials() -> usize {
    100
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub space: SpaceSpec,
    #[serde(rename = "N", default = "default_n")]
    pub n_frames: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub norm: NormSpec,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Optional matrix file with the reference basis `Xi` (n x N).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_frame: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: default_seed(),
            space: SpaceSpec::default(),
            n_frames: default_n(),
            trials: default_trials(),
            tolerances: BTreeMap::new(),
            norm: NormSpec::default(),
            output_dir: default_output_dir(),
            reference_frame: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.space.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.norm.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        if self.n_frames == 0 {
            return Err(CliError::Config("N must be at least 1".into()));
        }
        let n = self
            .space
            .grid_points
            .checked_pow(self.space.domain_dim as u32)
            .filter(|n| *n <= MAX_DIM)
            .ok_or_else(|| CliError::Config(format!("space dimension exceeds {MAX_DIM}")))?;
        if self.n_frames > n {
            return Err(CliError::Config(format!("N = {} exceeds the space dimension n = {n}", self.n_frames)));
        }
        for (name, value) in &self.tolerances {
            if !DEFAULT_TOLERANCES.iter().any(|(k, _)| k == name) {
                return Err(CliError::Config(format!("unknown tolerance {name:?}")));
            }
            if !(value.is_finite() && *value > 0.0) {
                return Err(CliError::Config(format!("tolerance {name:?} must be positive")));
            }
        }
        Ok(())
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances.get(name).copied().unwrap_or_else(|| {
            DEFAULT_TOLERANCES
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .unwrap_or_else(|| panic!("no default tolerance named {name}"))
        })
    }
}

/// The space and reference frame a run works in.
#[derive(Debug, Clone)]
pub struct Setup {
    pub gram: GramPair,
    pub reference: ReferenceFrame,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        config.validate()?;
        let gram = build_space(&config.space).map_err(|e| CliError::Config(e.to_string()))?;
        let reference = match &config.reference_frame {
            Some(path) => {
                let xi = read_matrix(path).map_err(|e| CliError::Config(e.to_string()))?;
                if xi.shape() != (gram.n(), config.n_frames) {
                    return Err(CliError::Config(format!(
                        "{}: reference frame is {}x{}, expected {}x{}",
                        path.display(),
                        xi.nrows(),
                        xi.ncols(),
                        gram.n(),
                        config.n_frames
                    )));
                }
                ReferenceFrame::new(xi, &gram).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => ReferenceFrame::smooth(&gram, config.n_frames).map_err(|e| CliError::Config(e.to_string()))?,
        };
        Ok(Setup { gram, reference })
    }
}
