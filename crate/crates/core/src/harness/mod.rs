//! Experiment orchestration: declarative plans, seeded fan-out over
//! `(size, sample)` tasks, JSONL output with manifests, exponent fits and the
//! acceptance report.

mod fit;
mod report;
mod run;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arms::Sigma;
use crate::normalizer::MetricKind;

pub use fit::{fit_exponent, fit_points, mean_by, ExponentFit};
pub use report::{acceptance_plans, acceptance_report, AcceptanceReport, Status, Verdict, CHECKS_FILE};
pub use run::{manifest_path, read_records, run, run_unless_current, t_grid, RunSummary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid plan: {0}")]
    Invalid(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Crossing,
    Arms,
    Qn,
    Metrics,
    Volume,
    Walk,
    Gh,
}

/// Which metric a `qn` plan estimates. `both` shares the conditional samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricSelection {
    #[default]
    Geo,
    Res,
    Both,
}

impl MetricSelection {
    pub fn kinds(self) -> Vec<MetricKind> {
        match self {
            MetricSelection::Geo => vec![MetricKind::Geo],
            MetricSelection::Res => vec![MetricKind::Res],
            MetricSelection::Both => vec![MetricKind::Geo, MetricKind::Res],
        }
    }
}

/// Arm event around the origin; plan sizes are the outer radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmsSection {
    pub sigma: Sigma,
    pub r: u32,
    #[serde(default)]
    pub half_plane: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeSection {
    /// Dyadic levels `k`; all of `0..=log2 n` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<u32>>,
    /// One-arm estimate used to normalize the cluster measure; no measure
    /// records without it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_arm_hat: Option<f64>,
}

/// Walks on one-arm conditioned environments; plan sizes are the window radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSection {
    #[serde(default = "default_r_factor")]
    pub r_factor: u32,
    #[serde(default = "default_t_max")]
    pub t_max: usize,
    /// Exit radii; powers of two from 4 below `r / 2` when empty.
    #[serde(default)]
    pub radii: Vec<u32>,
}

impl Default for WalkSection {
    fn default() -> Self {
        WalkSection { r_factor: default_r_factor(), t_max: default_t_max(), radii: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GhSection {
    #[serde(default = "default_net_points")]
    pub net_points: usize,
}

impl Default for GhSection {
    fn default() -> Self {
        GhSection { net_points: default_net_points() }
    }
}

fn default_r_factor() -> u32 {
    crate::walk::DEFAULT_R_FACTOR
}

fn default_t_max() -> usize {
    2000
}

fn default_net_points() -> usize {
    50
}

fn default_p() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub sizes: Vec<u32>,
    pub samples: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub metric_kind: MetricSelection,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub strict: bool,
    pub output_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arms: Option<ArmsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<VolumeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walk: Option<WalkSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gh: Option<GhSection>,
}

impl ExperimentPlan {
    pub fn new(kind: ExperimentKind, sizes: Vec<u32>, samples: u64, base_seed: u64, output_path: impl Into<PathBuf>) -> Self {
        ExperimentPlan {
            kind,
            sizes,
            samples,
            base_seed,
            metric_kind: MetricSelection::default(),
            p: default_p(),
            strict: false,
            output_path: output_path.into(),
            arms: None,
            volume: None,
            walk: None,
            gh: None,
        }
    }

    /// Parses a TOML plan; errors carry the line and column.
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, HarnessError> {
        let plan: ExperimentPlan =
            toml::from_str(text).map_err(|e| HarnessError::Parse { path: origin.to_path_buf(), message: e.to_string() })?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plans serialize")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Invalid(m));
        if self.sizes.is_empty() {
            return bad("sizes is empty".into());
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("sizes must be strictly ascending: {:?}", self.sizes));
        }
        if self.sizes[0] == 0 {
            return bad("sizes must be positive".into());
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if !(self.p > 0.0 && self.p <= 0.5) {
            return bad(format!("p must lie in (0, 1/2], got {}", self.p));
        }
        match self.kind {
            ExperimentKind::Arms => match &self.arms {
                None => return bad("arms plans need an [arms] section".into()),
                Some(a) if a.r == 0 || a.r > self.sizes[0] => {
                    return bad(format!("arms.r = {} must lie in 1..=min(sizes)", a.r));
                }
                _ => {}
            },
            ExperimentKind::Walk => {
                let w = self.walk.clone().unwrap_or_default();
                if w.r_factor < 100 {
                    return bad(format!("walk.r_factor must be at least 100, got {}", w.r_factor));
                }
                if w.t_max == 0 {
                    return bad("walk.t_max must be positive".into());
                }
            }
            ExperimentKind::Gh if self.gh.as_ref().is_some_and(|g| g.net_points < 2) => {
                return bad("gh.net_points must be at least 2".into());
            }
            _ => {}
        }
        Ok(())
    }
}
