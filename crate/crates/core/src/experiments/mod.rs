//! Reproducible Monte Carlo experiments over the skew orbit machinery.
//!
//! Every experiment is a pure function of its configuration, including the
//! seed: trials draw from per-trial counter-keyed streams, parallel workers
//! only fill a preallocated table in trial order, and reports carry the
//! configuration echo. Repeated runs are bit-identical regardless of the
//! worker count.

mod report;
mod runners;

pub use report::{json_num, write_outputs, CsvTable, ExperimentReport, WrittenPaths};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adic::AdicError;
use crate::beta::{Beta, BetaError};
use crate::ratio::ParseRatioError;
use crate::skew::{Group, Observable, ObservableError, Window};
use crate::spectral::SpectralError;

/// Deterministic, trial-indexed random stream.
pub fn rng_stream(seed: u64, trial: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(b"betaadic");
    ChaCha12Rng::from_seed(key)
}

/// Worker pool honoring the `BETA_ADIC_THREADS` cap.
pub fn thread_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("BETA_ADIC_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                builder = builder.num_threads(n);
            }
        }
    }
    builder.build().expect("thread pool")
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Beta(#[from] BetaError),
    #[error(transparent)]
    Adic(#[from] AdicError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error("bad numeric value: {0}")]
    Ratio(#[from] ParseRatioError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("feasibility exceeded: {0}")]
    FeasibilityExceeded(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Clt,
    Ds,
    LemmaFinal,
    Bre,
    Llt,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExperimentKind::Clt => "clt",
            ExperimentKind::Ds => "ds",
            ExperimentKind::LemmaFinal => "lemma-final",
            ExperimentKind::Bre => "bre",
            ExperimentKind::Llt => "llt",
        };
        write!(f, "{s}")
    }
}

/// Observable selection in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    /// `"Z"` or `"R"`.
    #[serde(default = "default_group")]
    pub group: String,
    /// `"first-digit"`, `"rounded-identity"`, `"constant"`, or `"pieces"`.
    #[serde(default = "default_obs_kind")]
    pub kind: String,
    /// Cell count for `rounded-identity`.
    #[serde(default)]
    pub resolution: Option<u32>,
    /// Value for `constant`.
    #[serde(default)]
    pub value: Option<String>,
    /// Explicit `(interval, value)` list for `pieces`.
    #[serde(default)]
    pub pieces: Option<Vec<PieceSpec>>,
}

fn default_group() -> String {
    "Z".into()
}

fn default_obs_kind() -> String {
    "first-digit".into()
}

impl Default for ObservableSpec {
    fn default() -> Self {
        ObservableSpec {
            group: default_group(),
            kind: default_obs_kind(),
            resolution: None,
            value: None,
            pieces: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub lo: String,
    pub hi: String,
    pub value: String,
}

impl ObservableSpec {
    pub fn group(&self) -> Result<Group, ExperimentError> {
        match self.group.as_str() {
            "Z" | "z" => Ok(Group::Integers),
            "R" | "r" => Ok(Group::Reals),
            other => Err(ExperimentError::Config(format!("unknown group `{other}`"))),
        }
    }

    pub fn build(&self, beta: &Beta) -> Result<Observable, ExperimentError> {
        let group = self.group()?;
        match self.kind.as_str() {
            "first-digit" => {
                if group != Group::Integers {
                    return Err(ExperimentError::Config(
                        "first-digit is an integer observable".into(),
                    ));
                }
                Ok(Observable::first_digit(beta))
            }
            "rounded-identity" => Ok(Observable::rounded_identity(
                beta,
                self.resolution.unwrap_or(64),
            )),
            "constant" => {
                let v = crate::ratio::parse_ratio(self.value.as_deref().unwrap_or("0"))?;
                Ok(Observable::constant(beta, group, v))
            }
            "pieces" => {
                let specs = self
                    .pieces
                    .as_ref()
                    .ok_or_else(|| ExperimentError::Config("missing pieces".into()))?;
                let mut pieces = Vec::with_capacity(specs.len());
                for p in specs {
                    pieces.push((
                        crate::ratio::parse_ratio(&p.lo)?,
                        crate::ratio::parse_ratio(&p.hi)?,
                        crate::ratio::parse_ratio(&p.value)?,
                    ));
                }
                Ok(Observable::from_pieces(beta, group, pieces)?)
            }
            other => Err(ExperimentError::Config(format!(
                "unknown observable kind `{other}`"
            ))),
        }
    }
}

/// Fiber window selection in config files.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    #[serde(default)]
    pub point: Option<i64>,
    #[serde(default)]
    pub lo: Option<String>,
    #[serde(default)]
    pub hi: Option<String>,
}

impl WindowSpec {
    pub fn build(&self, group: Group) -> Result<Window, ExperimentError> {
        match (self.point, &self.lo, &self.hi) {
            (Some(k), None, None) => Ok(Window::IntPoint(k)),
            (None, Some(lo), Some(hi)) => Ok(Window::RealInterval {
                lo: crate::ratio::parse_ratio(lo)?,
                hi: crate::ratio::parse_ratio(hi)?,
            }),
            (None, None, None) => Ok(Window::default_for(group)),
            _ => Err(ExperimentError::Config(
                "window needs either `point` or both `lo` and `hi`".into(),
            )),
        }
    }
}

/// Acceptance thresholds, pinned as defaults and echoed in reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub clt_ks: f64,
    pub ds_ks: f64,
    pub lemma_pass_fraction: f64,
    pub bre_ratio: f64,
    pub bre_slope: f64,
    pub llt_rel: f64,
    pub llt_uniform: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            clt_ks: 0.03,
            ds_ks: 0.10,
            lemma_pass_fraction: 0.85,
            bre_ratio: 20.0,
            bre_slope: 0.05,
            llt_rel: 0.20,
            llt_uniform: 0.80,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_beta")]
    pub beta: String,
    #[serde(default)]
    pub observable: ObservableSpec,
    #[serde(default = "default_n")]
    pub n: u64,
    /// Checkpoint schedule; used by the occupancy-growth experiment.
    #[serde(default)]
    pub schedule: Option<Vec<u64>>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    /// Sampling depth for starting words.
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub window: Option<WindowSpec>,
    /// Gate radius (in standard deviations) for the pointwise identity.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Absolute tolerance of the pointwise identity.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Operator resolution for variance estimation.
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Target number of orbit blocks per run: the block rank is
    /// `floor(log_beta(n / block_scale))`, so the orbit splits into roughly
    /// `block_scale` fibers. Large enough that per-block fluctuations of
    /// the density and the tail corrections average out.
    #[serde(default = "default_block_scale")]
    pub block_scale: f64,
    /// Skips the spectral variance computation when set.
    #[serde(default)]
    pub sigma2_override: Option<f64>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_beta() -> String {
    "5/2".into()
}

fn default_n() -> u64 {
    10_000
}

fn default_trials() -> u64 {
    1_000
}

fn default_depth() -> usize {
    30
}

fn default_delta() -> f64 {
    3.0
}

fn default_epsilon() -> f64 {
    0.15
}

fn default_bins() -> usize {
    4096
}

fn default_block_scale() -> f64 {
    64.0
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            beta: default_beta(),
            observable: ObservableSpec::default(),
            n: default_n(),
            schedule: None,
            trials: default_trials(),
            seed: 0,
            depth: default_depth(),
            window: None,
            delta: default_delta(),
            epsilon: default_epsilon(),
            bins: default_bins(),
            block_scale: default_block_scale(),
            sigma2_override: None,
            thresholds: Thresholds::default(),
        }
    }
}

/// Result of one experiment run: the JSON-able report plus the per-trial
/// table destined for CSV.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ExperimentReport,
    pub table: CsvTable,
}

/// Runs an experiment. Pure in `(config)`: no IO, no global state.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let work = cfg.n.saturating_mul(cfg.trials.max(1));
    let cap = 4_000_000_000_000u64;
    if work > cap {
        return Err(ExperimentError::FeasibilityExceeded(format!(
            "n * trials = {work} exceeds {cap}"
        )));
    }
    match cfg.kind {
        ExperimentKind::Clt => runners::run_clt(cfg),
        ExperimentKind::Ds => runners::run_ds(cfg),
        ExperimentKind::LemmaFinal => runners::run_lemma_final(cfg),
        ExperimentKind::Bre => runners::run_bre(cfg),
        ExperimentKind::Llt => runners::run_llt(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn rng_stream_is_deterministic_and_trial_indexed() {
        let a: Vec<u64> = {
            let mut r = rng_stream(42, 0);
            (0..100).map(|_| r.gen()).collect()
        };
        let b: Vec<u64> = {
            let mut r = rng_stream(42, 0);
            (0..100).map(|_| r.gen()).collect()
        };
        assert_eq!(a, b);
        let c: Vec<u64> = {
            let mut r = rng_stream(42, 1);
            (0..100).map(|_| r.gen()).collect()
        };
        assert_ne!(a[0], c[0]);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = ExperimentConfig::new(ExperimentKind::Ds);
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.kind, ExperimentKind::Ds);
        assert_eq!(back.beta, cfg.beta);
        assert_eq!(back.n, cfg.n);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let text = "kind = \"ds\"\nnot_a_key = 1\n";
        assert!(toml::from_str::<ExperimentConfig>(text).is_err());
    }
}
