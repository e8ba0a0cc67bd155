//! Experiment configuration files.
//!
//! ```json
//! {
//!   "chain_spec": "chain.json",
//!   "observable": [1.0, -1.0],
//!   "commands": [
//!     {"command": "spectrum"},
//!     {"command": "clt", "n": 2000, "replicas": 10000}
//!   ],
//!   "master_seed": 7,
//!   "output_dir": "out"
//! }
//! ```
//!
//! Relative paths are resolved against the directory holding the config.

use std::fmt;
use std::path::{Path, PathBuf};

use rclt_core::chain::CERTIFY_TOL;
use rclt_core::{project_mean_zero, ChainFile, MaximalMode, Observable, ReversibleChain};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Inline(Vec<f64>),
    /// A JSON file holding an array of numbers.
    Path(PathBuf),
}

fn default_trajectories() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    Spectrum,
    Variance {
        n_max: usize,
    },
    Decompose {
        length: usize,
        horizon: usize,
        #[serde(default = "default_trajectories")]
        trajectories: usize,
    },
    Clt {
        n: usize,
        replicas: usize,
    },
    Fclt {
        n: usize,
        replicas: usize,
        grid: Vec<f64>,
    },
    Maximal {
        n: usize,
        lambdas: Vec<f64>,
        #[serde(default = "default_mode")]
        mode: MaximalMode,
        /// Enumerate every path instead of sampling.
        #[serde(default)]
        exhaustive: bool,
        #[serde(default)]
        replicas: Option<usize>,
        #[serde(default)]
        two_sided: bool,
    },
    UiDiagnostic {
        n_list: Vec<usize>,
        thresholds: Vec<f64>,
        replicas: usize,
    },
}

fn default_mode() -> MaximalMode {
    MaximalMode::Forward
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Variance { .. } => "variance",
            Command::Decompose { .. } => "decompose",
            Command::Clt { .. } => "clt",
            Command::Fclt { .. } => "fclt",
            Command::Maximal { .. } => "maximal",
            Command::UiDiagnostic { .. } => "ui-diagnostic",
        }
    }

    /// Position in the fixed execution order.
    pub fn rank(&self) -> usize {
        match self {
            Command::Spectrum => 0,
            Command::Variance { .. } => 1,
            Command::Decompose { .. } => 2,
            Command::Clt { .. } => 3,
            Command::Fclt { .. } => 4,
            Command::Maximal { .. } => 5,
            Command::UiDiagnostic { .. } => 6,
        }
    }

    /// Whether the command draws random numbers.
    pub fn needs_seed(&self) -> bool {
        match self {
            Command::Spectrum | Command::Variance { .. } => false,
            Command::Maximal { exhaustive, .. } => !exhaustive,
            _ => true,
        }
    }

    pub fn needs_variance(&self) -> bool {
        matches!(self, Command::Clt { .. } | Command::Fclt { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub chain_spec: PathBuf,
    #[serde(default)]
    pub observable: Option<ObservableSpec>,
    pub commands: Vec<Command>,
    #[serde(default)]
    pub master_seed: Option<u64>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn warning(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            message: message.into(),
        }
    }

    fn error(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Command-line overrides of config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

/// A config with its chain and observable built and paths resolved.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub chain: ReversibleChain,
    pub observable: Observable,
    pub output_dir: PathBuf,
    pub master_seed: Option<u64>,
    /// Hex SHA-256 of the config file bytes.
    pub config_hash: String,
    pub diagnostics: Vec<Diagnostic>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn raw_observable(
    spec: Option<&ObservableSpec>,
    chain_file: &ChainFile,
    base: &Path,
) -> Result<Vec<f64>> {
    match spec {
        Some(ObservableSpec::Inline(v)) => Ok(v.clone()),
        Some(ObservableSpec::Path(p)) => {
            let path = resolve(base, p);
            serde_json::from_str(&read(&path)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
        None => chain_file.observable.clone().ok_or_else(|| {
            CliError::Config("no observable in the config or the chain file".into())
        }),
    }
}

/// Read and check a config file. Centering the observable is reported as a
/// warning diagnostic, never as an error.
pub fn load(config_path: &Path, overrides: &Overrides) -> Result<LoadedConfig> {
    let bytes = std::fs::read(config_path).map_err(|source| CliError::Read {
        path: config_path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Config("config is not UTF-8".into()))?;
    let config = ExperimentConfig::from_json(&text)?;
    let base = config_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();

    let chain_path = resolve(&base, &config.chain_spec);
    let chain_file = ChainFile::from_json(&read(&chain_path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", chain_path.display())))?;
    let chain = chain_file
        .build()
        .map_err(|e| CliError::Config(format!("{}: {e}", chain_path.display())))?;

    let raw = raw_observable(config.observable.as_ref(), &chain_file, &base)?;
    if raw.len() != chain.n_states() {
        return Err(CliError::Config(format!(
            "observable has {} entries, chain has {} states",
            raw.len(),
            chain.n_states()
        )));
    }
    let observable = project_mean_zero(&raw, &chain)
        .map_err(|e| CliError::Config(format!("observable: {e}")))?;
    let mut diagnostics = Vec::new();
    let shift = raw
        .iter()
        .zip(observable.values().iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = raw.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if shift > CERTIFY_TOL * scale {
        diagnostics.push(Diagnostic::warning(format!(
            "observable auto-centered (mean {shift:.6e} subtracted)"
        )));
    }

    let master_seed = overrides.seed.or(config.master_seed);
    if master_seed.is_none() {
        if let Some(c) = config.commands.iter().find(|c| c.needs_seed()) {
            return Err(CliError::Config(format!(
                "`{}` is a Monte Carlo command and needs master_seed",
                c.name()
            )));
        }
    }
    let output_dir = match &overrides.output_dir {
        Some(dir) => dir.clone(),
        None => resolve(&base, &config.output_dir),
    };
    Ok(LoadedConfig {
        config,
        chain,
        observable,
        output_dir,
        master_seed,
        config_hash: sha256_hex(&bytes),
        diagnostics,
    })
}

/// Dry-run checks. Problems come back as diagnostics; an empty list means
/// the config is ready to run.
pub fn validate(config_path: &Path, overrides: &Overrides) -> Vec<Diagnostic> {
    let loaded = match load(config_path, overrides) {
        Ok(l) => l,
        Err(e) => return vec![Diagnostic::error(e.to_string())],
    };
    let mut out = loaded.diagnostics.clone();
    if loaded.config.commands.is_empty() {
        out.push(Diagnostic::warning("no commands"));
    }
    if loaded.config.commands.iter().any(Command::needs_variance) {
        match rclt_core::spectral_measure(&loaded.chain, &loaded.observable)
            .and_then(|rho| rho.asymptotic_variance())
        {
            Ok(s) if s.abs() <= rclt_core::limits::DEGENERATE_SIGMA2 => {
                out.push(Diagnostic::error(format!(
                    "degenerate variance: sigma2 = 0 (computed {s:.3e})"
                )))
            }
            Ok(_) => {}
            Err(e) => out.push(Diagnostic::error(format!("variance: {e}"))),
        }
    }
    out
}
