//! Run configuration: experiment hyper-parameters plus the dataset choice.
//! Every source (config file, environment, flags) goes through
//! [`RunSpec::set`], so all of them accept the same keys and values.

use std::fmt;
use std::path::{Path, PathBuf};

use slicegw_core::adapt::{Arm, ExperimentConfig};
use slicegw_core::autodiff::OptimizerKind;
use slicegw_core::data::GaussianTask;

use crate::error::{Error, Result};

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "SLICEGW_SEED";
/// Environment variable pointing at the directory with the MNIST IDX files.
pub const MNIST_DIR_ENV: &str = "SLICEGW_MNIST_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Gaussians,
    MnistInvert,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Gaussians => "gaussians",
            DatasetKind::MnistInvert => "mnist-invert",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gaussians" => Ok(DatasetKind::Gaussians),
            "mnist-invert" => Ok(DatasetKind::MnistInvert),
            other => Err(format!("unknown dataset {other:?} (expected gaussians or mnist-invert)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub cfg: ExperimentConfig,
    pub dataset: DatasetKind,
    /// Shape of the synthetic task; its seed is replaced by `data_seed`
    /// (or the run seed) when the data is drawn.
    pub task: GaussianTask,
    pub data_seed: Option<u64>,
    pub mnist_dir: PathBuf,
    /// Cap on the number of training rows per domain.
    pub train_limit: Option<usize>,
    /// Cap on the number of test rows per domain.
    pub test_limit: Option<usize>,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            cfg: ExperimentConfig::default(),
            dataset: DatasetKind::Gaussians,
            task: GaussianTask::default(),
            data_seed: None,
            mnist_dir: PathBuf::from("data/mnist"),
            train_limit: None,
            test_limit: None,
        }
    }
}

/// Every key accepted by [`RunSpec::set`].
pub const KEYS: &[&str] = &[
    "arm",
    "batch_size",
    "center_scale",
    "classes",
    "data_seed",
    "dataset",
    "dim",
    "disc_hidden",
    "epochs",
    "feature_dim",
    "hidden",
    "lambda_adv",
    "lambda_sgw",
    "leaky_slope",
    "lr",
    "mnist_dir",
    "momentum",
    "n_per_class",
    "noise",
    "optimizer",
    "projections",
    "resample_projections",
    "rotation_deg",
    "seed",
    "test_limit",
    "train_limit",
    "translation",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("invalid value {value:?} for {key}"))
}

impl RunSpec {
    /// Defaults, with the seed taken from [`SEED_ENV`] and the MNIST
    /// directory from [`MNIST_DIR_ENV`] when those are set.
    pub fn from_env() -> Result<Self> {
        let mut spec = Self::default();
        if let Ok(seed) = std::env::var(SEED_ENV) {
            spec.set("seed", &seed).map_err(|m| Error::Invalid(format!("{SEED_ENV}: {m}")))?;
        }
        if let Ok(dir) = std::env::var(MNIST_DIR_ENV) {
            spec.mnist_dir = PathBuf::from(dir);
        }
        Ok(spec)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let cfg = &mut self.cfg;
        match key {
            "arm" => cfg.arm = Arm::parse(value).map_err(|e| e.to_string())?,
            "batch_size" => cfg.batch_size = parse(key, value)?,
            "lr" => cfg.lr = parse(key, value)?,
            "epochs" => cfg.epochs = parse(key, value)?,
            "lambda_adv" => cfg.lambda_adv = parse(key, value)?,
            "lambda_sgw" => cfg.lambda_sgw = parse(key, value)?,
            "projections" => cfg.projections = parse(key, value)?,
            "seed" => cfg.seed = parse(key, value)?,
            "resample_projections" => cfg.resample_projections = parse(key, value)?,
            "hidden" => cfg.hidden = parse(key, value)?,
            "feature_dim" => cfg.feature_dim = parse(key, value)?,
            "disc_hidden" => cfg.disc_hidden = parse(key, value)?,
            "leaky_slope" => cfg.leaky_slope = parse(key, value)?,
            "optimizer" => {
                cfg.optimizer = match (value, cfg.optimizer) {
                    ("sgd", OptimizerKind::Sgd { .. }) => cfg.optimizer,
                    ("sgd", _) => OptimizerKind::SGD,
                    ("adam", _) => OptimizerKind::ADAM,
                    _ => return Err(format!("unknown optimizer {value:?} (expected sgd or adam)")),
                }
            }
            "momentum" => match cfg.optimizer {
                OptimizerKind::Sgd { .. } => cfg.optimizer = OptimizerKind::Sgd { momentum: parse(key, value)? },
                OptimizerKind::Adam { .. } => return Err("momentum applies to the sgd optimizer only".into()),
            },
            "dataset" => self.dataset = value.parse()?,
            "data_seed" => self.data_seed = Some(parse(key, value)?),
            "mnist_dir" => self.mnist_dir = PathBuf::from(value),
            "train_limit" => self.train_limit = Some(parse(key, value)?),
            "test_limit" => self.test_limit = Some(parse(key, value)?),
            "classes" => self.task.classes = parse(key, value)?,
            "n_per_class" => self.task.n_per_class = parse(key, value)?,
            "dim" => self.task.dim = parse(key, value)?,
            "rotation_deg" => self.task.rotation_deg = parse(key, value)?,
            "noise" => self.task.noise = parse(key, value)?,
            "center_scale" => self.task.center_scale = parse(key, value)?,
            "translation" => {
                self.task.translation = if value.trim().is_empty() {
                    Vec::new()
                } else {
                    value.split(',').map(|v| parse(key, v.trim())).collect::<Result<_, _>>()?
                }
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are
    /// skipped; a repeated key keeps its last value.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line: i + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, found {line:?}")))?;
            self.set(key.trim(), value.trim()).map_err(err)?;
        }
        Ok(())
    }

    pub fn apply_config_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_config(&text).map_err(|e| match e {
            Error::Config { line, message } => Error::Invalid(format!("{}: line {line}: {message}", path.display())),
            other => other,
        })
    }

    /// Seed of the generated data for this run.
    pub fn effective_data_seed(&self) -> u64 {
        self.data_seed.unwrap_or(self.cfg.seed)
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if self.train_limit == Some(0) || self.test_limit == Some(0) {
            return Err(Error::Invalid("limits must be at least 1".into()));
        }
        Ok(())
    }
}
