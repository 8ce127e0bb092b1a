use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::env::{DataSource, SyntheticSpec};
use crate::data::{self, CsvSchema};
use crate::nn::TrainMode;
use crate::policies::{Algorithm, PolicyConfig};
use crate::{Error, Result};

/// Where the rounds of an experiment come from.
///
/// The textual form accepted by [`DatasetRef::parse`]:
///
/// ```text
/// synthetic:cosine | synthetic:linear | synthetic:quadratic
/// csv:PATH[:SCHEMA]
/// mushroom:PATH
/// idx:IMAGES,LABELS
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetRef {
    Synthetic(SyntheticSpec),
    Csv { path: PathBuf, schema: Option<PathBuf> },
    Mushroom(PathBuf),
    Idx { images: PathBuf, labels: PathBuf },
}

impl DatasetRef {
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidConfig(format!("dataset {s:?} must look like kind:argument")))?;
        match kind {
            "synthetic" => Ok(DatasetRef::Synthetic(SyntheticSpec::new(rest.parse()?))),
            "csv" => {
                let (path, schema) = match rest.rsplit_once(':') {
                    Some((p, sc)) => (p, Some(PathBuf::from(sc))),
                    None => (rest, None),
                };
                Ok(DatasetRef::Csv {
                    path: path.into(),
                    schema,
                })
            }
            "mushroom" => Ok(DatasetRef::Mushroom(rest.into())),
            "idx" => {
                let (images, labels) = rest
                    .split_once(',')
                    .ok_or_else(|| Error::InvalidConfig("idx dataset needs IMAGES,LABELS".into()))?;
                Ok(DatasetRef::Idx {
                    images: images.into(),
                    labels: labels.into(),
                })
            }
            _ => Err(Error::InvalidConfig(format!("unknown dataset kind {kind:?}"))),
        }
    }

    /// Input files, for manifests.
    pub fn files(&self) -> Vec<PathBuf> {
        match self {
            DatasetRef::Synthetic(_) => Vec::new(),
            DatasetRef::Csv { path, schema } => std::iter::once(path.clone()).chain(schema.clone()).collect(),
            DatasetRef::Mushroom(p) => vec![p.clone()],
            DatasetRef::Idx { images, labels } => vec![images.clone(), labels.clone()],
        }
    }

    pub fn load(&self) -> Result<DataSource> {
        let ds = match self {
            DatasetRef::Synthetic(spec) => return Ok(DataSource::Synthetic(*spec)),
            DatasetRef::Csv { path, schema } => {
                let schema = match schema {
                    Some(p) => CsvSchema::load(p)?,
                    None => CsvSchema::default(),
                };
                data::ingest_csv(path, &schema)?
            }
            DatasetRef::Mushroom(path) => data::ingest_csv(path, &CsvSchema::uci_mushroom())?,
            DatasetRef::Idx { images, labels } => data::ingest_idx(images, labels)?,
        };
        Ok(DataSource::Classification(Arc::new(ds)))
    }
}

/// Hyperparameter grid; cells are the Cartesian product `λ × ν × ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lambdas: Vec<f64>,
    pub nus: Vec<f64>,
    pub epsilons: Vec<f64>,
}

/// One grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lambda: f64,
    pub nu: f64,
    pub epsilon: f64,
}

impl GridSpec {
    /// The single cell given by `cfg`.
    pub fn single(cfg: &PolicyConfig) -> Self {
        Self {
            lambdas: vec![cfg.lambda],
            nus: vec![cfg.nu],
            epsilons: vec![cfg.epsilon],
        }
    }

    /// The published search grid for `cfg.algorithm`. Dimensions the
    /// algorithm ignores collapse to the value already in `cfg`.
    pub fn default_for(cfg: &PolicyConfig) -> Self {
        let mut g = Self::single(cfg);
        match cfg.algorithm {
            Algorithm::NeuralTs | Algorithm::NeuralUcb => {
                g.lambdas = vec![1.0, 1e-1, 1e-2, 1e-3];
                g.nus = vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
            }
            Algorithm::LinTs | Algorithm::LinUcb | Algorithm::KernelTs | Algorithm::KernelUcb => {
                g.lambdas = vec![1.0];
                g.nus = vec![1.0, 0.1, 0.01];
            }
            Algorithm::EpsGreedy => {
                g.lambdas = vec![1.0, 1e-1, 1e-2, 1e-3];
                g.epsilons = vec![0.01, 0.05, 0.1];
            }
            Algorithm::Bootstrap => g.lambdas = vec![1.0, 1e-1, 1e-2, 1e-3],
            Algorithm::Uniform => {}
        }
        g
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(self.lambdas.len() * self.nus.len() * self.epsilons.len());
        for &lambda in &self.lambdas {
            for &nu in &self.nus {
                for &epsilon in &self.epsilons {
                    out.push(Cell { lambda, nu, epsilon });
                }
            }
        }
        out
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetRef,
    pub policy: PolicyConfig,
    pub horizon: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Feedback batch size; `0` and `1` both mean immediate feedback.
    pub delay: usize,
    pub grid: GridSpec,
    /// Apply the duplicated-half transform to contexts. Defaults to on for
    /// the network-based algorithms only.
    pub duplicate_half: bool,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetRef, algorithm: Algorithm) -> Self {
        let policy = PolicyConfig::new(algorithm);
        Self {
            dataset,
            grid: GridSpec::single(&policy),
            policy,
            horizon: 2000,
            repeats: 8,
            seed: 0,
            delay: 0,
            duplicate_half: algorithm.is_neural(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        self.policy.validate()
    }

    /// The policy config for one grid cell.
    pub fn cell_policy(&self, cell: Cell) -> PolicyConfig {
        let mut p = self.policy.clone();
        p.lambda = cell.lambda;
        p.nu = cell.nu;
        p.epsilon = cell.epsilon;
        p.train.lambda = cell.lambda;
        p
    }

    /// Applies `key = value` settings. Keys use the long flag names without
    /// dashes (`T`, `repeats`, `nu`, `stop-train`, ...); list keys
    /// (`grid-lambda`, `grid-nu`, `grid-eps`) take comma-separated values.
    ///
    /// `dataset` and `algo` are applied first and grid keys last, so scalar
    /// `nu`/`lambda`/`eps` settings never clobber an explicit grid.
    pub fn apply(&mut self, settings: &BTreeMap<String, String>) -> Result<()> {
        let rank = |k: &str| match k.trim_start_matches('-') {
            "dataset" => 0,
            "algo" => 1,
            k if k.starts_with("grid") => 3,
            _ => 2,
        };
        let mut entries: Vec<_> = settings.iter().collect();
        entries.sort_by_key(|(k, _)| rank(k));
        for (key, value) in entries {
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let kv = data::parse_key_values(&text)?;
        let dataset = kv
            .get("dataset")
            .ok_or_else(|| Error::InvalidConfig(format!("{}: missing `dataset`", path.display())))?;
        let algorithm = kv.get("algo").map(|s| s.parse()).transpose()?.unwrap_or(Algorithm::NeuralTs);
        let mut cfg = Self::new(DatasetRef::parse(dataset)?, algorithm);
        cfg.apply(&kv)?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {v:?}")))
        }
        fn list(key: &str, v: &str) -> Result<Vec<f64>> {
            v.split(',').map(|s| num(key, s.trim())).collect()
        }
        let key = key.trim_start_matches('-').replace('_', "-");
        let p = &mut self.policy;
        match key.as_str() {
            "dataset" => self.dataset = DatasetRef::parse(value)?,
            "algo" => {
                let algo: Algorithm = value.parse()?;
                if algo != p.algorithm {
                    self.duplicate_half = algo.is_neural();
                }
                p.algorithm = algo;
            }
            "T" | "t" | "horizon" => self.horizon = num(&key, value)?,
            "repeats" => self.repeats = num(&key, value)?,
            "seed" => self.seed = num(&key, value)?,
            "delay" => self.delay = num(&key, value)?,
            "nu" => {
                p.nu = num(&key, value)?;
                self.grid.nus = vec![p.nu];
            }
            "lambda" => {
                p.lambda = num(&key, value)?;
                p.train.lambda = p.lambda;
                self.grid.lambdas = vec![p.lambda];
            }
            "eps" | "epsilon" => {
                p.epsilon = num(&key, value)?;
                self.grid.epsilons = vec![p.epsilon];
            }
            "width" => p.width = num(&key, value)?,
            "depth" => p.depth = num(&key, value)?,
            "iters" => p.train.iterations = num(&key, value)?,
            "lr" => p.train.step_size = num(&key, value)?,
            "batch" => {
                let b: usize = num(&key, value)?;
                p.train.mode = if b == 0 {
                    TrainMode::FullBatch
                } else {
                    TrainMode::MiniBatch { batch_size: b }
                };
            }
            "stop-train" => {
                p.stop_train = match value {
                    "none" | "never" => None,
                    v => Some(num(&key, v)?),
                }
            }
            "posterior" => p.posterior = value.parse()?,
            "warm-start" => p.warm_start = num(&key, value)?,
            "gamma" => p.gamma = num(&key, value)?,
            "bootstrap-networks" => p.bootstrap_networks = num(&key, value)?,
            "bootstrap-inclusion" => p.bootstrap_inclusion = num(&key, value)?,
            "duplicate-half" => self.duplicate_half = num(&key, value)?,
            "rounds" | "arms" | "dim" | "noise" => {
                let DatasetRef::Synthetic(spec) = &mut self.dataset else {
                    return Err(Error::InvalidConfig(format!("{key} only applies to synthetic datasets")));
                };
                match key.as_str() {
                    "rounds" => spec.rounds = num(&key, value)?,
                    "arms" => spec.arms = num(&key, value)?,
                    "dim" => spec.dim = num(&key, value)?,
                    _ => spec.noise = num(&key, value)?,
                }
            }
            "grid-lambda" => self.grid.lambdas = list(&key, value)?,
            "grid-nu" => self.grid.nus = list(&key, value)?,
            "grid-eps" => self.grid.epsilons = list(&key, value)?,
            "grid" => match value {
                "default" => self.grid = GridSpec::default_for(&self.policy),
                "single" => self.grid = GridSpec::single(&self.policy),
                _ => return Err(Error::InvalidConfig(format!("grid must be default or single, got {value:?}"))),
            },
            _ => return Err(Error::InvalidConfig(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }
}
