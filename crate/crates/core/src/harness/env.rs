use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{duplicate_half, BanditRound, LabeledDataset, PreparedRows};
use crate::linalg;
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// A source of bandit rounds with random access by round index.
pub trait Environment: Send + Sync {
    /// Number of rounds available.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn arms(&self) -> usize;

    fn context_dim(&self) -> usize;

    /// Round `t` (0-based).
    fn round(&self, t: usize) -> Result<BanditRound>;
}

/// Classification data presented as a bandit: one shuffled row per round.
#[derive(Debug, Clone)]
pub struct ClassificationEnv {
    rows: PreparedRows,
}

impl ClassificationEnv {
    pub fn new(dataset: &LabeledDataset, seed: u64, duplicate: bool) -> Self {
        let shuffled = crate::data::shuffle(dataset, seed);
        Self {
            rows: PreparedRows::new(&shuffled, duplicate),
        }
    }

    pub fn prepared(&self) -> &PreparedRows {
        &self.rows
    }
}

impl Environment for ClassificationEnv {
    fn len(&self) -> usize {
        self.rows.len()
    }

    fn arms(&self) -> usize {
        self.rows.num_classes
    }

    fn context_dim(&self) -> usize {
        self.rows.context_dim()
    }

    fn round(&self, t: usize) -> Result<BanditRound> {
        if t >= self.rows.len() {
            return Err(Error::Exhausted {
                horizon: t + 1,
                available: self.rows.len(),
            });
        }
        self.rows.round(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticReward {
    /// `h(x) = cos(3 xᵀa)`.
    Cosine,
    /// `h(x) = xᵀw`.
    Linear,
    /// `h(x) = 10 (xᵀa)²`.
    Quadratic,
}

impl std::str::FromStr for SyntheticReward {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" | "cos" => Ok(Self::Cosine),
            "linear" => Ok(Self::Linear),
            "quadratic" => Ok(Self::Quadratic),
            _ => Err(Error::InvalidConfig(format!("unknown synthetic reward {s:?}"))),
        }
    }
}

/// Synthetic problem: every arm gets an independent uniformly random unit
/// context in `R^dim`, and rewards are `h(x) + N(0, noise²)` for a random
/// unit parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub reward: SyntheticReward,
    pub arms: usize,
    pub dim: usize,
    pub noise: f64,
    pub rounds: usize,
}

impl SyntheticSpec {
    pub fn new(reward: SyntheticReward) -> Self {
        Self {
            reward,
            arms: 4,
            dim: 8,
            noise: 0.1,
            rounds: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticEnv {
    spec: SyntheticSpec,
    seed: u64,
    param: Vec<f64>,
    duplicate: bool,
}

fn random_unit(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = linalg::norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

impl SyntheticEnv {
    pub fn new(spec: SyntheticSpec, seed: u64, duplicate: bool) -> Result<Self> {
        if spec.arms == 0 || spec.dim == 0 {
            return Err(Error::InvalidConfig("synthetic problem needs arms and dimensions".into()));
        }
        let mut rng = stream_rng(seed, Stream::Data, 0);
        let param = random_unit(spec.dim, &mut rng);
        Ok(Self {
            spec,
            seed,
            param,
            duplicate,
        })
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }

    pub fn parameter(&self) -> &[f64] {
        &self.param
    }

    /// Noise-free reward of a raw context.
    pub fn mean_reward(&self, x: &[f64]) -> f64 {
        let proj = linalg::dot(x, &self.param);
        match self.spec.reward {
            SyntheticReward::Cosine => (3.0 * proj).cos(),
            SyntheticReward::Linear => proj,
            SyntheticReward::Quadratic => 10.0 * proj * proj,
        }
    }
}

impl Environment for SyntheticEnv {
    fn len(&self) -> usize {
        self.spec.rounds
    }

    fn arms(&self) -> usize {
        self.spec.arms
    }

    fn context_dim(&self) -> usize {
        if self.duplicate {
            2 * self.spec.dim
        } else {
            self.spec.dim
        }
    }

    fn round(&self, t: usize) -> Result<BanditRound> {
        if t >= self.spec.rounds {
            return Err(Error::Exhausted {
                horizon: t + 1,
                available: self.spec.rounds,
            });
        }
        let index = u32::try_from(t).map_err(|_| Error::OutOfRange("round index".into()))?;
        let mut ctx_rng = stream_rng(self.seed, Stream::Data, index + 1);
        let mut noise_rng = stream_rng(self.seed, Stream::Noise, index);
        let raw: Vec<Vec<f64>> = (0..self.spec.arms)
            .map(|_| random_unit(self.spec.dim, &mut ctx_rng))
            .collect();
        let expected: Vec<f64> = raw.iter().map(|x| self.mean_reward(x)).collect();
        let rewards = expected
            .iter()
            .map(|h| h + self.spec.noise * noise_rng.sample::<f64, _>(StandardNormal))
            .collect();
        let contexts = if self.duplicate {
            raw.iter().map(|x| duplicate_half(x)).collect::<Result<_>>()?
        } else {
            raw
        };
        Ok(BanditRound {
            contexts,
            rewards,
            expected,
            label: None,
        })
    }
}

/// A loaded dataset or synthetic generator from which per-repeat
/// environments are built.
#[derive(Debug, Clone)]
pub enum DataSource {
    Classification(Arc<LabeledDataset>),
    Synthetic(SyntheticSpec),
}

impl DataSource {
    pub fn environment(&self, seed: u64, duplicate: bool) -> Result<Box<dyn Environment>> {
        Ok(match self {
            DataSource::Classification(ds) => Box::new(ClassificationEnv::new(ds, seed, duplicate)),
            DataSource::Synthetic(spec) => Box::new(SyntheticEnv::new(*spec, seed, duplicate)?),
        })
    }

    pub fn describe(&self) -> String {
        match self {
            DataSource::Classification(ds) => ds.provenance.clone(),
            DataSource::Synthetic(spec) => format!("synthetic:{:?}", spec.reward).to_lowercase(),
        }
    }
}
