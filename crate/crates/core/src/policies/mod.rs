//! Bandit algorithms behind one [`Policy`] interface.
//!
//! `select` borrows the policy immutably and draws all of its randomness from
//! the generator it is handed; `observe` is the only mutating call and uses
//! generators owned by the policy. Replaying `select` with a cloned generator
//! therefore always reproduces the same decision.

mod kernel;
mod linear;
mod neural;

use serde::{Deserialize, Serialize};

pub use kernel::{rbf, KernelBandit};
pub use linear::LinearBandit;
pub use neural::{Bootstrap, EpsilonGreedy, NetworkRegressor, NeuralBandit};

use crate::nn::{NetShape, TrainConfig, TrainMode};
use crate::posterior::PosteriorMode;
use crate::rng::BenchRng;
use crate::{Error, Result};

/// One round's choice plus the per-arm quantities that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub arm: usize,
    pub scores: Vec<f64>,
    pub means: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl Decision {
    fn from_scores(scores: Vec<f64>, means: Vec<f64>, sigmas: Vec<f64>) -> Self {
        Self {
            arm: argmax(&scores),
            scores,
            means,
            sigmas,
        }
    }

    /// Posterior width of the chosen arm (0 for policies without one).
    pub fn chosen_sigma(&self) -> f64 {
        self.sigmas.get(self.arm).copied().unwrap_or(0.0)
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = k;
        }
    }
    best
}

/// Thompson sampling or an upper confidence bound on the same posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exploration {
    Thompson,
    Ucb,
}

pub trait Policy: Send {
    fn name(&self) -> &'static str;

    fn select(&self, contexts: &[Vec<f64>], rng: &mut BenchRng) -> Result<Decision>;

    fn observe(&mut self, context: &[f64], reward: f64) -> Result<()>;
}

fn check_contexts(contexts: &[Vec<f64>], dim: usize) -> Result<()> {
    if contexts.is_empty() {
        return Err(Error::Empty("arm contexts"));
    }
    for c in contexts {
        if c.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: c.len(),
            });
        }
    }
    Ok(())
}

fn check_reward(reward: f64) -> Result<()> {
    if reward.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("reward"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    NeuralTs,
    NeuralUcb,
    LinTs,
    LinUcb,
    KernelTs,
    KernelUcb,
    EpsGreedy,
    Bootstrap,
    /// Uniformly random arm; the regret reference point.
    Uniform,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::NeuralTs,
        Algorithm::NeuralUcb,
        Algorithm::LinTs,
        Algorithm::LinUcb,
        Algorithm::KernelTs,
        Algorithm::KernelUcb,
        Algorithm::EpsGreedy,
        Algorithm::Bootstrap,
        Algorithm::Uniform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::NeuralTs => "neural_ts",
            Algorithm::NeuralUcb => "neural_ucb",
            Algorithm::LinTs => "lin_ts",
            Algorithm::LinUcb => "lin_ucb",
            Algorithm::KernelTs => "kernel_ts",
            Algorithm::KernelUcb => "kernel_ucb",
            Algorithm::EpsGreedy => "eps_greedy",
            Algorithm::Bootstrap => "bootstrap",
            Algorithm::Uniform => "uniform",
        }
    }

    /// Whether the algorithm trains a network (and so benefits from the
    /// duplicated-half context transform).
    pub fn is_neural(self) -> bool {
        matches!(
            self,
            Algorithm::NeuralTs | Algorithm::NeuralUcb | Algorithm::EpsGreedy | Algorithm::Bootstrap
        )
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace(['-', ' '], "_");
        let alias = match norm.as_str() {
            "neuralts" | "neural_ts" => Algorithm::NeuralTs,
            "neuralucb" | "neural_ucb" => Algorithm::NeuralUcb,
            "lints" | "lin_ts" | "linear_ts" => Algorithm::LinTs,
            "linucb" | "lin_ucb" | "linear_ucb" => Algorithm::LinUcb,
            "kernelts" | "kernel_ts" => Algorithm::KernelTs,
            "kernelucb" | "kernel_ucb" => Algorithm::KernelUcb,
            "epsgreedy" | "eps_greedy" | "epsilon_greedy" => Algorithm::EpsGreedy,
            "bootstrap" | "bootstrapnn" | "bootstrap_nn" => Algorithm::Bootstrap,
            "uniform" | "random" => Algorithm::Uniform,
            _ => {
                return Err(Error::InvalidConfig(format!("unknown algorithm {s:?}")));
            }
        };
        Ok(alias)
    }
}

/// Everything needed to construct any of the policies.
///
/// `nu` is the single exploration scalar: posterior scale for the Thompson
/// variants and confidence width for the UCB variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub algorithm: Algorithm,
    pub nu: f64,
    pub lambda: f64,
    pub width: usize,
    pub depth: usize,
    pub train: TrainConfig,
    pub posterior: PosteriorMode,
    /// Training (and kernel-matrix growth) stops after this many observations.
    pub stop_train: Option<usize>,
    /// Warm-start each round's training from the previous parameters instead
    /// of from the initialisation.
    pub warm_start: bool,
    pub epsilon: f64,
    pub bootstrap_networks: usize,
    pub bootstrap_inclusion: f64,
    /// RBF bandwidth `γ` in `exp(−γ‖x−y‖²)`.
    pub gamma: f64,
}

impl PolicyConfig {
    /// Defaults matching the published experiment setup: one hidden layer of
    /// 100 units, 100 gradient steps at rate 0.001, training stopped after
    /// round 1000, diagonal posterior.
    pub fn new(algorithm: Algorithm) -> Self {
        let lambda = 1.0;
        Self {
            algorithm,
            nu: 0.1,
            lambda,
            width: 100,
            depth: 2,
            train: TrainConfig {
                step_size: 1e-3,
                iterations: 100,
                lambda,
                mode: TrainMode::FullBatch,
            },
            posterior: PosteriorMode::Diagonal,
            stop_train: Some(1000),
            warm_start: true,
            epsilon: 0.05,
            bootstrap_networks: 10,
            bootstrap_inclusion: 0.8,
            gamma: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return bad(format!("nu must be non-negative, got {}", self.nu));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        if self.bootstrap_networks == 0 {
            return bad("bootstrap needs at least one network".into());
        }
        if !(0.0..=1.0).contains(&self.bootstrap_inclusion) {
            return bad(format!(
                "bootstrap inclusion probability must lie in [0, 1], got {}",
                self.bootstrap_inclusion
            ));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("kernel bandwidth must be positive, got {}", self.gamma));
        }
        if self.algorithm.is_neural() {
            NetShape::new(2, self.width, self.depth)?;
            self.train.validate(self.width as f64)?;
        }
        Ok(())
    }

    /// The train config with the regulariser tied to this config's `λ`.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lambda: self.lambda,
            ..self.train
        }
    }
}

/// Builds a fresh policy for `input_dim`-dimensional arm contexts.
pub fn build_policy(cfg: &PolicyConfig, input_dim: usize, seed: u64) -> Result<Box<dyn Policy>> {
    cfg.validate()?;
    let policy: Box<dyn Policy> = match cfg.algorithm {
        Algorithm::NeuralTs => Box::new(NeuralBandit::new(cfg, input_dim, seed, Exploration::Thompson)?),
        Algorithm::NeuralUcb => Box::new(NeuralBandit::new(cfg, input_dim, seed, Exploration::Ucb)?),
        Algorithm::EpsGreedy => Box::new(EpsilonGreedy::new(cfg, input_dim, seed)?),
        Algorithm::Bootstrap => Box::new(Bootstrap::new(cfg, input_dim, seed)?),
        Algorithm::LinTs => Box::new(LinearBandit::new(input_dim, cfg.lambda, cfg.nu, Exploration::Thompson)?),
        Algorithm::LinUcb => Box::new(LinearBandit::new(input_dim, cfg.lambda, cfg.nu, Exploration::Ucb)?),
        Algorithm::KernelTs => Box::new(KernelBandit::new(cfg, input_dim, Exploration::Thompson)?),
        Algorithm::KernelUcb => Box::new(KernelBandit::new(cfg, input_dim, Exploration::Ucb)?),
        Algorithm::Uniform => Box::new(UniformRandom),
    };
    Ok(policy)
}

/// Picks an arm uniformly at random.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformRandom;

impl Policy for UniformRandom {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn select(&self, contexts: &[Vec<f64>], rng: &mut BenchRng) -> Result<Decision> {
        use rand::Rng;
        if contexts.is_empty() {
            return Err(Error::Empty("arm contexts"));
        }
        let k = contexts.len();
        let arm = rng.random_range(0..k);
        let mut scores = vec![0.0; k];
        scores[arm] = 1.0;
        Ok(Decision {
            arm,
            scores,
            means: vec![0.0; k],
            sigmas: vec![0.0; k],
        })
    }

    fn observe(&mut self, _context: &[f64], reward: f64) -> Result<()> {
        check_reward(reward)
    }
}
