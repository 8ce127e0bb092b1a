use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_contexts, check_reward, Decision, Exploration, Policy, PolicyConfig};
use crate::rng::BenchRng;
use crate::{Error, Result};

/// `exp(−γ‖x − y‖²)`.
pub fn rbf(gamma: f64, x: &[f64], y: &[f64]) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

/// Kernel ridge / GP-style bandit with an RBF kernel.
///
/// Posterior mean `kᵀ(K + λI)⁻¹ r` and variance `k(x,x) − kᵀ(K + λI)⁻¹k`.
/// `(K + λI)⁻¹` is grown one row at a time by block inversion, and frozen once
/// `stop_train` observations have been absorbed.
#[derive(Debug, Clone)]
pub struct KernelBandit {
    dim: usize,
    gamma: f64,
    lambda: f64,
    nu: f64,
    exploration: Exploration,
    stop_train: Option<usize>,
    points: Vec<Vec<f64>>,
    rewards: Vec<f64>,
    /// Row-major `n × n` inverse of `K + λI`.
    inverse: Vec<f64>,
    /// `(K + λI)⁻¹ r`.
    alpha: Vec<f64>,
}

impl KernelBandit {
    pub fn new(cfg: &PolicyConfig, dim: usize, exploration: Exploration) -> Result<Self> {
        if !(cfg.lambda > 0.0) {
            return Err(Error::InvalidConfig("kernel lambda must be positive".into()));
        }
        Ok(Self {
            dim,
            gamma: cfg.gamma,
            lambda: cfg.lambda,
            nu: cfg.nu,
            exploration,
            stop_train: cfg.stop_train,
            points: Vec::new(),
            rewards: Vec::new(),
            inverse: Vec::new(),
            alpha: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn kernel_row(&self, x: &[f64]) -> Vec<f64> {
        self.points.iter().map(|p| rbf(self.gamma, p, x)).collect()
    }

    /// Posterior `(mean, variance)` at `x`.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        let kx = self.kernel_row(x);
        let n = kx.len();
        let mean: f64 = kx.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let mut quad = 0.0;
        for i in 0..n {
            if kx[i] == 0.0 {
                continue;
            }
            let row = &self.inverse[i * n..(i + 1) * n];
            let s: f64 = row.iter().zip(&kx).map(|(a, b)| a * b).sum();
            quad += kx[i] * s;
        }
        let var = (rbf(self.gamma, x, x) - quad).max(0.0);
        (mean, var)
    }

    fn push(&mut self, x: &[f64], reward: f64) {
        let b = self.kernel_row(x);
        let n = b.len();
        let c = rbf(self.gamma, x, x) + self.lambda;
        // u = M b, s = c − bᵀ M b (Schur complement, ≥ λ > 0 in exact arithmetic).
        let u: Vec<f64> = (0..n)
            .map(|i| {
                self.inverse[i * n..(i + 1) * n]
                    .iter()
                    .zip(&b)
                    .map(|(a, v)| a * v)
                    .sum()
            })
            .collect();
        let s = (c - b.iter().zip(&u).map(|(a, v)| a * v).sum::<f64>()).max(self.lambda * 1e-12);
        let mut next = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                next[i * (n + 1) + j] = self.inverse[i * n + j] + u[i] * u[j] / s;
            }
            next[i * (n + 1) + n] = -u[i] / s;
            next[n * (n + 1) + i] = -u[i] / s;
        }
        next[n * (n + 1) + n] = 1.0 / s;
        self.inverse = next;
        self.points.push(x.to_vec());
        self.rewards.push(reward);
        let m = n + 1;
        self.alpha = (0..m)
            .map(|i| {
                self.inverse[i * m..(i + 1) * m]
                    .iter()
                    .zip(&self.rewards)
                    .map(|(a, r)| a * r)
                    .sum()
            })
            .collect();
    }
}

impl Policy for KernelBandit {
    fn name(&self) -> &'static str {
        match self.exploration {
            Exploration::Thompson => "kernel_ts",
            Exploration::Ucb => "kernel_ucb",
        }
    }

    fn select(&self, contexts: &[Vec<f64>], rng: &mut BenchRng) -> Result<Decision> {
        check_contexts(contexts, self.dim)?;
        let k = contexts.len();
        let (mut scores, mut means, mut sigmas) = (Vec::with_capacity(k), Vec::with_capacity(k), Vec::with_capacity(k));
        for x in contexts {
            let (mean, var) = self.posterior(x);
            let sigma = var.sqrt();
            let score = match self.exploration {
                Exploration::Thompson => {
                    let z: f64 = rng.sample(StandardNormal);
                    mean + self.nu * sigma * z
                }
                Exploration::Ucb => mean + self.nu * sigma,
            };
            scores.push(score);
            means.push(mean);
            sigmas.push(sigma);
        }
        Ok(Decision::from_scores(scores, means, sigmas))
    }

    fn observe(&mut self, context: &[f64], reward: f64) -> Result<()> {
        check_reward(reward)?;
        if context.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: context.len(),
            });
        }
        if self.stop_train.is_some_and(|t0| self.points.len() >= t0) {
            return Ok(());
        }
        self.push(context, reward);
        Ok(())
    }
}
