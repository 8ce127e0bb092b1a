use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_contexts, check_reward, Decision, Exploration, Policy};
use crate::posterior::{DesignMatrix, PosteriorMode};
use crate::rng::BenchRng;
use crate::Result;

/// Ridge-regression bandit shared by all arms: `A = λI + Σ x xᵀ`, `b = Σ r x`,
/// `μ = A⁻¹ b`.
///
/// LinTS samples `N(xᵀμ, ν² xᵀA⁻¹x)`; LinUCB scores `xᵀμ + ν √(xᵀA⁻¹x)`.
#[derive(Debug, Clone)]
pub struct LinearBandit {
    gram: DesignMatrix,
    b: Vec<f64>,
    mu: Vec<f64>,
    nu: f64,
    exploration: Exploration,
}

impl LinearBandit {
    pub fn new(dim: usize, lambda: f64, nu: f64, exploration: Exploration) -> Result<Self> {
        Ok(Self {
            gram: DesignMatrix::new(PosteriorMode::Full, dim, lambda, 1.0)?,
            b: vec![0.0; dim],
            mu: vec![0.0; dim],
            nu,
            exploration,
        })
    }

    /// Current ridge estimate `A⁻¹ b`.
    pub fn mean_vector(&self) -> &[f64] {
        &self.mu
    }

    /// `xᵀ A⁻¹ x`.
    pub fn variance(&self, x: &[f64]) -> Result<f64> {
        self.gram.quad_form(x)
    }
}

impl Policy for LinearBandit {
    fn name(&self) -> &'static str {
        match self.exploration {
            Exploration::Thompson => "lin_ts",
            Exploration::Ucb => "lin_ucb",
        }
    }

    fn select(&self, contexts: &[Vec<f64>], rng: &mut BenchRng) -> Result<Decision> {
        check_contexts(contexts, self.b.len())?;
        let k = contexts.len();
        let (mut scores, mut means, mut sigmas) = (Vec::with_capacity(k), Vec::with_capacity(k), Vec::with_capacity(k));
        for x in contexts {
            let mean = crate::linalg::dot(x, &self.mu);
            let sigma = self.gram.quad_form(x)?.max(0.0).sqrt();
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
        self.gram.update(context)?;
        for (bi, xi) in self.b.iter_mut().zip(context) {
            *bi += reward * xi;
        }
        let inv = self.gram.inverse().expect("full-mode design matrix");
        let bv = nalgebra::DVector::from_column_slice(&self.b);
        self.mu = (inv * bv).iter().copied().collect();
        Ok(())
    }
}
