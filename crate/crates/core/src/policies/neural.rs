use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_contexts, check_reward, Decision, Exploration, Policy, PolicyConfig};
use crate::nn::{self, init_params_with, value_and_grad, NetShape, Params, TrainConfig};
use crate::posterior::DesignMatrix;
use crate::rng::{stream_rng, BenchRng, Stream};
use crate::Result;

/// A network fitted online to the rewards it has observed.
///
/// The regulariser anchor `θ₀` never moves; each observation appends to the
/// history and, until `stop_train` observations have been seen, re-runs
/// gradient descent starting from the current `θ` (or from `θ₀` when warm
/// starts are disabled).
#[derive(Debug, Clone)]
pub struct NetworkRegressor {
    shape: NetShape,
    theta0: Params,
    theta: Params,
    history: Vec<(Vec<f64>, f64)>,
    /// Indices into `history` this network trains on.
    subset: Vec<usize>,
    train: TrainConfig,
    warm_start: bool,
    stop_train: Option<usize>,
    observed: usize,
    train_rng: BenchRng,
}

impl NetworkRegressor {
    pub fn new(cfg: &PolicyConfig, input_dim: usize, seed: u64, member: u32) -> Result<Self> {
        let shape = NetShape::new(input_dim, cfg.width, cfg.depth)?;
        let theta0 = init_params_with(shape, &mut stream_rng(seed, Stream::Init, member));
        Ok(Self {
            shape,
            theta: theta0.clone(),
            theta0,
            history: Vec::new(),
            subset: Vec::new(),
            train: cfg.train_config(),
            warm_start: cfg.warm_start,
            stop_train: cfg.stop_train,
            observed: 0,
            train_rng: stream_rng(seed, Stream::Train, member),
        })
    }

    pub fn shape(&self) -> NetShape {
        self.shape
    }

    pub fn theta(&self) -> &Params {
        &self.theta
    }

    pub fn theta0(&self) -> &Params {
        &self.theta0
    }

    /// Number of observations offered so far (included or not).
    pub fn observed(&self) -> usize {
        self.observed
    }

    /// Number of observations this network trains on.
    pub fn training_size(&self) -> usize {
        self.subset.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        nn::forward(&self.theta, x)
    }

    fn training_open(&self) -> bool {
        self.stop_train.is_none_or(|t0| self.observed <= t0)
    }

    /// Records an observation; `include` decides whether it joins this
    /// network's training set. Returns whether training ran.
    pub fn observe(&mut self, x: &[f64], reward: f64, include: bool) -> Result<bool> {
        check_reward(reward)?;
        if x.len() != self.shape.input_dim() {
            return Err(crate::Error::DimensionMismatch {
                expected: self.shape.input_dim(),
                actual: x.len(),
            });
        }
        self.observed += 1;
        if include {
            self.subset.push(self.history.len());
            self.history.push((x.to_vec(), reward));
        }
        // TODO: store disjoint-encoded history sparsely; dense rows dominate
        // memory on wide multi-class inputs such as MNIST.
        if !include || !self.training_open() {
            return Ok(false);
        }
        let start = if self.warm_start {
            self.theta.as_slice()
        } else {
            self.theta0.as_slice()
        };
        let theta = nn::train_subset(
            &self.shape,
            self.theta0.as_slice(),
            start,
            &self.history,
            &self.subset,
            &self.train,
            &mut self.train_rng,
        )?;
        self.theta = Params::from_flat(self.shape, theta)?;
        Ok(true)
    }
}

/// NeuralTS and NeuralUCB.
///
/// Both score arm `k` from the network output `f(x_k; θ)` and the posterior
/// width `σ_k = √(λ gᵀU⁻¹g/m)` with `g = ∂f/∂θ`: Thompson sampling draws from
/// `N(f, ν²σ²)`, UCB adds `ν·σ`. After each observation the network is
/// retrained and `U` absorbs the chosen arm's gradient at the new parameters.
#[derive(Debug, Clone)]
pub struct NeuralBandit {
    net: NetworkRegressor,
    design: DesignMatrix,
    nu: f64,
    exploration: Exploration,
}

impl NeuralBandit {
    pub fn new(cfg: &PolicyConfig, input_dim: usize, seed: u64, exploration: Exploration) -> Result<Self> {
        let net = NetworkRegressor::new(cfg, input_dim, seed, 0)?;
        let design = DesignMatrix::new(
            cfg.posterior,
            net.shape().num_params(),
            cfg.lambda,
            cfg.width as f64,
        )?;
        Ok(Self {
            net,
            design,
            nu: cfg.nu,
            exploration,
        })
    }

    pub fn network(&self) -> &NetworkRegressor {
        &self.net
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }
}

impl Policy for NeuralBandit {
    fn name(&self) -> &'static str {
        match self.exploration {
            Exploration::Thompson => "neural_ts",
            Exploration::Ucb => "neural_ucb",
        }
    }

    fn select(&self, contexts: &[Vec<f64>], rng: &mut BenchRng) -> Result<Decision> {
        check_contexts(contexts, self.net.shape().input_dim())?;
        let k = contexts.len();
        let mut means = Vec::with_capacity(k);
        let mut sigmas = Vec::with_capacity(k);
        let mut scores = Vec::with_capacity(k);
        for x in contexts {
            let (mean, g) = value_and_grad(self.net.theta(), x)?;
            let sigma = self.design.sigma(g.as_slice())?.get();
            let score = match self.exploration {
                Exploration::Thompson => {
                    let z: f64 = rng.sample(StandardNormal);
                    mean + self.nu * sigma * z
                }
                Exploration::Ucb => mean + self.nu * sigma,
            };
            means.push(mean);
            sigmas.push(sigma);
            scores.push(score);
        }
        Ok(Decision::from_scores(scores, means, sigmas))
    }

    fn observe(&mut self, context: &[f64], reward: f64) -> Result<()> {
        self.net.observe(context, reward, true)?;
        let g = nn::grad(self.net.theta(), context)?;
        self.design.update(g.as_slice())?;
        Ok(())
    }
}

/// ε-greedy on a single network.
#[derive(Debug, Clone)]
pub struct EpsilonGreedy {
    net: NetworkRegressor,
    epsilon: f64,
}

impl EpsilonGreedy {
    pub fn new(cfg: &PolicyConfig, input_dim: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            net: NetworkRegressor::new(cfg, input_dim, seed, 0)?,
            epsilon: cfg.epsilon,
        })
    }

    pub fn network(&self) -> &NetworkRegressor {
        &self.net
    }
}

impl Policy for EpsilonGreedy {
    fn name(&self) -> &'static str {
        "eps_greedy"
    }

    fn select(&self, contexts: &[Vec<f64>], rng: &mut BenchRng) -> Result<Decision> {
        check_contexts(contexts, self.net.shape().input_dim())?;
        let means = contexts
            .iter()
            .map(|x| self.net.predict(x))
            .collect::<Result<Vec<_>>>()?;
        let sigmas = vec![0.0; contexts.len()];
        let explore = rng.random::<f64>() < self.epsilon;
        if explore {
            let arm = rng.random_range(0..contexts.len());
            let mut scores = vec![0.0; contexts.len()];
            scores[arm] = 1.0;
            return Ok(Decision {
                arm,
                scores,
                means,
                sigmas,
            });
        }
        Ok(Decision::from_scores(means.clone(), means, sigmas))
    }

    fn observe(&mut self, context: &[f64], reward: f64) -> Result<()> {
        self.net.observe(context, reward, true)?;
        Ok(())
    }
}

/// Ensemble of independently initialised networks, each trained on its own
/// random subsample of the history; every round one member is picked uniformly
/// and its greedy arm is played.
#[derive(Debug, Clone)]
pub struct Bootstrap {
    nets: Vec<NetworkRegressor>,
    inclusion: f64,
    inclusion_rng: BenchRng,
}

impl Bootstrap {
    pub fn new(cfg: &PolicyConfig, input_dim: usize, seed: u64) -> Result<Self> {
        let nets = (0..cfg.bootstrap_networks as u32)
            .map(|j| NetworkRegressor::new(cfg, input_dim, seed, j))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            nets,
            inclusion: cfg.bootstrap_inclusion,
            inclusion_rng: stream_rng(seed, Stream::Bootstrap, 0),
        })
    }

    pub fn networks(&self) -> &[NetworkRegressor] {
        &self.nets
    }
}

impl Policy for Bootstrap {
    fn name(&self) -> &'static str {
        "bootstrap"
    }

    fn select(&self, contexts: &[Vec<f64>], rng: &mut BenchRng) -> Result<Decision> {
        check_contexts(contexts, self.nets[0].shape().input_dim())?;
        let member = rng.random_range(0..self.nets.len());
        let net = &self.nets[member];
        let means = contexts
            .iter()
            .map(|x| net.predict(x))
            .collect::<Result<Vec<_>>>()?;
        let sigmas = vec![0.0; contexts.len()];
        Ok(Decision::from_scores(means.clone(), means, sigmas))
    }

    fn observe(&mut self, context: &[f64], reward: f64) -> Result<()> {
        for net in &mut self.nets {
            let include = self.inclusion_rng.random::<f64>() < self.inclusion;
            net.observe(context, reward, include)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::TrainMode;
    use crate::policies::{Algorithm, PolicyConfig};
    use crate::posterior::PosteriorMode;

    fn small_cfg(algorithm: Algorithm) -> PolicyConfig {
        let mut cfg = PolicyConfig::new(algorithm);
        cfg.width = 8;
        cfg.posterior = PosteriorMode::Full;
        cfg.train = TrainConfig {
            step_size: 0.01,
            iterations: 20,
            lambda: 1.0,
            mode: TrainMode::FullBatch,
        };
        cfg
    }

    fn dup(x: &[f64]) -> Vec<f64> {
        let n = crate::linalg::norm(x) * 2f64.sqrt();
        x.iter().chain(x).map(|v| v / n).collect()
    }

    #[test]
    fn nu_zero_is_greedy() {
        let mut cfg = small_cfg(Algorithm::NeuralTs);
        cfg.nu = 0.0;
        let mut ts = NeuralBandit::new(&cfg, 4, 3, Exploration::Thompson).unwrap();
        ts.observe(&dup(&[1.0, 0.5]), 1.0).unwrap();
        let ctx = vec![dup(&[1.0, 0.2]), dup(&[-0.3, 1.0]), dup(&[0.4, 0.4])];
        let mut rng = stream_rng(1, Stream::Select, 0);
        let d = ts.select(&ctx, &mut rng).unwrap();
        assert_eq!(d.scores, d.means);
    }

    #[test]
    fn stop_at_zero_never_trains_but_accumulates() {
        let mut cfg = small_cfg(Algorithm::NeuralTs);
        cfg.stop_train = Some(0);
        let mut ts = NeuralBandit::new(&cfg, 4, 9, Exploration::Thompson).unwrap();
        let theta0 = ts.network().theta0().clone();
        let before = ts.design().log_det();
        for i in 0..5 {
            ts.observe(&dup(&[1.0, i as f64]), 1.0).unwrap();
        }
        assert_eq!(ts.network().theta(), &theta0);
        assert!(ts.design().log_det() > before);
        assert_eq!(ts.design().updates(), 5);
    }

    #[test]
    fn repeated_observation_is_not_deduplicated() {
        let cfg = small_cfg(Algorithm::NeuralUcb);
        let x = dup(&[0.3, 0.7]);
        let mut once = NeuralBandit::new(&cfg, 4, 2, Exploration::Ucb).unwrap();
        let mut twice = once.clone();
        once.observe(&x, 0.5).unwrap();
        twice.observe(&x, 0.5).unwrap();
        twice.observe(&x, 0.5).unwrap();
        assert!(twice.design().log_det() > once.design().log_det());
    }

    #[test]
    fn zero_inclusion_never_trains() {
        let mut cfg = small_cfg(Algorithm::Bootstrap);
        cfg.bootstrap_networks = 3;
        cfg.bootstrap_inclusion = 0.0;
        let mut b = Bootstrap::new(&cfg, 4, 5).unwrap();
        let init: Vec<_> = b.networks().iter().map(|n| n.theta().clone()).collect();
        for i in 0..10 {
            b.observe(&dup(&[i as f64, 1.0]), 1.0).unwrap();
        }
        for (net, t0) in b.networks().iter().zip(&init) {
            assert_eq!(net.theta(), t0);
            assert_eq!(net.training_size(), 0);
            assert_eq!(net.observed(), 10);
        }
    }

    #[test]
    fn bootstrap_members_differ() {
        let mut cfg = small_cfg(Algorithm::Bootstrap);
        cfg.bootstrap_networks = 2;
        let b = Bootstrap::new(&cfg, 4, 5).unwrap();
        assert_ne!(b.networks()[0].theta0(), b.networks()[1].theta0());
    }
}
