mod common;

use banditbench::nn::{TrainConfig, TrainMode};
use banditbench::policies::{
    argmax, build_policy, Algorithm, Bootstrap, EpsilonGreedy, Exploration, LinearBandit, NeuralBandit, Policy,
    PolicyConfig,
};
use banditbench::posterior::PosteriorMode;
use banditbench::rng::{stream_rng, Stream};
use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF, Normal};

use common::{duplicated_unit, rng};

fn small_cfg(algorithm: Algorithm) -> PolicyConfig {
    let mut cfg = PolicyConfig::new(algorithm);
    cfg.width = 8;
    cfg.posterior = PosteriorMode::Full;
    cfg.train = TrainConfig {
        step_size: 0.01,
        iterations: 10,
        lambda: 1.0,
        mode: TrainMode::FullBatch,
    };
    cfg
}

fn round_contexts(k: usize, half: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..k).map(|_| duplicated_unit(half, &mut r)).collect()
}

/// `P(arm k wins)` when arm `j` scores `σ_j·Z_j` with independent `Z_j`:
/// `∫ φ(z) Π_{j≠k} Φ(σ_k z / σ_j) dz`, by the trapezoid rule on [−10, 10].
fn win_probabilities(sigmas: &[f64]) -> Vec<f64> {
    let std = Normal::standard();
    let n = 20_000;
    let h = 20.0 / n as f64;
    (0..sigmas.len())
        .map(|k| {
            (0..=n)
                .map(|i| {
                    let z = -10.0 + i as f64 * h;
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    let others: f64 = (0..sigmas.len())
                        .filter(|&j| j != k)
                        .map(|j| std.cdf(sigmas[k] * z / sigmas[j]))
                        .product();
                    w * h * std.pdf(z) * others
                })
                .sum()
        })
        .collect()
}

#[test]
fn fresh_neural_ts_selection_frequencies_match_the_posterior() {
    // At θ₀ the network outputs 0 on duplicated inputs, so each score is a
    // centred Gaussian with standard deviation ν·σ_k.
    let mut cfg = small_cfg(Algorithm::NeuralTs);
    cfg.nu = 1.0;
    cfg.width = 32;
    let policy = NeuralBandit::new(&cfg, 6, 7, Exploration::Thompson).unwrap();
    let ctx = round_contexts(4, 3, 11);
    let mut select_rng = stream_rng(7, Stream::Select, 0);
    let first = policy.select(&ctx, &mut select_rng).unwrap();
    assert!(first.means.iter().all(|m| m.abs() < 1e-9));
    assert!(first.sigmas.iter().all(|&s| s > 0.0));
    let expected = win_probabilities(&first.sigmas);
    assert!((expected.iter().sum::<f64>() - 1.0).abs() < 1e-6);

    let draws = 10_000;
    let mut counts = vec![0usize; ctx.len()];
    for _ in 0..draws {
        counts[policy.select(&ctx, &mut select_rng).unwrap().arm] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&expected)
        .map(|(&c, &p)| {
            let e = p * draws as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new((ctx.len() - 1) as f64).unwrap().cdf(chi2);
    assert!(p_value > 0.01, "chi2 {chi2}, p {p_value}, counts {counts:?}, expected {expected:?}");
}

#[test]
fn argmax_examples() {
    assert_eq!(argmax(&[0.1, 0.9, 0.3]), 1);
    assert_eq!(argmax(&[2.0, 2.0]), 0);
    assert_eq!(argmax(&[-1.0]), 0);
}

#[test]
fn zero_nu_makes_thompson_and_ucb_identical() {
    let ctx_seq: Vec<Vec<Vec<f64>>> = (0..20).map(|t| round_contexts(3, 3, 100 + t)).collect();
    let mut cfg = small_cfg(Algorithm::NeuralTs);
    cfg.nu = 0.0;
    let neural: [Box<dyn Policy>; 2] = [
        Box::new(NeuralBandit::new(&cfg, 6, 1, Exploration::Thompson).unwrap()),
        Box::new(NeuralBandit::new(&cfg, 6, 1, Exploration::Ucb).unwrap()),
    ];
    let linear: [Box<dyn Policy>; 2] = [
        Box::new(LinearBandit::new(6, 1.0, 0.0, Exploration::Thompson).unwrap()),
        Box::new(LinearBandit::new(6, 1.0, 0.0, Exploration::Ucb).unwrap()),
    ];
    for [mut ts, mut ucb] in [neural, linear] {
        let mut r_ts = rng(5);
        let mut r_ucb = rng(6);
        for (t, ctx) in ctx_seq.iter().enumerate() {
            let a = ts.select(ctx, &mut r_ts).unwrap();
            let b = ucb.select(ctx, &mut r_ucb).unwrap();
            assert_eq!(a.arm, b.arm, "round {t}");
            assert_eq!(a.scores, b.scores);
            let reward = ctx[a.arm][0];
            ts.observe(&ctx[a.arm], reward).unwrap();
            ucb.observe(&ctx[b.arm], reward).unwrap();
        }
    }
}

fn epsilon_counts(epsilon: f64, k: usize, draws: usize) -> Vec<usize> {
    let mut cfg = small_cfg(Algorithm::EpsGreedy);
    cfg.epsilon = epsilon;
    let policy = EpsilonGreedy::new(&cfg, 6, 3).unwrap();
    let ctx = round_contexts(k, 3, 12);
    let greedy = argmax(&ctx.iter().map(|x| policy.network().predict(x).unwrap()).collect::<Vec<_>>());
    let mut r = rng(13);
    let mut counts = vec![0usize; k];
    for _ in 0..draws {
        counts[policy.select(&ctx, &mut r).unwrap().arm] += 1;
    }
    // Put the greedy arm first.
    counts.swap(0, greedy);
    counts
}

#[test]
fn epsilon_one_is_uniform() {
    let (k, draws) = (5, 20_000);
    let counts = epsilon_counts(1.0, k, draws);
    let chi2: f64 = counts
        .iter()
        .map(|&c| {
            let e = draws as f64 / k as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new((k - 1) as f64).unwrap().cdf(chi2);
    assert!(p_value > 0.01, "{counts:?}");
}

#[test]
fn epsilon_tenth_explores_at_the_right_rate() {
    // The greedy arm is played with probability 1 − ε + ε/K = 0.91.
    let (k, draws) = (10, 20_000);
    let counts = epsilon_counts(0.1, k, draws);
    let p = 0.91;
    let mean = p * draws as f64;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    assert!((counts[0] as f64 - mean).abs() < 4.0 * sd, "{counts:?}");
}

#[test]
fn single_full_bootstrap_equals_greedy_network() {
    let mut b_cfg = small_cfg(Algorithm::Bootstrap);
    b_cfg.bootstrap_networks = 1;
    b_cfg.bootstrap_inclusion = 1.0;
    let mut e_cfg = small_cfg(Algorithm::EpsGreedy);
    e_cfg.epsilon = 0.0;
    let mut boot = Bootstrap::new(&b_cfg, 6, 21).unwrap();
    let mut greedy = EpsilonGreedy::new(&e_cfg, 6, 21).unwrap();
    for t in 0..15 {
        let ctx = round_contexts(3, 3, 200 + t);
        let a = boot.select(&ctx, &mut rng(t)).unwrap();
        let b = greedy.select(&ctx, &mut rng(t)).unwrap();
        assert_eq!(a.arm, b.arm);
        assert_eq!(a.means, b.means);
        boot.observe(&ctx[a.arm], ctx[a.arm][1]).unwrap();
        greedy.observe(&ctx[b.arm], ctx[b.arm][1]).unwrap();
    }
    assert_eq!(boot.networks()[0].theta(), greedy.network().theta());
}

#[test]
fn bootstrap_inclusion_frequency_matches_q() {
    let mut cfg = small_cfg(Algorithm::Bootstrap);
    cfg.bootstrap_networks = 10;
    cfg.bootstrap_inclusion = 0.3;
    cfg.stop_train = Some(0);
    let mut boot = Bootstrap::new(&cfg, 6, 4).unwrap();
    let n = 500;
    let ctx = round_contexts(1, 3, 9);
    for _ in 0..n {
        boot.observe(&ctx[0], 0.0).unwrap();
    }
    let included: usize = boot.networks().iter().map(|net| net.training_size()).sum();
    let trials = (n * cfg.bootstrap_networks) as f64;
    let sd = (trials * 0.3 * 0.7).sqrt();
    assert!((included as f64 - 0.3 * trials).abs() < 4.0 * sd, "{included}");
}

#[test]
fn every_algorithm_is_seed_reproducible() {
    let ctx_seq: Vec<Vec<Vec<f64>>> = (0..8).map(|t| round_contexts(3, 3, 300 + t)).collect();
    for algo in Algorithm::ALL {
        let mut cfg = small_cfg(algo);
        cfg.bootstrap_networks = 3;
        let run = || {
            let mut policy = build_policy(&cfg, 6, 42).unwrap();
            let mut r = stream_rng(42, Stream::Select, 0);
            ctx_seq
                .iter()
                .map(|ctx| {
                    let d = policy.select(ctx, &mut r).unwrap();
                    policy.observe(&ctx[d.arm], ctx[d.arm][2]).unwrap();
                    d
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run(), "{algo}");
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let mut cfg = small_cfg(Algorithm::NeuralTs);
    let mut policy = build_policy(&cfg, 6, 0).unwrap();
    assert!(policy.select(&[], &mut rng(0)).is_err());
    assert!(policy.select(&[vec![0.0; 5]], &mut rng(0)).is_err());
    assert!(policy.observe(&[0.0; 6], f64::NAN).is_err());
    cfg.lambda = 0.0;
    assert!(build_policy(&cfg, 6, 0).is_err());
    cfg.lambda = 1.0;
    cfg.train.step_size = 1.0;
    cfg.width = 100;
    assert!(build_policy(&cfg, 6, 0).is_err(), "η·m·λ ≥ 1 must be rejected");
}
