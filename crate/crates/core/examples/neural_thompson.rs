//! Neural Thompson Sampling on a synthetic problem with a nonlinear reward.
//!
//! Run with `cargo run --release --example neural_thompson`.

use banditbench::harness::{run_policy, Environment, SyntheticEnv, SyntheticReward, SyntheticSpec, TraceMeta};
use banditbench::nn::TrainMode;
use banditbench::policies::{build_policy, Algorithm, PolicyConfig};

fn main() -> banditbench::Result<()> {
    let horizon = 1000;
    let seed = 7;
    let mut spec = SyntheticSpec::new(SyntheticReward::Cosine);
    spec.rounds = horizon;
    // The network sees duplicated-half contexts, so f(x; θ₀) = 0 on every arm.
    let env = SyntheticEnv::new(spec, seed, true)?;

    let mut cfg = PolicyConfig::new(Algorithm::NeuralTs);
    cfg.width = 32;
    cfg.lambda = 1e-3;
    cfg.train.step_size = 0.01;
    cfg.train.iterations = 50;
    cfg.train.mode = TrainMode::MiniBatch { batch_size: 16 };
    cfg.stop_train = None;
    let mut policy = build_policy(&cfg, env.context_dim(), seed)?;

    let meta = TraceMeta {
        algorithm: cfg.algorithm,
        repeat: 0,
        seed,
        delay: 0,
        cell: 0,
        lambda: cfg.lambda,
        nu: cfg.nu,
        epsilon: 0.0,
    };
    let trace = run_policy(policy.as_mut(), &env, horizon, 0, meta, &mut |ev| {
        if ev.t % 200 == 0 {
            eprintln!("round {}", ev.t);
        }
    })?;

    println!("{:>6} {:>12} {:>10}", "t", "regret", "sigma");
    for r in trace.records.iter().filter(|r| r.t % 100 == 0) {
        println!("{:>6} {:>12.2} {:>10.4}", r.t, r.cumulative_regret, r.sigma);
    }
    Ok(())
}
