//! NeuralUCB when rewards arrive in batches of `b` rounds.
//!
//! Run with `cargo run --release --example delayed_feedback`.

use banditbench::harness::{run_grid, DatasetRef, ExperimentConfig, SyntheticReward, SyntheticSpec};
use banditbench::policies::Algorithm;

fn main() -> banditbench::Result<()> {
    let mut spec = SyntheticSpec::new(SyntheticReward::Cosine);
    spec.rounds = 800;

    println!("{:>6} {:>10} {:>8}", "delay", "regret", "stderr");
    for delay in [0usize, 8, 32, 128] {
        let mut cfg = ExperimentConfig::new(DatasetRef::Synthetic(spec), Algorithm::NeuralUcb);
        cfg.horizon = 800;
        cfg.repeats = 4;
        cfg.delay = delay;
        for (k, v) in [
            ("width", "32"),
            ("iters", "50"),
            ("lr", "0.01"),
            ("batch", "16"),
            ("lambda", "0.001"),
            ("stop-train", "none"),
        ] {
            cfg.set(k, v)?;
        }
        let result = run_grid(&cfg, &cfg.dataset.load()?)?;
        let s = &result.best_cell().summary;
        println!("{:>6} {:>10.1} {:>8.1}", delay, s.mean, s.stderr);
    }
    Ok(())
}
