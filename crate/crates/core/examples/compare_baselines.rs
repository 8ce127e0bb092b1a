//! Every algorithm on the same paired repeats of a synthetic problem.
//!
//! Run with `cargo run --release --example compare_baselines [linear|quadratic|cosine]`.

use banditbench::harness::{run_grid, DatasetRef, ExperimentConfig, SyntheticReward, SyntheticSpec};
use banditbench::policies::Algorithm;

fn main() -> banditbench::Result<()> {
    let reward = std::env::args().nth(1).unwrap_or_else(|| "cosine".into()).parse()?;
    // Quadratic rewards reach 10, so the networks need a smaller step.
    let lr = if reward == SyntheticReward::Quadratic { "0.001" } else { "0.01" };
    let mut spec = SyntheticSpec::new(reward);
    spec.rounds = 500;

    println!("{:<12} {:>10} {:>8}", "algorithm", "regret", "stderr");
    for algo in Algorithm::ALL {
        let mut cfg = ExperimentConfig::new(DatasetRef::Synthetic(spec), algo);
        cfg.horizon = 500;
        cfg.repeats = 4;
        for (k, v) in [
            ("width", "32"),
            ("iters", "30"),
            ("lr", lr),
            ("batch", "16"),
            ("lambda", "0.01"),
        ] {
            cfg.set(k, v)?;
        }
        if algo == Algorithm::Bootstrap {
            cfg.set("bootstrap-networks", "4")?;
        }
        let source = cfg.dataset.load()?;
        let result = run_grid(&cfg, &source)?;
        let s = &result.best_cell().summary;
        println!("{:<12} {:>10.1} {:>8.1}", algo, s.mean, s.stderr);
    }
    Ok(())
}
