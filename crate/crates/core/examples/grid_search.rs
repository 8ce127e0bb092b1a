//! Grid search over (λ, ν) for LinUCB, with traces, summary and curves
//! written to `out/grid_search`.
//!
//! Run with `cargo run --release --example grid_search`.

use std::path::Path;

use banditbench::harness::{emit_outputs, run_grid, DatasetRef, ExperimentConfig, GridSpec, OutputOptions, SyntheticSpec};
use banditbench::policies::Algorithm;

fn main() -> banditbench::Result<()> {
    let mut spec = SyntheticSpec::new("linear".parse()?);
    spec.rounds = 1000;
    let mut cfg = ExperimentConfig::new(DatasetRef::Synthetic(spec), Algorithm::LinUcb);
    cfg.horizon = 1000;
    cfg.repeats = 4;
    cfg.grid = GridSpec {
        lambdas: vec![0.1, 1.0, 10.0],
        nus: vec![0.01, 0.1, 1.0],
        epsilons: vec![0.0],
    };

    let result = run_grid(&cfg, &cfg.dataset.load()?)?;
    println!("{:>4} {:>7} {:>6} {:>9} {:>7}", "cell", "lambda", "nu", "regret", "std");
    for c in &result.cells {
        let mark = if c.index == result.best { " *" } else { "" };
        println!(
            "{:>4} {:>7} {:>6} {:>9.2} {:>7.2}{mark}",
            c.index, c.cell.lambda, c.cell.nu, c.summary.mean, c.summary.std
        );
    }
    let out = Path::new("out/grid_search");
    emit_outputs(out, &[result], OutputOptions::default())?;
    println!("wrote {}", out.display());
    Ok(())
}
