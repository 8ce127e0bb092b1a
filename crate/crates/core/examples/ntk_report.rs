//! Kernel diagnostics for a synthetic context set: spectrum, effective
//! dimension, the reward-norm bound `B` and the theoretical exploration scale.
//!
//! Run with `cargo run --release --example ntk_report`.

use banditbench::harness::{ntk_report, DataSource, NtkReportConfig, SyntheticReward, SyntheticSpec};
use banditbench::ntk::{ntk_matrix, theory_b};

fn main() -> banditbench::Result<()> {
    // Two orthogonal unit contexts: the off-diagonal entry is 1/π at depth 2.
    let k = ntk_matrix(&[vec![1.0, 0.0], vec![0.0, 1.0]], 2)?;
    println!("H = {:.5}", k.h);
    println!("B(h = e₁) = {:.5}", theory_b(&[1.0, 0.0], &k.h)?);

    let mut spec = SyntheticSpec::new(SyntheticReward::Cosine);
    spec.rounds = 50;
    let cfg = NtkReportConfig {
        rounds: 50,
        ..NtkReportConfig::default()
    };
    let report = ntk_report(&DataSource::Synthetic(spec), &cfg)?;
    println!(
        "{} contexts: d̃ = {:.3}, λ₀ = {:.2e}, B = {:?}, ν = {:?}",
        report.contexts,
        report.effective_dimension.effective_dimension,
        report.lambda0,
        report.b,
        report.nu_theory
    );
    println!(
        "width check (C = 1): lower bound {}, log bound {}",
        report.width.lower_bound.satisfied, report.width.log_bound.satisfied
    );
    Ok(())
}
