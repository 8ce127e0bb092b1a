//! How the posterior width of a fixed probe shrinks as gradient features are
//! absorbed, for the full and the diagonal design matrix.
//!
//! Run with `cargo run --release --example posterior_shrinkage`.

use banditbench::posterior::{DesignMatrix, PosteriorMode};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

fn main() -> banditbench::Result<()> {
    let (dim, lambda, width) = (64, 1.0, 16.0);
    let mut rng = banditbench::rng::BenchRng::seed_from_u64(3);
    let mut draw = || (0..dim).map(|_| rng.sample(StandardNormal)).collect::<Vec<f64>>();

    let probe = draw();
    let mut full = DesignMatrix::new(PosteriorMode::Full, dim, lambda, width)?;
    let mut diag = DesignMatrix::new(PosteriorMode::Diagonal, dim, lambda, width)?;

    println!("{:>7} {:>10} {:>10} {:>12}", "updates", "σ full", "σ diag", "log det U");
    for n in 0usize..=512 {
        if n == 0 || n.is_power_of_two() {
            println!(
                "{:>7} {:>10.5} {:>10.5} {:>12.3}",
                n,
                full.sigma(&probe)?.get(),
                diag.sigma(&probe)?.get(),
                full.log_det()
            );
        }
        let g = draw();
        full.update(&g)?;
        diag.update(&g)?;
    }
    Ok(())
}
