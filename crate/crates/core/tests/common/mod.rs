#![allow(dead_code)]

use banditbench::nn::{forward, Params};
use banditbench::rng::BenchRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> BenchRng {
    BenchRng::seed_from_u64(seed)
}

pub fn gaussian_vec(dim: usize, rng: &mut BenchRng) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn random_unit(dim: usize, rng: &mut BenchRng) -> Vec<f64> {
    let v = gaussian_vec(dim, rng);
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// A unit vector of length `2 * half` whose halves are equal.
pub fn duplicated_unit(half: usize, rng: &mut BenchRng) -> Vec<f64> {
    let u = random_unit(half, rng);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    u.iter().chain(&u).map(|v| v * s).collect()
}

/// Central finite differences of the network output, one per parameter.
///
/// The output is piecewise linear in any single parameter, so on a smooth
/// piece the forward and backward one-sided differences agree to rounding.
/// `None` marks a coordinate where they disagree: a ReLU kink lies within `h`
/// and finite differences are no oracle there.
pub fn fd_gradient(theta: &Params, x: &[f64], h: f64) -> Vec<Option<f64>> {
    let base = forward(theta, x).unwrap();
    let mut probe = theta.clone();
    (0..theta.as_slice().len())
        .map(|i| {
            let orig = probe.as_slice()[i];
            probe.as_mut_slice()[i] = orig + h;
            let up = forward(&probe, x).unwrap();
            probe.as_mut_slice()[i] = orig - h;
            let down = forward(&probe, x).unwrap();
            probe.as_mut_slice()[i] = orig;
            let (fwd, bwd) = ((up - base) / h, (base - down) / h);
            ((fwd - bwd).abs() <= 1e-8 * (1.0 + fwd.abs())).then_some((up - down) / (2.0 * h))
        })
        .collect()
}

/// Max relative error of `analytic` against the usable finite differences,
/// and the number of coordinates skipped at kinks.
pub fn gradient_check(analytic: &[f64], fd: &[Option<f64>]) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut skipped = 0;
    for (a, n) in analytic.iter().zip(fd) {
        match n {
            Some(n) => worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(1e-6)),
            None => skipped += 1,
        }
    }
    (worst, skipped)
}

/// `max_i |a_i − b_i| / max(|a_i|, |b_i|, floor)`.
pub fn max_rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
