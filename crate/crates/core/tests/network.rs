mod common;

use approx::assert_abs_diff_eq;
use banditbench::nn::{
    forward, grad, init_params, objective, train, Model, NetShape, Params, TrainConfig, TrainMode,
};
use banditbench::rng::{stream_rng, Stream};
use banditbench::Result;
use proptest::prelude::*;

use common::{duplicated_unit, fd_gradient, gaussian_vec, gradient_check, rng};

fn shape_strategy() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=4, 1usize..=8, 2usize..=4).prop_map(|(d, m, l)| (2 * d, 2 * m, l))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_gradient_matches_finite_differences((d, m, l) in shape_strategy(), seed in any::<u64>()) {
        let shape = NetShape::new(d, m, l).unwrap();
        let mut r = rng(seed);
        // Perturb away from θ₀ so the block symmetry does not hide errors.
        let mut theta = init_params(shape, seed);
        for (t, z) in theta.as_mut_slice().iter_mut().zip(gaussian_vec(shape.num_params(), &mut r)) {
            *t += 0.3 * z / (m as f64).sqrt();
        }
        let x = gaussian_vec(d, &mut r);
        let g = grad(&theta, &x).unwrap();
        let fd = fd_gradient(&theta, &x, 1e-5);
        let (err, skipped) = gradient_check(g.as_slice(), &fd);
        prop_assert!(err < 1e-4, "relative error {err}");
        prop_assert!(skipped * 10 < fd.len());
    }

    #[test]
    fn zero_output_at_init_on_duplicated_inputs((d, m, l) in shape_strategy(), seed in any::<u64>()) {
        let shape = NetShape::new(d, m, l).unwrap();
        let theta0 = init_params(shape, seed);
        let x = duplicated_unit(d / 2, &mut rng(seed ^ 0x5eed));
        prop_assert!(forward(&theta0, &x).unwrap().abs() <= 1e-6 * (m as f64).sqrt());
    }

    #[test]
    fn two_layer_net_is_positively_homogeneous(seed in any::<u64>(), c in 0.01f64..100.0) {
        let shape = NetShape::new(6, 8, 2).unwrap();
        let theta = init_params(shape, seed);
        let x = gaussian_vec(6, &mut rng(seed));
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        let a = forward(&theta, &cx).unwrap();
        let b = c * forward(&theta, &x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }

    /// Gradient descent is monotone on each smooth piece of the objective;
    /// steps that flip a ReLU activation cross a kink and are skipped.
    #[test]
    fn full_batch_descent_is_monotone(seed in any::<u64>(), n in 1usize..6) {
        let shape = NetShape::new(4, 8, 2).unwrap();
        let theta0 = init_params(shape, seed);
        let mut r = rng(seed);
        let data: Vec<(Vec<f64>, f64)> = (0..n)
            .map(|_| (common::random_unit(4, &mut r), gaussian_vec(1, &mut r)[0]))
            .collect();
        let cfg = TrainConfig { step_size: 1e-3, iterations: 1, lambda: 0.1, mode: TrainMode::FullBatch };
        let pattern = |theta: &[f64]| -> Vec<bool> {
            let p = &Params::from_flat(shape, theta.to_vec()).unwrap();
            data.iter()
                .flat_map(|(x, _)| (0..8).map(move |i| (0..4).map(|j| p.weight(0, i, j) * x[j]).sum::<f64>() > 0.0))
                .collect()
        };
        let mut train_rng = stream_rng(seed, Stream::Train, 0);
        let mut theta = theta0.as_slice().to_vec();
        let mut prev = objective(&shape, theta0.as_slice(), &theta, &data, cfg.lambda).unwrap();
        let mut smooth_steps = 0;
        for _ in 0..50 {
            let next = train(&shape, theta0.as_slice(), &theta, &data, &cfg, &mut train_rng).unwrap();
            let loss = objective(&shape, theta0.as_slice(), &next, &data, cfg.lambda).unwrap();
            if pattern(&theta) == pattern(&next) {
                smooth_steps += 1;
                prop_assert!(loss <= prev + 1e-9, "{loss} > {prev}");
            }
            prev = loss;
            theta = next;
        }
        prop_assert!(smooth_steps > 0);
    }
}

#[test]
fn init_is_deterministic_and_seed_sensitive() {
    let shape = NetShape::new(4, 4, 3).unwrap();
    assert_eq!(init_params(shape, 11), init_params(shape, 11));
    assert_ne!(init_params(shape, 11), init_params(shape, 12));
}

#[test]
fn parameter_count() {
    for (d, m, l) in [(2, 2, 2), (6, 8, 3), (784, 100, 4)] {
        let shape = NetShape::new(d, m, l).unwrap();
        assert_eq!(shape.num_params(), d * m + m * m * (l - 2) + m);
    }
}

/// `f(x; θ) = θ·x` with a single parameter.
struct ScalarLinear {
    width: f64,
}

impl Model for ScalarLinear {
    fn num_params(&self) -> usize {
        1
    }

    fn reg_width(&self) -> f64 {
        self.width
    }

    fn value(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        Ok(theta[0] * x[0])
    }

    fn accumulate_grad(
        &self,
        theta: &[f64],
        x: &[f64],
        out: &mut [f64],
        coeff: &mut dyn FnMut(f64) -> f64,
    ) -> Result<f64> {
        let f = theta[0] * x[0];
        out[0] += coeff(f) * x[0];
        Ok(f)
    }
}

#[test]
fn gradient_descent_reaches_scalar_ridge_solution() {
    let model = ScalarLinear { width: 4.0 };
    let (x, r, theta0, lambda) = (0.7, 1.3, 0.2, 0.5);
    let cfg = TrainConfig {
        step_size: 0.1,
        iterations: 2000,
        lambda,
        mode: TrainMode::FullBatch,
    };
    let theta = train(&model, &[theta0], &[theta0], &[(vec![x], r)], &cfg, &mut rng(0)).unwrap();
    let residual = r - theta0 * x;
    let expected = theta0 + x * residual / (x * x + model.width * lambda);
    assert_abs_diff_eq!(theta[0], expected, epsilon = 1e-6);
}

#[test]
fn full_batch_training_is_bit_reproducible() {
    let shape = NetShape::new(4, 8, 3).unwrap();
    let theta0 = init_params(shape, 3);
    let mut r = rng(3);
    let data: Vec<(Vec<f64>, f64)> = (0..10).map(|_| (gaussian_vec(4, &mut r), 0.5)).collect();
    let cfg = TrainConfig {
        step_size: 1e-3,
        iterations: 50,
        lambda: 1.0,
        mode: TrainMode::FullBatch,
    };
    let a = train(&shape, theta0.as_slice(), theta0.as_slice(), &data, &cfg, &mut rng(1)).unwrap();
    let b = train(&shape, theta0.as_slice(), theta0.as_slice(), &data, &cfg, &mut rng(2)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn minibatch_training_reduces_loss() {
    let shape = NetShape::new(4, 16, 2).unwrap();
    let theta0 = init_params(shape, 5);
    let mut r = rng(5);
    let data: Vec<(Vec<f64>, f64)> = (0..64)
        .map(|_| {
            let x = common::random_unit(4, &mut r);
            let y = x[0] - x[1];
            (x, y)
        })
        .collect();
    let cfg = TrainConfig {
        step_size: 0.01,
        iterations: 400,
        lambda: 1e-3,
        mode: TrainMode::MiniBatch { batch_size: 8 },
    };
    let before = objective(&shape, theta0.as_slice(), theta0.as_slice(), &data, cfg.lambda).unwrap();
    let theta = train(&shape, theta0.as_slice(), theta0.as_slice(), &data, &cfg, &mut rng(6)).unwrap();
    let after = objective(&shape, theta0.as_slice(), &theta, &data, cfg.lambda).unwrap();
    assert!(after < 0.5 * before, "{after} vs {before}");
}

#[test]
fn params_round_trip_through_flat_vector() {
    let shape = NetShape::new(4, 6, 3).unwrap();
    let theta = init_params(shape, 9);
    let flat = theta.as_slice().to_vec();
    let back = Params::from_flat(shape, flat).unwrap();
    assert_eq!(back, theta);
    assert!(Params::from_flat(shape, vec![0.0; 3]).is_err());
}
