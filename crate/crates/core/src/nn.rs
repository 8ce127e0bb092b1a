//! Fully connected ReLU network `f(x; θ) = √m · W_L ReLU(W_{L-1} ··· ReLU(W_1 x))`.
//!
//! Parameters live in one flat buffer, layer 1 first and row-major inside each
//! layer. Gradients use exactly the same layout, so a gradient feature can be
//! dotted against (or added to) a parameter vector without any reshaping.
//!
//! The `1/√m` factor that turns a gradient into an NTK feature is *not* applied
//! here; callers divide by the width where they need it.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rng::{stream_rng, BenchRng, Stream};
use crate::{Error, Result};

/// Architecture: input dimension `d`, hidden width `m`, depth `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    input_dim: usize,
    width: usize,
    depth: usize,
}

impl NetShape {
    /// Both `input_dim` and `width` must be even and positive (the
    /// initialisation is block-diagonal), and `depth >= 2`.
    pub fn new(input_dim: usize, width: usize, depth: usize) -> Result<Self> {
        if input_dim == 0 || input_dim % 2 != 0 {
            return Err(Error::InvalidShape(format!(
                "input dimension must be even and positive, got {input_dim}"
            )));
        }
        if width == 0 || width % 2 != 0 {
            return Err(Error::InvalidShape(format!(
                "width must be even and positive, got {width}"
            )));
        }
        if depth < 2 {
            return Err(Error::InvalidShape(format!(
                "depth must be at least 2, got {depth}"
            )));
        }
        Ok(Self {
            input_dim,
            width,
            depth,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `p = d·m + m²·(L−2) + m`.
    pub fn num_params(&self) -> usize {
        let (d, m, l) = (self.input_dim, self.width, self.depth);
        d * m + m * m * (l - 2) + m
    }

    /// `(rows, cols)` of layer `layer` (0-based).
    pub fn layer_dims(&self, layer: usize) -> (usize, usize) {
        assert!(layer < self.depth, "layer index out of range");
        if layer == 0 {
            (self.width, self.input_dim)
        } else if layer + 1 == self.depth {
            (1, self.width)
        } else {
            (self.width, self.width)
        }
    }

    /// Offset of layer `layer` inside the flat parameter vector.
    pub fn layer_offset(&self, layer: usize) -> usize {
        (0..layer)
            .map(|l| {
                let (r, c) = self.layer_dims(l);
                r * c
            })
            .sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }
}

/// Flattened network weights together with their shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    shape: NetShape,
    flat: Vec<f64>,
}

impl Params {
    pub fn zeros(shape: NetShape) -> Self {
        Self {
            flat: vec![0.0; shape.num_params()],
            shape,
        }
    }

    pub fn from_flat(shape: NetShape, flat: Vec<f64>) -> Result<Self> {
        if flat.len() != shape.num_params() {
            return Err(Error::DimensionMismatch {
                expected: shape.num_params(),
                actual: flat.len(),
            });
        }
        Ok(Self { shape, flat })
    }

    pub fn shape(&self) -> NetShape {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.flat
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.flat
    }

    /// Row-major weights of layer `layer` (0-based).
    pub fn layer(&self, layer: usize) -> &[f64] {
        let (r, c) = self.shape.layer_dims(layer);
        let off = self.shape.layer_offset(layer);
        &self.flat[off..off + r * c]
    }

    pub fn layer_mut(&mut self, layer: usize) -> &mut [f64] {
        let (r, c) = self.shape.layer_dims(layer);
        let off = self.shape.layer_offset(layer);
        &mut self.flat[off..off + r * c]
    }

    /// Entry `(row, col)` of layer `layer`.
    pub fn weight(&self, layer: usize, row: usize, col: usize) -> f64 {
        let (_, c) = self.shape.layer_dims(layer);
        self.layer(layer)[row * c + col]
    }
}

/// Gradient of the network output with respect to every weight, unscaled.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientFeature(pub Vec<f64>);

impl GradientFeature {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Symmetric initialisation: every layer but the last is `(W, 0; 0, W)` with
/// `W_ij ~ N(0, 4/m)`, and the last layer is `(wᵀ, −wᵀ)` with `w_j ~ N(0, 2/m)`.
///
/// Inputs whose two halves coincide therefore produce identical activations in
/// both halves of every hidden layer, and the output cancels to zero.
pub fn init_params(shape: NetShape, seed: u64) -> Params {
    let mut rng = stream_rng(seed, Stream::Init, 0);
    init_params_with(shape, &mut rng)
}

pub fn init_params_with(shape: NetShape, rng: &mut BenchRng) -> Params {
    let m = shape.width as f64;
    let hidden = Normal::new(0.0, (4.0 / m).sqrt()).expect("finite std");
    let last = Normal::new(0.0, (2.0 / m).sqrt()).expect("finite std");
    let mut params = Params::zeros(shape);
    let half_m = shape.width / 2;

    for layer in 0..shape.depth - 1 {
        let (rows, cols) = shape.layer_dims(layer);
        let half_c = cols / 2;
        let block: Vec<f64> = (0..half_m * half_c).map(|_| hidden.sample(rng)).collect();
        let w = params.layer_mut(layer);
        for i in 0..half_m {
            for j in 0..half_c {
                let v = block[i * half_c + j];
                w[i * cols + j] = v;
                w[(i + half_m) * cols + (j + half_c)] = v;
            }
        }
        debug_assert_eq!(rows, shape.width);
    }

    let w: Vec<f64> = (0..half_m).map(|_| last.sample(rng)).collect();
    let out = params.layer_mut(shape.depth - 1);
    for j in 0..half_m {
        out[j] = w[j];
        out[j + half_m] = -w[j];
    }
    params
}

/// Anything trainable by [`train`]: a scalar model with a flat parameter vector
/// and exact gradients.
pub trait Model {
    fn num_params(&self) -> usize;

    /// The `m` multiplying `λ` in the regulariser `mλ‖θ − θ₀‖²/2`.
    fn reg_width(&self) -> f64;

    fn value(&self, theta: &[f64], x: &[f64]) -> Result<f64>;

    /// Evaluates `f(x; θ)`, then adds `c · ∂f/∂θ` into `out` where
    /// `c = coeff(f)`. Returns `f`.
    fn accumulate_grad(
        &self,
        theta: &[f64],
        x: &[f64],
        out: &mut [f64],
        coeff: &mut dyn FnMut(f64) -> f64,
    ) -> Result<f64>;
}

impl NetShape {
    /// Forward pass keeping the post-ReLU activations of each hidden layer.
    fn forward_with_acts(&self, theta: &[f64], x: &[f64]) -> (f64, Vec<Vec<f64>>) {
        let m = self.width;
        let d = self.input_dim;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.depth - 1);

        // Layer 1, skipping zero inputs (disjoint-encoded contexts are sparse).
        let nz: Vec<usize> = (0..d).filter(|&j| x[j] != 0.0).collect();
        let w1 = &theta[..m * d];
        let mut a: Vec<f64> = (0..m)
            .map(|i| {
                let row = &w1[i * d..(i + 1) * d];
                let pre: f64 = nz.iter().map(|&j| row[j] * x[j]).sum();
                pre.max(0.0)
            })
            .collect();

        let mut off = m * d;
        for _ in 1..self.depth - 1 {
            let w = &theta[off..off + m * m];
            let next: Vec<f64> = (0..m)
                .map(|i| {
                    let row = &w[i * m..(i + 1) * m];
                    let pre: f64 = row.iter().zip(&a).map(|(w, a)| w * a).sum();
                    pre.max(0.0)
                })
                .collect();
            acts.push(a);
            a = next;
            off += m * m;
        }
        let w_last = &theta[off..off + m];
        let out: f64 = w_last.iter().zip(&a).map(|(w, a)| w * a).sum();
        acts.push(a);
        ((m as f64).sqrt() * out, acts)
    }

    fn backward(&self, theta: &[f64], x: &[f64], acts: &[Vec<f64>], scale: f64, out: &mut [f64]) {
        let m = self.width;
        let d = self.input_dim;
        let sqrt_m = (m as f64).sqrt();
        let last_off = theta.len() - m;

        // Output layer.
        let top = &acts[acts.len() - 1];
        let w_last = &theta[last_off..];
        for j in 0..m {
            out[last_off + j] += scale * sqrt_m * top[j];
        }
        // ReLU'(0) = 0: a unit with zero activation passes no gradient.
        let mut delta: Vec<f64> = (0..m)
            .map(|j| {
                if top[j] > 0.0 {
                    scale * sqrt_m * w_last[j]
                } else {
                    0.0
                }
            })
            .collect();

        // Hidden m×m layers, from the top down.
        for layer in (1..self.depth - 1).rev() {
            let off = m * d + (layer - 1) * m * m;
            let input = &acts[layer - 1];
            let w = &theta[off..off + m * m];
            let mut next = vec![0.0; m];
            for i in 0..m {
                let di = delta[i];
                if di == 0.0 {
                    continue;
                }
                let row = &w[i * m..(i + 1) * m];
                let grow = &mut out[off + i * m..off + (i + 1) * m];
                for k in 0..m {
                    grow[k] += di * input[k];
                    next[k] += row[k] * di;
                }
            }
            for k in 0..m {
                if input[k] <= 0.0 {
                    next[k] = 0.0;
                }
            }
            delta = next;
        }

        // First layer.
        let nz: Vec<usize> = (0..d).filter(|&j| x[j] != 0.0).collect();
        for i in 0..m {
            let di = delta[i];
            if di == 0.0 {
                continue;
            }
            let grow = &mut out[i * d..(i + 1) * d];
            for &j in &nz {
                grow[j] += di * x[j];
            }
        }
    }
}

impl Model for NetShape {
    fn num_params(&self) -> usize {
        NetShape::num_params(self)
    }

    fn reg_width(&self) -> f64 {
        self.width as f64
    }

    fn value(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.forward_with_acts(theta, x).0)
    }

    fn accumulate_grad(
        &self,
        theta: &[f64],
        x: &[f64],
        out: &mut [f64],
        coeff: &mut dyn FnMut(f64) -> f64,
    ) -> Result<f64> {
        self.check_input(x)?;
        let (f, acts) = self.forward_with_acts(theta, x);
        let c = coeff(f);
        if c != 0.0 {
            self.backward(theta, x, &acts, c, out);
        }
        Ok(f)
    }
}

/// `f(x; θ)`.
pub fn forward(theta: &Params, x: &[f64]) -> Result<f64> {
    theta.shape.value(&theta.flat, x)
}

/// `g(x; θ) = ∂f(x; θ)/∂θ` in the flat parameter layout.
pub fn grad(theta: &Params, x: &[f64]) -> Result<GradientFeature> {
    let (_, g) = value_and_grad(theta, x)?;
    Ok(g)
}

/// `f(x; θ)` and `g(x; θ)` from a single forward pass.
pub fn value_and_grad(theta: &Params, x: &[f64]) -> Result<(f64, GradientFeature)> {
    let mut g = vec![0.0; theta.flat.len()];
    let f = theta
        .shape
        .accumulate_grad(&theta.flat, x, &mut g, &mut |_| 1.0)?;
    Ok((f, GradientFeature(g)))
}

/// How each gradient step sees the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Exact gradient of the full objective at every step.
    FullBatch,
    /// Each step uses `batch_size` examples drawn without replacement from a
    /// reshuffled epoch order; the regulariser is scaled by `batch/n` so the
    /// step is an unbiased estimate of `(batch/n)·∇L`.
    MiniBatch { batch_size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub step_size: f64,
    pub iterations: usize,
    pub lambda: f64,
    pub mode: TrainMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            step_size: 1e-3,
            iterations: 100,
            lambda: 1.0,
            mode: TrainMode::FullBatch,
        }
    }
}

impl TrainConfig {
    /// Checks positivity and `η·m·λ < 1`.
    pub fn validate(&self, reg_width: f64) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be positive".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if let TrainMode::MiniBatch { batch_size } = self.mode {
            if batch_size == 0 {
                return Err(Error::InvalidConfig("batch size must be positive".into()));
            }
        }
        let contraction = self.step_size * reg_width * self.lambda;
        if contraction >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "step_size * m * lambda = {contraction} must be < 1"
            )));
        }
        Ok(())
    }
}

/// `Σᵢ (f(xᵢ; θ) − rᵢ)²/2 + mλ‖θ − θ₀‖²/2`.
pub fn objective<M: Model + ?Sized>(
    model: &M,
    theta0: &[f64],
    theta: &[f64],
    data: &[(Vec<f64>, f64)],
    lambda: f64,
) -> Result<f64> {
    let mut loss = 0.5 * model.reg_width() * lambda * sq_dist(theta, theta0);
    for (x, r) in data {
        let res = model.value(theta, x)? - r;
        loss += 0.5 * res * res;
    }
    Ok(loss)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Runs `cfg.iterations` steps of gradient descent on the regularised square
/// loss anchored at `theta0`, starting from `theta_init`.
///
/// `rng` is only consulted in minibatch mode.
pub fn train<M: Model + ?Sized>(
    model: &M,
    theta0: &[f64],
    theta_init: &[f64],
    data: &[(Vec<f64>, f64)],
    cfg: &TrainConfig,
    rng: &mut BenchRng,
) -> Result<Vec<f64>> {
    let indices: Vec<usize> = (0..data.len()).collect();
    train_subset(model, theta0, theta_init, data, &indices, cfg, rng)
}

/// As [`train`] but only over `data[i]` for `i` in `subset`.
pub fn train_subset<M: Model + ?Sized>(
    model: &M,
    theta0: &[f64],
    theta_init: &[f64],
    data: &[(Vec<f64>, f64)],
    subset: &[usize],
    cfg: &TrainConfig,
    rng: &mut BenchRng,
) -> Result<Vec<f64>> {
    let p = model.num_params();
    if theta0.len() != p || theta_init.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: if theta0.len() != p {
                theta0.len()
            } else {
                theta_init.len()
            },
        });
    }
    cfg.validate(model.reg_width())?;

    let reg = model.reg_width() * cfg.lambda;
    let n = subset.len();
    let mut theta = theta_init.to_vec();
    let mut grad = vec![0.0; p];
    let mut order: Vec<usize> = subset.to_vec();
    let mut cursor = n;

    for iteration in 0..cfg.iterations {
        let (batch, reg_scale): (&[usize], f64) = match cfg.mode {
            TrainMode::FullBatch => (subset, 1.0),
            TrainMode::MiniBatch { batch_size } => {
                if n == 0 {
                    (&[], 1.0)
                } else {
                    let b = batch_size.min(n);
                    if cursor + b > n {
                        shuffle(&mut order, rng);
                        cursor = 0;
                    }
                    let start = cursor;
                    cursor += b;
                    (&order[start..start + b], b as f64 / n as f64)
                }
            }
        };

        let mut loss = 0.0;
        for (g, (t, t0)) in grad.iter_mut().zip(theta.iter().zip(theta0)) {
            let diff = t - t0;
            *g = reg * reg_scale * diff;
            loss += 0.5 * reg * reg_scale * diff * diff;
        }
        for &i in batch {
            let (x, r) = &data[i];
            let mut res = 0.0;
            model.accumulate_grad(&theta, x, &mut grad, &mut |f| {
                res = f - r;
                res
            })?;
            loss += 0.5 * res * res;
        }
        if !loss.is_finite() {
            return Err(Error::Diverged { iteration, loss });
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= cfg.step_size * g;
        }
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::Diverged {
            iteration: cfg.iterations,
            loss: f64::INFINITY,
        });
    }
    Ok(theta)
}

fn shuffle(v: &mut [usize], rng: &mut BenchRng) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}
