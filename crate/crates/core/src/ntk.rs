//! Neural tangent kernel diagnostics.
//!
//! The kernel is evaluated with the arc-cosine closed forms of the two ReLU
//! expectations. For a covariance `(a, b; b, c)` with `cos θ = b/√(ac)`:
//!
//! - `2 E[max(u,0) max(v,0)] = √(ac)/π · (sin θ + (π − θ) cos θ)`
//! - `2 E[1(u ≥ 0) 1(v ≥ 0)] = (π − θ)/π`
//!
//! Starting from `Σ⁽¹⁾ = H̃⁽¹⁾ = XXᵀ`, each level applies
//! `Σ⁽ˡ⁺¹⁾ = 2E[relu·relu]` and `H̃⁽ˡ⁺¹⁾ = H̃⁽ˡ⁾·2E[1·1] + Σ⁽ˡ⁺¹⁾`, and the kernel
//! is `H = (H̃⁽ᴸ⁾ + Σ⁽ᴸ⁾)/2`.
//!
//! Everything here is advisory. Nothing in the bandit loop consults it.

use std::f64::consts::{E, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, spd_solve, symmetric_eigenvalues};
use crate::{Error, Result};

/// Unit-norm tolerance for kernel inputs.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Lower clamp on `B`.
pub fn b_floor() -> f64 {
    1.0 / (22.0 * E * PI.sqrt())
}

/// `(2E[relu(u) relu(v)], 2E[1(u≥0) 1(v≥0)])` for `(u, v) ~ N(0, (a, b; b, c))`.
pub fn relu_expectations(a: f64, b: f64, c: f64) -> (f64, f64) {
    let scale = (a * c).sqrt();
    if scale == 0.0 {
        // A degenerate coordinate is almost surely zero.
        return (0.0, if a == 0.0 && c == 0.0 { 1.0 } else { 0.5 });
    }
    let cos = (b / scale).clamp(-1.0, 1.0);
    let theta = cos.acos();
    let sigma = scale / PI * (theta.sin() + (PI - theta) * cos);
    let dot = (PI - theta) / PI;
    (sigma, dot)
}

/// NTK over a context set, with the per-level recursion matrices.
#[derive(Debug, Clone)]
pub struct NtkMatrix {
    pub depth: usize,
    pub h: DMatrix<f64>,
    /// `Σ⁽¹⁾ … Σ⁽ᴸ⁾`.
    pub sigma_levels: Vec<DMatrix<f64>>,
    /// `H̃⁽¹⁾ … H̃⁽ᴸ⁾`.
    pub h_tilde_levels: Vec<DMatrix<f64>>,
}

impl NtkMatrix {
    pub fn len(&self) -> usize {
        self.h.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.h.nrows() == 0
    }

    /// Eigenvalues, descending.
    pub fn spectrum(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.h)
    }
}

pub fn ntk_matrix(contexts: &[Vec<f64>], depth: usize) -> Result<NtkMatrix> {
    if contexts.is_empty() {
        return Err(Error::Empty("NTK context set"));
    }
    if depth < 2 {
        return Err(Error::InvalidShape(format!("depth must be at least 2, got {depth}")));
    }
    let dim = contexts[0].len();
    for (index, x) in contexts.iter().enumerate() {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: x.len(),
            });
        }
        let norm = linalg::norm(x);
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::NotUnitNorm { index, norm });
        }
    }

    let n = contexts.len();
    let gram = DMatrix::from_fn(n, n, |i, j| linalg::dot(&contexts[i], &contexts[j]));
    let mut sigma = gram.clone();
    let mut h_tilde = gram;
    let mut sigma_levels = vec![sigma.clone()];
    let mut h_tilde_levels = vec![h_tilde.clone()];

    for _ in 1..depth {
        let mut next_sigma = DMatrix::zeros(n, n);
        let mut next_h = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let (s, dot) = relu_expectations(sigma[(i, i)], sigma[(i, j)], sigma[(j, j)]);
                let h = h_tilde[(i, j)] * dot + s;
                next_sigma[(i, j)] = s;
                next_sigma[(j, i)] = s;
                next_h[(i, j)] = h;
                next_h[(j, i)] = h;
            }
        }
        sigma = next_sigma;
        h_tilde = next_h;
        sigma_levels.push(sigma.clone());
        h_tilde_levels.push(h_tilde.clone());
    }

    let h = (&h_tilde + &sigma) / 2.0;
    Ok(NtkMatrix {
        depth,
        h,
        sigma_levels,
        h_tilde_levels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffDimReport {
    pub effective_dimension: f64,
    pub log_det: f64,
    pub lambda: f64,
    /// `T·K`, the number of contexts the normaliser is computed for.
    pub rounds_times_arms: usize,
    pub spectrum: Vec<f64>,
}

/// Relative tolerance on negative eigenvalues before a matrix is rejected as
/// not positive semidefinite.
const PSD_TOL: f64 = 1e-8;

fn checked_spectrum(h: &DMatrix<f64>) -> Result<Vec<f64>> {
    let spectrum = symmetric_eigenvalues(h);
    let scale = spectrum.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    if let Some(&min) = spectrum.last() {
        if min < -PSD_TOL * scale {
            return Err(Error::NotPositiveDefinite(format!(
                "minimum eigenvalue {min} is negative"
            )));
        }
    }
    Ok(spectrum)
}

/// `d̃ = log det(I + H/λ) / log(1 + TK/λ)`.
pub fn effective_dimension(h: &DMatrix<f64>, lambda: f64, rounds_times_arms: usize) -> Result<EffDimReport> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
    }
    if rounds_times_arms == 0 {
        return Err(Error::InvalidConfig("T·K must be at least 1".into()));
    }
    let spectrum = checked_spectrum(h)?;
    let log_det: f64 = spectrum.iter().map(|&v| (v.max(0.0) / lambda).ln_1p()).sum();
    let effective_dimension = log_det / (rounds_times_arms as f64 / lambda).ln_1p();
    Ok(EffDimReport {
        effective_dimension,
        log_det,
        lambda,
        rounds_times_arms,
        spectrum,
    })
}

/// Eigenvalue-truncation bound on `log det(I + H)` (taking `λ = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationBound {
    pub head_dim: usize,
    /// Sum of the `head_dim` largest eigenvalues.
    pub head: f64,
    /// Sum of the remaining eigenvalues.
    pub tail: f64,
    /// `head + tail`, which dominates `log det(I + H)`.
    pub bound: f64,
    /// Whether every tail eigenvalue is at most `1/(TK)`.
    pub tail_condition_holds: bool,
}

pub fn effdim_truncation_bound(h: &DMatrix<f64>, head_dim: usize, rounds_times_arms: usize) -> Result<TruncationBound> {
    let spectrum = checked_spectrum(h)?;
    if head_dim > spectrum.len() {
        return Err(Error::OutOfRange(format!(
            "head dimension {head_dim} exceeds matrix size {}",
            spectrum.len()
        )));
    }
    if rounds_times_arms == 0 {
        return Err(Error::InvalidConfig("T·K must be at least 1".into()));
    }
    let head: f64 = spectrum[..head_dim].iter().sum();
    let tail: f64 = spectrum[head_dim..].iter().sum();
    let threshold = 1.0 / rounds_times_arms as f64;
    Ok(TruncationBound {
        head_dim,
        head,
        tail,
        bound: head + tail,
        tail_condition_holds: spectrum[head_dim..].iter().all(|&v| v <= threshold),
    })
}

/// `ν = B + R √(d̃ log(1 + TK/λ) + 2 + 2 log(1/δ))`.
pub fn theory_nu(b: f64, r: f64, d_tilde: f64, rounds: usize, arms: usize, lambda: f64, delta: f64) -> f64 {
    let tk = (rounds * arms) as f64;
    b + r * (d_tilde * (tk / lambda).ln_1p() + 2.0 + 2.0 * (1.0 / delta).ln()).sqrt()
}

/// `B = max{1/(22e√π), √(2 hᵀH⁻¹h)}`.
pub fn theory_b(h_values: &[f64], h: &DMatrix<f64>) -> Result<f64> {
    if h_values.len() != h.nrows() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            actual: h_values.len(),
        });
    }
    let min_eig = symmetric_eigenvalues(h).last().copied().unwrap_or(0.0);
    if min_eig <= 1e-10 {
        return Err(Error::NotPositiveDefinite(format!(
            "NTK matrix is singular (minimum eigenvalue {min_eig})"
        )));
    }
    let sol = spd_solve(h, h_values)?;
    let quad = linalg::dot(h_values, &sol);
    Ok(b_floor().max((2.0 * quad).sqrt()))
}

/// Inputs to the width check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthInputs {
    pub width: f64,
    pub rounds: f64,
    pub arms: f64,
    pub depth: f64,
    pub lambda: f64,
    pub lambda0: f64,
    pub delta: f64,
    /// The unspecified absolute constant; 1 by default.
    pub constant: f64,
}

/// One side-by-side comparison in the width report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthInequality {
    pub lhs: f64,
    pub rhs: f64,
    /// Individual terms entering `rhs`, before the constant.
    pub terms: Vec<f64>,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthReport {
    pub note: String,
    /// `m ≥ C·max{√λ L^{-3/2} [log(TKL²/δ)]^{3/2}, T⁶K⁶L⁶ log(TKL/δ) max{λ₀⁻⁴, 1}}`.
    pub lower_bound: WidthInequality,
    /// `m (log m)^{-3} ≥ C T L¹² λ⁻¹ + C T⁷ λ⁻⁸ L¹⁸ (λ + LT)⁶ + C L²¹ T⁷ λ⁻⁷ (1 + √(T/λ))⁶`.
    pub log_bound: WidthInequality,
}

pub fn check_width_condition(w: &WidthInputs) -> WidthReport {
    let WidthInputs {
        width: m,
        rounds: t,
        arms: k,
        depth: l,
        lambda,
        lambda0,
        delta,
        constant: c,
    } = *w;

    let first = lambda.sqrt() * l.powf(-1.5) * (t * k * l * l / delta).ln().powf(1.5);
    let second = t.powi(6) * k.powi(6) * l.powi(6) * (t * k * l / delta).ln() * lambda0.powi(-4).max(1.0);
    let rhs1 = c * first.max(second);

    let log_m = m.ln();
    let lhs2 = if log_m == 0.0 {
        f64::INFINITY
    } else {
        m / log_m.powi(3)
    };
    let a = t * l.powi(12) / lambda;
    let b = t.powi(7) * lambda.powi(-8) * l.powi(18) * (lambda + l * t).powi(6);
    let d = l.powi(21) * t.powi(7) * lambda.powi(-7) * (1.0 + (t / lambda).sqrt()).powi(6);
    let rhs2 = c * (a + b + d);

    WidthReport {
        note: "diagnostic: the absolute constant C is unknown".into(),
        lower_bound: WidthInequality {
            lhs: m,
            rhs: rhs1,
            terms: vec![first, second],
            satisfied: m >= rhs1,
        },
        log_bound: WidthInequality {
            lhs: lhs2,
            rhs: rhs2,
            terms: vec![a, b, d],
            satisfied: lhs2 >= rhs2,
        },
    }
}
