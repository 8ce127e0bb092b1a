//! Design matrix `U = λI + Σ g gᵀ/m` and the posterior scale
//! `σ = √(λ gᵀ U⁻¹ g / m)`.
//!
//! The full backend keeps `U⁻¹` up to date with Sherman–Morrison rank-one
//! updates; the diagonal backend keeps only `diag(U)` and replaces `U⁻¹` by the
//! inverse of that diagonal.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::spd_inverse_logdet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosteriorMode {
    Full,
    #[serde(alias = "diag")]
    Diagonal,
}

impl std::str::FromStr for PosteriorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "diag" | "diagonal" => Ok(Self::Diagonal),
            other => Err(Error::InvalidConfig(format!(
                "unknown posterior mode {other:?} (expected diag or full)"
            ))),
        }
    }
}

/// Posterior standard deviation of one arm, before the exploration factor `ν`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PosteriorScale(f64);

impl PosteriorScale {
    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Full {
        inverse: DMatrix<f64>,
        /// `U` itself, kept so a corrupted inverse can be rebuilt.
        gram: DMatrix<f64>,
    },
    Diagonal {
        diag: Vec<f64>,
    },
}

/// Outcome of a single [`DesignMatrix::update`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    RankOne,
    /// The Sherman–Morrison denominator was not positive; `U⁻¹` was recomputed
    /// from `U` directly.
    Rebuilt,
}

#[derive(Debug, Clone)]
pub struct DesignMatrix {
    lambda: f64,
    width: f64,
    dim: usize,
    log_det: f64,
    updates: usize,
    rebuilds: usize,
    backend: Backend,
}

impl DesignMatrix {
    /// `U₀ = λI` of size `dim`, for features divided by `width`.
    pub fn new(mode: PosteriorMode, dim: usize, lambda: f64, width: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "width must be positive, got {width}"
            )));
        }
        if dim == 0 {
            return Err(Error::Empty("design matrix dimension"));
        }
        let backend = match mode {
            PosteriorMode::Full => Backend::Full {
                inverse: DMatrix::identity(dim, dim) / lambda,
                gram: DMatrix::identity(dim, dim) * lambda,
            },
            PosteriorMode::Diagonal => Backend::Diagonal {
                diag: vec![lambda; dim],
            },
        };
        Ok(Self {
            lambda,
            width,
            dim,
            log_det: dim as f64 * lambda.ln(),
            updates: 0,
            rebuilds: 0,
            backend,
        })
    }

    pub fn mode(&self) -> PosteriorMode {
        match self.backend {
            Backend::Full { .. } => PosteriorMode::Full,
            Backend::Diagonal { .. } => PosteriorMode::Diagonal,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// `log det U` (of the diagonal approximation in diagonal mode).
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }

    /// Maintained `U⁻¹` (full mode only).
    pub fn inverse(&self) -> Option<&DMatrix<f64>> {
        match &self.backend {
            Backend::Full { inverse, .. } => Some(inverse),
            Backend::Diagonal { .. } => None,
        }
    }

    /// `U` as a dense matrix (diagonal in diagonal mode).
    pub fn matrix(&self) -> DMatrix<f64> {
        match &self.backend {
            Backend::Full { gram, .. } => gram.clone(),
            Backend::Diagonal { diag } => DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    fn check(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: g.len(),
            });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient feature"));
        }
        Ok(())
    }

    /// `gᵀ U⁻¹ g` with the backend's notion of `U⁻¹`.
    pub fn quad_form(&self, g: &[f64]) -> Result<f64> {
        self.check(g)?;
        Ok(self.quad_form_unchecked(g))
    }

    fn quad_form_unchecked(&self, g: &[f64]) -> f64 {
        match &self.backend {
            Backend::Full { inverse, .. } => {
                let mut acc = 0.0;
                for (j, &gj) in g.iter().enumerate() {
                    if gj == 0.0 {
                        continue;
                    }
                    let col = inverse.column(j);
                    let s: f64 = col.iter().zip(g).map(|(a, b)| a * b).sum();
                    acc += gj * s;
                }
                acc
            }
            Backend::Diagonal { diag } => g.iter().zip(diag).map(|(v, u)| v * v / u).sum(),
        }
    }

    /// `σ = √(λ gᵀ U⁻¹ g / m)`.
    pub fn sigma(&self, g: &[f64]) -> Result<PosteriorScale> {
        let q = self.quad_form(g)?;
        Ok(PosteriorScale((self.lambda * q.max(0.0) / self.width).sqrt()))
    }

    /// `U ← U + g gᵀ/m`.
    pub fn update(&mut self, g: &[f64]) -> Result<UpdateOutcome> {
        self.check(g)?;
        self.updates += 1;
        let m = self.width;
        match &mut self.backend {
            Backend::Diagonal { diag } => {
                let mut log_det = 0.0;
                for (u, v) in diag.iter_mut().zip(g) {
                    *u += v * v / m;
                    log_det += u.ln();
                }
                self.log_det = log_det;
                Ok(UpdateOutcome::RankOne)
            }
            Backend::Full { inverse, gram } => {
                let gv = DVector::from_column_slice(g);
                gram.ger(1.0 / m, &gv, &gv, 1.0);
                let u = &*inverse * &gv;
                let q = gv.dot(&u);
                let denom = 1.0 + q / m;
                if denom > 0.0 && denom.is_finite() {
                    inverse.ger(-1.0 / (m * denom), &u, &u, 1.0);
                    symmetrize(inverse);
                    self.log_det += denom.ln();
                    Ok(UpdateOutcome::RankOne)
                } else {
                    log::warn!("Sherman–Morrison denominator {denom} not positive; rebuilding U⁻¹");
                    let (inv, log_det) = spd_inverse_logdet(gram)?;
                    *inverse = inv;
                    self.log_det = log_det;
                    self.rebuilds += 1;
                    Ok(UpdateOutcome::Rebuilt)
                }
            }
        }
    }
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}
