//! Contextual-bandit benchmark engine built around Neural Thompson Sampling.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: a fully connected ReLU network with NTK-style block initialisation,
//!   exact parameter gradients and gradient-descent training of the
//!   ridge-regularised square loss.
//! - [`posterior`]: the gradient-feature design matrix and the posterior scale
//!   used for Thompson sampling, with full (Sherman–Morrison) and diagonal
//!   backends.
//! - [`policies`]: NeuralTS and the baselines (NeuralUCB, LinTS, LinUCB,
//!   KernelTS, KernelUCB, ε-greedy and bootstrapped networks) behind one
//!   [`policies::Policy`] trait.
//! - [`ntk`]: closed-form neural tangent kernel, effective dimension and the
//!   theory-side parameter diagnostics.
//! - [`data`]: CSV / IDX ingestion and the classification-to-bandit transform.
//! - [`harness`]: seeded episodes, delayed feedback, grid search, summaries
//!   and output files.
//!
//! Everything is computed in `f64`.

pub mod data;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod nn;
pub mod ntk;
pub mod policies;
pub mod posterior;
pub mod rng;

pub use error::{Error, Result};
