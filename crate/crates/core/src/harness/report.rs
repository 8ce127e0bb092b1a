use serde::{Deserialize, Serialize};

use super::env::DataSource;
use crate::ntk::{self, EffDimReport, WidthInputs, WidthReport};
use crate::rng::{stream_rng, Stream};
use crate::Result;

/// Settings for [`ntk_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NtkReportConfig {
    pub depth: usize,
    pub width: usize,
    pub lambda: f64,
    /// Rounds `T` drawn from the data; the context set holds `T·K` vectors.
    pub rounds: usize,
    /// Largest context set kept; larger sets are subsampled with `seed`.
    pub max_contexts: usize,
    pub seed: u64,
    /// Sub-Gaussian noise parameter `R`.
    pub noise: f64,
    pub delta: f64,
    /// Absolute constant used by the width check.
    pub constant: f64,
    /// Include the full `H` in the output.
    pub include_matrix: bool,
}

impl Default for NtkReportConfig {
    fn default() -> Self {
        Self {
            depth: 2,
            width: 100,
            lambda: 1.0,
            rounds: 100,
            max_contexts: 2000,
            seed: 0,
            noise: 1.0,
            delta: 0.05,
            constant: 1.0,
            include_matrix: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NtkReport {
    pub source: String,
    pub contexts: usize,
    pub arms: usize,
    pub rounds: usize,
    pub depth: usize,
    /// Smallest eigenvalue of `H`.
    pub lambda0: f64,
    pub effective_dimension: EffDimReport,
    /// `None` when `H` is singular; see `b_message`.
    pub b: Option<f64>,
    pub b_message: Option<String>,
    pub nu_theory: Option<f64>,
    pub width: WidthReport,
    pub matrix: Option<Vec<Vec<f64>>>,
}

/// Builds the NTK over the first `cfg.rounds` rounds of `source` (all arm
/// contexts, without the duplicated-half transform) and reports its spectrum,
/// effective dimension and theory-side parameters.
pub fn ntk_report(source: &DataSource, cfg: &NtkReportConfig) -> Result<NtkReport> {
    let env = source.environment(cfg.seed, false)?;
    let rounds = cfg.rounds.min(env.len());
    let mut contexts = Vec::new();
    let mut rewards = Vec::new();
    for t in 0..rounds {
        let round = env.round(t)?;
        contexts.extend(round.contexts);
        rewards.extend(round.expected);
    }
    if contexts.len() > cfg.max_contexts {
        let mut rng = stream_rng(cfg.seed, Stream::Data, u32::MAX);
        let mut keep = rand::seq::index::sample(&mut rng, contexts.len(), cfg.max_contexts).into_vec();
        keep.sort_unstable();
        contexts = keep.iter().map(|&i| contexts[i].clone()).collect();
        rewards = keep.iter().map(|&i| rewards[i]).collect();
    }

    let matrix = ntk::ntk_matrix(&contexts, cfg.depth)?;
    let arms = env.arms();
    let tk = (rounds * arms).max(1);
    let eff = ntk::effective_dimension(&matrix.h, cfg.lambda, tk)?;
    let lambda0 = eff.spectrum.last().copied().unwrap_or(0.0);
    let (b, b_message) = match ntk::theory_b(&rewards, &matrix.h) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let nu_theory = b.map(|b| {
        ntk::theory_nu(
            b,
            cfg.noise,
            eff.effective_dimension,
            rounds,
            arms,
            cfg.lambda,
            cfg.delta,
        )
    });
    let width = ntk::check_width_condition(&WidthInputs {
        width: cfg.width as f64,
        rounds: rounds as f64,
        arms: arms as f64,
        depth: cfg.depth as f64,
        lambda: cfg.lambda,
        lambda0,
        delta: cfg.delta,
        constant: cfg.constant,
    });
    let dense = cfg.include_matrix.then(|| {
        (0..matrix.h.nrows())
            .map(|i| matrix.h.row(i).iter().copied().collect())
            .collect()
    });
    Ok(NtkReport {
        source: source.describe(),
        contexts: contexts.len(),
        arms,
        rounds,
        depth: cfg.depth,
        lambda0,
        effective_dimension: eff,
        b,
        b_message,
        nu_theory,
        width,
        matrix: dense,
    })
}
