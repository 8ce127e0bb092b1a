use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Cell, ExperimentConfig};
use super::env::DataSource;
use super::episode::{run_policy, RegretTrace, TraceMeta};
use super::stats::{summarize, Summary};
use crate::policies::{build_policy, Algorithm};
use crate::rng::episode_seed;
use crate::{Error, Result};

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "BANDITBENCH_THREADS";

/// Runs repeat `repeat` of grid cell `cell`.
///
/// The environment (shuffle or synthetic draws) and the policy are both seeded
/// with `seed ⊕ repeat`, so every cell and algorithm sees the same data order
/// for a given repeat.
pub fn run_episode(
    cfg: &ExperimentConfig,
    source: &DataSource,
    cell_index: usize,
    cell: Cell,
    repeat: usize,
) -> Result<RegretTrace> {
    let seed = episode_seed(cfg.seed, repeat);
    let env = source.environment(seed, cfg.duplicate_half)?;
    let policy_cfg = cfg.cell_policy(cell);
    let mut policy = build_policy(&policy_cfg, env.context_dim(), seed)?;
    let meta = TraceMeta {
        algorithm: policy_cfg.algorithm,
        repeat,
        seed,
        delay: cfg.delay,
        cell: cell_index,
        lambda: cell.lambda,
        nu: cell.nu,
        epsilon: cell.epsilon,
    };
    run_policy(policy.as_mut(), env.as_ref(), cfg.horizon, cfg.delay, meta, &mut |_| {})
}

/// All repeats of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub index: usize,
    pub cell: Cell,
    pub summary: Summary,
    #[serde(skip)]
    pub traces: Vec<RegretTrace>,
}

/// Every cell of a grid for one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub algorithm: Algorithm,
    pub cells: Vec<CellResult>,
    /// Index into `cells` of the lowest mean total regret.
    pub best: usize,
}

impl GridResult {
    pub fn best_cell(&self) -> &CellResult {
        &self.cells[self.best]
    }
}

/// Index of the best cell: lowest mean, ties toward smaller `ν`, then
/// smaller `λ`, then the earlier cell.
pub fn best_cell_index(cells: &[(Cell, f64)]) -> Option<usize> {
    (0..cells.len()).min_by(|&a, &b| {
        let (ca, ma) = cells[a];
        let (cb, mb) = cells[b];
        ma.total_cmp(&mb)
            .then(ca.nu.total_cmp(&cb.nu))
            .then(ca.lambda.total_cmp(&cb.lambda))
            .then(a.cmp(&b))
    })
}

/// Worker pool size: `BANDITBENCH_THREADS` if set and positive, otherwise
/// rayon's default.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs `f` inside a pool sized by [`thread_count`].
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs every repeat of every cell of `cfg.grid` in parallel.
pub fn run_grid(cfg: &ExperimentConfig, source: &DataSource) -> Result<GridResult> {
    cfg.validate()?;
    let cells = cfg.grid.cells();
    if cells.is_empty() {
        return Err(Error::Empty("hyperparameter grid"));
    }
    for &cell in &cells {
        cfg.cell_policy(cell).validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.repeats).map(move |r| (c, r)))
        .collect();
    let traces: Vec<RegretTrace> = with_pool(|| {
        jobs.par_iter()
            .map(|&(c, r)| run_episode(cfg, source, c, cells[c], r))
            .collect::<Result<Vec<_>>>()
    })??;

    let mut results = Vec::with_capacity(cells.len());
    let mut iter = traces.into_iter();
    for (index, &cell) in cells.iter().enumerate() {
        let traces: Vec<RegretTrace> = iter.by_ref().take(cfg.repeats).collect();
        let summary = summarize(&traces)?;
        results.push(CellResult {
            index,
            cell,
            summary,
            traces,
        });
    }
    let keyed: Vec<(Cell, f64)> = results.iter().map(|r| (r.cell, r.summary.mean)).collect();
    let best = best_cell_index(&keyed).ok_or(Error::Empty("hyperparameter grid"))?;
    Ok(GridResult {
        algorithm: cfg.policy.algorithm,
        cells: results,
        best,
    })
}
