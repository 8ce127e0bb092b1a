mod common;

use std::sync::Arc;

use banditbench::data::LabeledDataset;
use banditbench::harness::{
    emit_outputs, is_flush_round, read_trace, run_episode, run_grid, run_policy, summarize, write_trace,
    ClassificationEnv, DataSource, DatasetRef, Environment, ExperimentConfig, GridSpec, OutputOptions,
    RegretTrace, SyntheticEnv, SyntheticReward, SyntheticSpec, TraceMeta,
};
use banditbench::nn::{TrainConfig, TrainMode};
use banditbench::policies::{build_policy, Algorithm, Decision, Policy, PolicyConfig, UniformRandom};
use banditbench::posterior::PosteriorMode;
use banditbench::rng::{stream_rng, BenchRng, Stream};
use banditbench::Result;

use common::{gaussian_vec, rng};

fn meta(algorithm: Algorithm, seed: u64, delay: usize) -> TraceMeta {
    TraceMeta {
        algorithm,
        repeat: 0,
        seed,
        delay,
        cell: 0,
        lambda: 1.0,
        nu: 0.1,
        epsilon: 0.0,
    }
}

fn gaussian_dataset(n: usize, classes: usize, dim: usize, seed: u64) -> LabeledDataset {
    let mut r = rng(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let features = labels
        .iter()
        .map(|&l| {
            let mut x = gaussian_vec(dim, &mut r);
            x[l % dim] += 3.0;
            x
        })
        .collect();
    LabeledDataset::new(features, labels, classes).unwrap()
}

fn strip_timing(mut trace: RegretTrace) -> RegretTrace {
    for r in &mut trace.records {
        r.wall_us = 0;
    }
    trace
}

#[test]
fn flush_points_for_delay_three() {
    let flushes: Vec<usize> = (1..=10).filter(|&t| is_flush_round(t, 3, 10)).collect();
    assert_eq!(flushes, [3, 6, 9, 10]);
}

#[test]
fn uniform_regret_on_two_classes() {
    // Regret is Binomial(2000, 1/2): mean 1000, sd √500 ≈ 22.4.
    let env = ClassificationEnv::new(&gaussian_dataset(2000, 2, 4, 1), 3, false);
    let trace = run_policy(&mut UniformRandom, &env, 2000, 0, meta(Algorithm::Uniform, 3, 0), &mut |_| {}).unwrap();
    assert!((trace.total_regret() - 1000.0).abs() <= 67.0, "{}", trace.total_regret());
    assert_eq!(trace.total_regret(), trace.mistakes() as f64);
}

/// Plays a precomputed arm sequence, one per round.
struct Scripted {
    arms: Vec<usize>,
    next: std::sync::atomic::AtomicUsize,
}

impl Policy for Scripted {
    fn name(&self) -> &'static str {
        "scripted"
    }

    fn select(&self, contexts: &[Vec<f64>], _rng: &mut BenchRng) -> Result<Decision> {
        let t = self.next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        let arm = self.arms[t];
        let mut scores = vec![0.0; contexts.len()];
        scores[arm] = 1.0;
        Ok(Decision {
            arm,
            scores,
            means: vec![0.0; contexts.len()],
            sigmas: vec![0.0; contexts.len()],
        })
    }

    fn observe(&mut self, _context: &[f64], _reward: f64) -> Result<()> {
        Ok(())
    }
}

#[test]
fn oracle_policy_has_zero_regret() {
    let mut spec = SyntheticSpec::new(SyntheticReward::Cosine);
    spec.rounds = 200;
    let env = SyntheticEnv::new(spec, 9, false).unwrap();
    let arms = (0..200)
        .map(|t| {
            let round = env.round(t).unwrap();
            (0..round.arms())
                .max_by(|&a, &b| round.expected[a].total_cmp(&round.expected[b]))
                .unwrap()
        })
        .collect();
    let mut oracle = Scripted {
        arms,
        next: 0.into(),
    };
    let trace = run_policy(&mut oracle, &env, 200, 5, meta(Algorithm::Uniform, 9, 5), &mut |_| {}).unwrap();
    assert_eq!(trace.total_regret(), 0.0);
    assert!(trace.records.iter().all(|r| r.regret == 0.0));
}

fn neural_cfg() -> PolicyConfig {
    let mut cfg = PolicyConfig::new(Algorithm::NeuralTs);
    cfg.width = 8;
    cfg.posterior = PosteriorMode::Full;
    cfg.train = TrainConfig {
        step_size: 0.01,
        iterations: 5,
        lambda: 1.0,
        mode: TrainMode::FullBatch,
    };
    cfg
}

fn neural_trace(delay: usize) -> RegretTrace {
    let mut spec = SyntheticSpec::new(SyntheticReward::Cosine);
    spec.rounds = 40;
    let env = SyntheticEnv::new(spec, 4, true).unwrap();
    let mut policy = build_policy(&neural_cfg(), env.context_dim(), 4).unwrap();
    strip_timing(run_policy(policy.as_mut(), &env, 40, delay, meta(Algorithm::NeuralTs, 4, 0), &mut |_| {}).unwrap())
}

#[test]
fn delays_zero_and_one_coincide() {
    assert_eq!(neural_trace(0), neural_trace(1));
    assert_ne!(neural_trace(0), neural_trace(4));
}

#[test]
fn policy_is_frozen_between_flushes() {
    let (horizon, delay) = (30, 4);
    let mut spec = SyntheticSpec::new(SyntheticReward::Cosine);
    spec.rounds = horizon;
    let env = SyntheticEnv::new(spec, 8, true).unwrap();
    let probe = env.round(0).unwrap().contexts;
    let mut policy = build_policy(&neural_cfg(), env.context_dim(), 8).unwrap();
    let mut probes: Vec<(usize, bool, Decision)> = Vec::new();
    run_policy(policy.as_mut(), &env, horizon, delay, meta(Algorithm::NeuralTs, 8, delay), &mut |ev| {
        let d = ev.policy.select(&probe, &mut stream_rng(0, Stream::Select, 99)).unwrap();
        probes.push((ev.t, ev.flushed, d));
    })
    .unwrap();
    for pair in probes.windows(2) {
        let ((_, _, before), (t, flushed, after)) = (&pair[0], &pair[1]);
        if *flushed {
            assert_ne!(before, after, "round {t} flushed but the policy did not change");
        } else {
            assert_eq!(before, after, "round {t} changed the policy without a flush");
        }
    }
}

#[test]
fn classification_regret_counts_mistakes() {
    let ds = Arc::new(gaussian_dataset(300, 3, 5, 2));
    let mut cfg = ExperimentConfig::new(
        DatasetRef::Csv {
            path: "unused".into(),
            schema: None,
        },
        Algorithm::LinUcb,
    );
    cfg.horizon = 300;
    let trace = run_episode(&cfg, &DataSource::Classification(ds), 0, GridSpec::single(&cfg.policy).cells()[0], 0).unwrap();
    assert_eq!(trace.total_regret(), trace.mistakes() as f64);
    assert!(trace.mistakes() < 200);
}

fn linear_grid_config() -> ExperimentConfig {
    let mut spec = SyntheticSpec::new(SyntheticReward::Linear);
    spec.rounds = 50;
    let mut cfg = ExperimentConfig::new(DatasetRef::Synthetic(spec), Algorithm::LinTs);
    cfg.horizon = 50;
    cfg.repeats = 8;
    cfg.seed = 5;
    cfg.grid = GridSpec {
        lambdas: vec![0.1, 1.0],
        nus: vec![0.01, 1.0],
        epsilons: vec![0.0],
    };
    cfg
}

#[test]
fn grid_runs_every_cell_and_repeat() {
    let cfg = linear_grid_config();
    let source = cfg.dataset.load().unwrap();
    let result = run_grid(&cfg, &source).unwrap();
    assert_eq!(result.cells.len(), 4);
    let episodes: usize = result.cells.iter().map(|c| c.traces.len()).sum();
    assert_eq!(episodes, 32);
    for cell in &result.cells {
        assert_eq!(cell.summary.repeats, 8);
        let repeats: Vec<usize> = cell.traces.iter().map(|t| t.meta.repeat).collect();
        assert_eq!(repeats, (0..8).collect::<Vec<_>>());
    }
    // Repeats are paired: the same repeat sees the same data in every cell.
    let seeds = |c: usize| result.cells[c].traces.iter().map(|t| t.meta.seed).collect::<Vec<_>>();
    assert_eq!(seeds(0), seeds(3));

    let dir = tempfile::tempdir().unwrap();
    emit_outputs(dir.path(), &[result], OutputOptions::default()).unwrap();
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4);
    let curves = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 50);
    assert_eq!(std::fs::read_dir(dir.path().join("traces")).unwrap().count(), 32);
}

#[test]
fn summary_statistics() {
    let cfg = linear_grid_config();
    let source = cfg.dataset.load().unwrap();
    let cell = cfg.grid.cells()[0];
    let traces: Vec<RegretTrace> = (0..4).map(|r| run_episode(&cfg, &source, 0, cell, r).unwrap()).collect();
    let totals: Vec<f64> = traces.iter().map(|t| t.total_regret()).collect();
    let s = summarize(&traces).unwrap();
    let mean = totals.iter().sum::<f64>() / 4.0;
    let var = totals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
    assert!((s.mean - mean).abs() < 1e-12);
    assert!((s.std - var.sqrt()).abs() < 1e-12);
    assert!((s.stderr - var.sqrt() / 2.0).abs() < 1e-12);
    assert_eq!(s.curve_mean.len(), 50);
    assert!((s.curve_mean[49] - s.mean).abs() < 1e-12);
    assert!(summarize(&[]).is_err());
}

#[test]
fn trace_round_trips_through_jsonl() {
    let trace = neural_trace(3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    write_trace(&path, &trace, OutputOptions { timing: false }).unwrap();
    assert_eq!(read_trace(&path).unwrap(), trace);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1 + trace.records.len());
}

#[test]
fn horizon_beyond_data_is_rejected() {
    let env = ClassificationEnv::new(&gaussian_dataset(10, 2, 3, 0), 0, false);
    let err = run_policy(&mut UniformRandom, &env, 11, 0, meta(Algorithm::Uniform, 0, 0), &mut |_| {});
    assert!(err.is_err());
}
