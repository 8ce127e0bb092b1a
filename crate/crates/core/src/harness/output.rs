use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::episode::{RegretTrace, RoundRecord, TraceMeta};
use super::grid::GridResult;
use crate::{Error, Result};

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TraceLine {
    Meta(TraceMeta),
    Round(RoundRecord),
}

/// Output switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputOptions {
    /// Write measured per-round wall-clock times; when off every `wall_us` is
    /// written as 0 and the files are fully reproducible.
    pub timing: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self { timing: true }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes a trace as JSON lines: a `meta` line followed by one `round` line
/// per round.
pub fn write_trace(path: &Path, trace: &RegretTrace, opts: OutputOptions) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    serde_json::to_writer(&mut w, &TraceLine::Meta(trace.meta.clone()))?;
    w.write_all(b"\n").map_err(io)?;
    for r in &trace.records {
        let mut r = r.clone();
        if !opts.timing {
            r.wall_us = 0;
        }
        serde_json::to_writer(&mut w, &TraceLine::Round(r))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_trace(path: &Path) -> Result<RegretTrace> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut meta = None;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line)? {
            TraceLine::Meta(m) if meta.is_none() => meta = Some(m),
            TraceLine::Meta(_) => return Err(Error::format(path, format!("line {}: second meta line", i + 1))),
            TraceLine::Round(r) => records.push(r),
        }
    }
    let meta = meta.ok_or_else(|| Error::format(path, "no meta line"))?;
    Ok(RegretTrace { meta, records })
}

/// File name of a trace inside the output directory.
pub fn trace_path(dir: &Path, meta: &TraceMeta) -> PathBuf {
    dir.join("traces").join(format!(
        "{}_cell{:03}_rep{:03}.jsonl",
        meta.algorithm, meta.cell, meta.repeat
    ))
}

/// Writes everything for a set of grid results into `dir`:
///
/// - `traces/*.jsonl`, one per episode;
/// - `summary.csv`, one row per (algorithm, cell);
/// - `curves.csv`, `T` rows per algorithm with the best cell's mean
///   cumulative regret and its standard error.
pub fn emit_outputs(dir: &Path, results: &[GridResult], opts: OutputOptions) -> Result<()> {
    for result in results {
        for cell in &result.cells {
            for trace in &cell.traces {
                write_trace(&trace_path(dir, &trace.meta), trace, opts)?;
            }
        }
    }

    let summary_path = dir.join("summary.csv");
    let mut w = csv::Writer::from_writer(create(&summary_path)?);
    w.write_record([
        "algorithm", "cell", "lambda", "nu", "epsilon", "repeats", "mean", "std", "stderr", "best",
    ])?;
    for result in results {
        for cell in &result.cells {
            let s = &cell.summary;
            w.write_record([
                result.algorithm.to_string(),
                cell.index.to_string(),
                cell.cell.lambda.to_string(),
                cell.cell.nu.to_string(),
                cell.cell.epsilon.to_string(),
                s.repeats.to_string(),
                s.mean.to_string(),
                s.std.to_string(),
                s.stderr.to_string(),
                (cell.index == result.best).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(&summary_path, e))?;

    let curves_path = dir.join("curves.csv");
    let mut w = csv::Writer::from_writer(create(&curves_path)?);
    w.write_record(["algorithm", "t", "mean_cumulative_regret", "stderr"])?;
    for result in results {
        let s = &result.best_cell().summary;
        for (t, (m, se)) in s.curve_mean.iter().zip(&s.curve_stderr).enumerate() {
            w.write_record([
                result.algorithm.to_string(),
                (t + 1).to_string(),
                m.to_string(),
                se.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(&curves_path, e))
}
