use serde::{Deserialize, Serialize};

use super::episode::RegretTrace;
use crate::{Error, Result};

/// Terminal-regret statistics plus per-round curves across repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub repeats: usize,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator; zero for one trace).
    pub std: f64,
    pub stderr: f64,
    /// Mean cumulative regret at each round.
    pub curve_mean: Vec<f64>,
    /// Standard error of the cumulative regret at each round.
    pub curve_stderr: Vec<f64>,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

pub fn summarize(traces: &[RegretTrace]) -> Result<Summary> {
    let first = traces.first().ok_or(Error::Empty("traces"))?;
    let horizon = first.records.len();
    if let Some(t) = traces.iter().find(|t| t.records.len() != horizon) {
        return Err(Error::DimensionMismatch {
            expected: horizon,
            actual: t.records.len(),
        });
    }
    let n = traces.len();
    let root_n = (n as f64).sqrt();
    let totals: Vec<f64> = traces.iter().map(RegretTrace::total_regret).collect();
    let (mean, std) = mean_std(&totals);

    let mut curve_mean = Vec::with_capacity(horizon);
    let mut curve_stderr = Vec::with_capacity(horizon);
    let mut column = vec![0.0; n];
    for t in 0..horizon {
        for (slot, trace) in column.iter_mut().zip(traces) {
            *slot = trace.records[t].cumulative_regret;
        }
        let (m, s) = mean_std(&column);
        curve_mean.push(m);
        curve_stderr.push(s / root_n);
    }
    Ok(Summary {
        repeats: n,
        mean,
        std,
        stderr: std / root_n,
        curve_mean,
        curve_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[100.0, 300.0]);
        assert_eq!(m, 200.0);
        assert_abs_diff_eq!(s, 141.42135623730951, epsilon = 1e-10);
        assert_eq!(mean_std(&[5.0]), (5.0, 0.0));
    }
}
