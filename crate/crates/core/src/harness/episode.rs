use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::env::Environment;
use crate::policies::{Algorithm, Policy};
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// One logged round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub arm: usize,
    pub reward: f64,
    pub regret: f64,
    pub cumulative_regret: f64,
    pub sigma: f64,
    /// Wall-clock time of the round in microseconds (excluded from
    /// determinism comparisons).
    pub wall_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub algorithm: Algorithm,
    pub repeat: usize,
    pub seed: u64,
    pub delay: usize,
    pub cell: usize,
    pub lambda: f64,
    pub nu: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub meta: TraceMeta,
    pub records: Vec<RoundRecord>,
}

impl RegretTrace {
    pub fn total_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cumulative_regret)
    }

    pub fn cumulative(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cumulative_regret).collect()
    }

    /// Number of rounds whose chosen arm earned less than the best arm.
    pub fn mistakes(&self) -> usize {
        self.records.iter().filter(|r| r.regret > 0.0).count()
    }
}

/// Whether round `t` (1-based) delivers the buffered observations.
///
/// Delay `0` and `1` both flush every round; otherwise flushes happen at
/// multiples of `delay` and at the final round.
pub fn is_flush_round(t: usize, delay: usize, horizon: usize) -> bool {
    delay <= 1 || t % delay == 0 || t == horizon
}

/// Passed to an episode observer after each round.
pub struct RoundEvent<'a> {
    pub t: usize,
    pub flushed: bool,
    pub policy: &'a dyn Policy,
}

/// Runs `horizon` rounds of `policy` against `env`.
///
/// Each round: build the arm contexts, ask the policy for an arm (using the
/// episode's selection stream), pay that arm's reward, and buffer the
/// observation. Buffered observations reach `observe` only on flush rounds.
pub fn run_policy(
    policy: &mut dyn Policy,
    env: &dyn Environment,
    horizon: usize,
    delay: usize,
    meta: TraceMeta,
    observer: &mut dyn FnMut(RoundEvent<'_>),
) -> Result<RegretTrace> {
    if horizon > env.len() {
        return Err(Error::Exhausted {
            horizon,
            available: env.len(),
        });
    }
    let mut rng = stream_rng(meta.seed, Stream::Select, 0);
    let mut pending: Vec<(Vec<f64>, f64)> = Vec::with_capacity(delay.max(1));
    let mut records = Vec::with_capacity(horizon);
    let mut cumulative = 0.0;

    for t in 1..=horizon {
        let start = Instant::now();
        let round = env.round(t - 1)?;
        let decision = policy.select(&round.contexts, &mut rng)?;
        let arm = decision.arm;
        let reward = round.rewards[arm];
        let regret = round.regret(arm);
        cumulative += regret;
        pending.push((round.contexts[arm].clone(), reward));

        let flushed = is_flush_round(t, delay, horizon);
        if flushed {
            for (x, r) in pending.drain(..) {
                policy.observe(&x, r)?;
            }
        }
        records.push(RoundRecord {
            t,
            arm,
            reward,
            regret,
            cumulative_regret: cumulative,
            sigma: decision.chosen_sigma(),
            wall_us: start.elapsed().as_micros() as u64,
        });
        observer(RoundEvent {
            t,
            flushed,
            policy: &*policy,
        });
    }
    Ok(RegretTrace { meta, records })
}
