//! Per-round logs and cumulative-regret traces.

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// One round of a run. Rounds are numbered from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord<F> {
    pub t: usize,
    pub chosen_arm: usize,
    pub instant_regret: F,
    pub cum_regret: F,
    /// `‖θ̂ − θ*‖` (mean over arms in the multi-parameter setting).
    pub estimate_error: Option<F>,
}

/// Identifies the run a trace came from.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub env: String,
    pub algo: String,
    pub epsilon: f64,
    pub delta: f64,
    pub rep: usize,
    pub seed: u64,
}

/// Cumulative regret on a grid of rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub meta: TraceMeta,
    /// `(t, cum_regret)` with `t` strictly increasing.
    pub points: Vec<(usize, f64)>,
}

/// Rounds logged for a horizon: every `stride`-th round plus the horizon
/// itself, `ceil(T/stride)` points in total.
pub fn log_grid(horizon: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut grid: Vec<usize> = (1..=horizon / stride).map(|i| i * stride).collect();
    if horizon % stride != 0 {
        grid.push(horizon);
    }
    grid
}

impl RegretTrace {
    /// Samples `records` (one per round, in order) on [`log_grid`].
    pub fn from_records<F: Scalar>(meta: TraceMeta, records: &[RoundRecord<F>], stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(invalid("log_stride", "must be at least 1"));
        }
        let points = log_grid(records.len(), stride)
            .into_iter()
            .map(|t| (t, records[t - 1].cum_regret.as_f64()))
            .collect();
        Ok(Self { meta, points })
    }

    pub fn total(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }

    pub fn at(&self, t: usize) -> Option<f64> {
        self.points
            .binary_search_by_key(&t, |p| p.0)
            .ok()
            .map(|i| self.points[i].1)
    }
}
