use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::silhouette::MetricReport;
use crate::{Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions<T> {
    /// Number of full-batch iterations (every view, every iteration).
    pub budget: usize,
    pub lr: T,
    /// Adam's denominator guard ε.
    pub adam_eps: T,
    /// Seeds the per-iteration sample jitter when enabled.
    pub seed: u64,
    /// Call the snapshot hook every this many iterations; 0 disables it.
    pub snapshot_every: usize,
    /// Log progress every this many iterations; 0 disables it.
    pub log_every: usize,
}

impl<T: Real> OptimizeOptions<T> {
    pub fn new(budget: usize, lr: T) -> Self {
        Self {
            budget,
            lr,
            adam_eps: T::lit(1e-8),
            seed: 0,
            snapshot_every: 0,
            log_every: 0,
        }
    }
}

/// One line of `history.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub l_img: f64,
    pub l_norm: f64,
    pub l_lap: f64,
    pub l_edge: f64,
    pub l_total: f64,
    pub iou: Vec<f64>,
    pub dice: Vec<f64>,
}

/// Losses and metrics recorded before each update, plus the scores of the
/// final parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationRun {
    pub budget: usize,
    pub seed: u64,
    pub snapshot_every: usize,
    pub history: Vec<IterationRecord>,
    pub final_report: MetricReport,
}

impl OptimizationRun {
    pub fn history_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for rec in &self.history {
            let _ = writeln!(out, "{}", serde_json::to_string(rec)?);
        }
        Ok(out)
    }

    /// `l_total` over iterations.
    pub fn losses(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.l_total).collect()
    }

    /// Trailing moving average of `l_total` over `window` iterations.
    pub fn smoothed_losses(&self, window: usize) -> Vec<f64> {
        let losses = self.losses();
        let window = window.max(1);
        (0..losses.len())
            .filter(|&i| i + 1 >= window)
            .map(|i| losses[i + 1 - window..=i].iter().sum::<f64>() / window as f64)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_with(losses: &[f64]) -> OptimizationRun {
        OptimizationRun {
            budget: losses.len(),
            seed: 0,
            snapshot_every: 0,
            history: losses
                .iter()
                .enumerate()
                .map(|(i, &l)| IterationRecord {
                    iter: i,
                    l_img: l,
                    l_norm: 0.0,
                    l_lap: 0.0,
                    l_edge: 0.0,
                    l_total: l,
                    iou: vec![1.0],
                    dice: vec![1.0],
                })
                .collect(),
            final_report: MetricReport::from_views(vec![]),
        }
    }

    #[test]
    fn jsonl_has_one_record_per_line() {
        let run = run_with(&[3.0, 2.0]);
        let text = run.history_jsonl().unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let rec: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        for key in ["iter", "l_img", "l_norm", "l_lap", "l_edge", "l_total", "iou", "dice"] {
            assert!(rec.get(key).is_some(), "missing {key}");
        }
        assert_eq!(rec["iter"], 1);
    }

    #[test]
    fn smoothing_window() {
        let run = run_with(&[4.0, 2.0, 3.0, 1.0]);
        assert_eq!(run.smoothed_losses(2), vec![3.0, 2.5, 2.0]);
    }
}
