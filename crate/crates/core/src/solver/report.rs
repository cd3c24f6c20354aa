use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Method;
use crate::error::{Error, Result};
use crate::linalg::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub iter: usize,
    pub rrn: f64,
    pub elapsed_seconds: f64,
}

/// Extremes of the greedy threshold bound over an instrumented run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentationSummary {
    pub checked: usize,
    pub min_gamma: f64,
    /// Smallest `δ_k ‖A‖_F² ‖B‖_F² / γ_k` seen.
    pub min_ratio: f64,
}

impl Default for InstrumentationSummary {
    fn default() -> Self {
        Self {
            checked: 0,
            min_gamma: f64::INFINITY,
            min_ratio: f64::INFINITY,
        }
    }
}

impl InstrumentationSummary {
    pub(crate) fn record(&mut self, gamma: f64, scaled_delta: f64) {
        self.checked += 1;
        self.min_gamma = self.min_gamma.min(gamma);
        self.min_ratio = self.min_ratio.min(scaled_delta / gamma);
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub method: Method,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub history: Vec<HistoryPoint>,
    pub final_iter: usize,
    /// Relative residual of the maintained residual at exit.
    pub final_rrn: f64,
    /// Relative residual recomputed from the final iterate.
    pub final_rrn_recomputed: f64,
    pub converged: bool,
    pub x_final: Mat,
    /// `‖X − X*‖_F / ‖X*‖_F` when a reference solution is known.
    pub error_to_oracle: Option<f64>,
    pub max_drift: f64,
    pub elapsed_seconds: f64,
    pub instrumentation: Option<InstrumentationSummary>,
}

/// The summary record written next to a history file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummaryJson {
    pub method: Method,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub iters: usize,
    pub converged: bool,
    /// Equal to the last history row.
    pub final_rrn: f64,
    pub final_rrn_recomputed: f64,
    pub error_to_oracle: Option<f64>,
    pub seed: u64,
    pub elapsed_seconds: f64,
}

impl ConvergenceReport {
    pub fn summary(&self) -> RunSummaryJson {
        RunSummaryJson {
            method: self.method,
            theta: self.theta,
            alpha: self.alpha,
            beta: self.beta,
            iters: self.final_iter,
            converged: self.converged,
            final_rrn: self.final_rrn,
            final_rrn_recomputed: self.final_rrn_recomputed,
            error_to_oracle: self.error_to_oracle,
            seed: self.seed,
            elapsed_seconds: self.elapsed_seconds,
        }
    }

    pub fn write_history_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for h in &self.history {
            w.serialize(h)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_history(&self, path: &Path) -> Result<()> {
        self.write_history_csv(File::create(path)?)
    }

    pub fn save_summary(&self, path: &Path) -> Result<()> {
        let f = File::create(path)?;
        serde_json::to_writer_pretty(f, &self.summary())?;
        Ok(())
    }
}

pub fn read_history_csv(path: &Path) -> Result<Vec<HistoryPoint>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
