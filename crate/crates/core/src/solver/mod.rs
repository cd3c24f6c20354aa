//! Relaxed greedy randomized Kaczmarz iterations for `A X B = C`.
//!
//! Three update rules share one greedy selection scheme:
//!
//! * [`Method::MeRgrk`]: plain Kaczmarz projection onto the selected entry,
//! * [`Method::PmRgrk`]: the projection scaled by `α` plus heavy-ball
//!   momentum `β (X⁽ᵏ⁾ − X⁽ᵏ⁻¹⁾)`,
//! * [`Method::NmRgrk`]: an `α`-scaled projection into `Y` followed by the
//!   Nesterov extrapolation `X = Y⁽ᵏ⁺¹⁾ + β (Y⁽ᵏ⁺¹⁾ − Y⁽ᵏ⁾)`.
//!
//! The residual is never recomputed inside the loop. Each step changes it by
//! a rank-one term `u wᵀ` with `u = A a_i` and `w = Bᵀ b_j`, so [`Solver`]
//! maintains it in `O(mp)` and refreshes it from scratch every
//! `refresh_period` iterations.

mod engine;
mod report;
mod select;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSpec;

pub use engine::{solve, solve_from, IterateState, Solver};
pub use report::{
    read_history_csv, ConvergenceReport, HistoryPoint, InstrumentationSummary, RunSummaryJson,
};
pub use select::{
    build_index_set, greedy_threshold, loss_matrix, max_loss, sample_index, THRESHOLD_SLACK,
};

/// Allowed relative drift between the maintained and the recomputed residual.
pub const DRIFT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "me-rgrk")]
    MeRgrk,
    #[serde(rename = "pm-rgrk")]
    PmRgrk,
    #[serde(rename = "nm-rgrk")]
    NmRgrk,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::MeRgrk, Method::PmRgrk, Method::NmRgrk];

    pub fn name(self) -> &'static str {
        match self {
            Method::MeRgrk => "me-rgrk",
            Method::PmRgrk => "pm-rgrk",
            Method::NmRgrk => "nm-rgrk",
        }
    }

    /// Default `(α, β)`. For ME-RGRK these are the values that make the
    /// momentum rules collapse onto it.
    pub fn default_params(self) -> (f64, f64) {
        match self {
            Method::MeRgrk => (1.0, 0.0),
            Method::PmRgrk => (0.9, 0.3),
            Method::NmRgrk => (0.8, 0.5),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "me" | "me-rgrk" | "rgrk" => Ok(Method::MeRgrk),
            "pm" | "pm-rgrk" | "pmrgrk" | "polyak" => Ok(Method::PmRgrk),
            "nm" | "nm-rgrk" | "nmrgrk" | "nesterov" => Ok(Method::NmRgrk),
            _ => Err(Error::InvalidArgument(format!(
                "unknown method '{s}' (expected me-rgrk, pm-rgrk or nm-rgrk)"
            ))),
        }
    }
}

/// How a pair is drawn from the admissible set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Probability proportional to the squared residual entry.
    #[default]
    Proportional,
    Uniform,
}

impl FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proportional" => Ok(Sampling::Proportional),
            "uniform" => Ok(Sampling::Uniform),
            _ => Err(Error::InvalidArgument(format!(
                "unknown sampling rule '{s}' (expected proportional or uniform)"
            ))),
        }
    }
}

/// How residual norms of several right-hand sides are combined into the
/// quantity whose relative decrease is the stopping test. With one
/// right-hand side both choices give the same iteration count up to the
/// tolerance being squared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ResidualMeasure {
    /// `Σ_c ‖R_c‖_F`
    #[default]
    Frobenius,
    /// `Σ_c ‖R_c‖_F²`
    Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub tol_rrn: f64,
    pub max_iters: usize,
    pub rng: RngSpec,
    pub refresh_period: usize,
    pub sampling: Sampling,
    pub history_stride: usize,
    /// Upper bound on the memory spent on the Gram matrices `A Aᵀ` and
    /// `Bᵀ B`; when they do not fit, `u` and `w` are formed by matvecs.
    pub gram_budget_bytes: usize,
    pub measure: ResidualMeasure,
    /// Check the greedy threshold bound at every iteration.
    pub instrument: bool,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        let (alpha, beta) = method.default_params();
        Self {
            method,
            theta: 0.9,
            alpha,
            beta,
            tol_rrn: 1e-5,
            max_iters: 100_000,
            rng: RngSpec::solver(0),
            refresh_period: 5000,
            sampling: Sampling::Proportional,
            history_stride: 10,
            gram_budget_bytes: 512 << 20,
            measure: ResidualMeasure::Frobenius,
            instrument: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng = RngSpec::solver(seed);
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_params(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol_rrn = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return bad(format!("theta must lie in (0, 1], got {}", self.theta));
        }
        if !(self.tol_rrn >= 0.0) {
            return bad(format!("tol_rrn must be nonnegative, got {}", self.tol_rrn));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.refresh_period == 0 {
            return bad("refresh_period must be at least 1".into());
        }
        if self.history_stride == 0 {
            return bad("history_stride must be at least 1".into());
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return bad("alpha and beta must be finite".into());
        }
        if self.beta < 0.0 {
            return bad(format!("beta must be nonnegative, got {}", self.beta));
        }
        if self.method != Method::MeRgrk && !(self.alpha > 0.0 && self.alpha < 2.0) {
            log::warn!(
                "alpha = {} lies outside (0, 2); convergence is not guaranteed",
                self.alpha
            );
        }
        Ok(())
    }
}
