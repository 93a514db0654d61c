//! Tolerance knobs, overridable from a `key=value` text file.

use crate::error::{Error, Result};
use crate::formulations::DEFAULT_ALIGN_TOL;
use crate::numlin::DEFAULT_RANK_TAU;
use crate::sdp::SolverOptions;

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Relative eigenvalue threshold for numerical rank.
    pub rank_tau: f64,
    /// Tolerance for "X_ij = 1" membership tests and coloring extraction.
    pub align_tol: f64,
    /// Stopping tolerance for general solves.
    pub solver_gap: f64,
    pub max_iter: usize,
    /// Stopping tolerance for the heuristics' solves; tighter than
    /// `solver_gap` so that ranks read off the iterate are reliable.
    pub heuristic_gap: f64,
    /// Tolerance at which a heuristic solve that missed `heuristic_gap` is
    /// still accepted, and the target of the single retry.
    pub relaxed_gap: f64,
    /// Fraction-to-boundary used by the retry.
    pub retry_step_fraction: f64,
    /// Per-graph cap on heuristic SDP solves (0 means the 4·n² bound).
    pub solve_budget: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            rank_tau: DEFAULT_RANK_TAU,
            align_tol: DEFAULT_ALIGN_TOL,
            solver_gap: 1e-8,
            max_iter: 200,
            heuristic_gap: 1e-10,
            relaxed_gap: 1e-7,
            retry_step_fraction: 0.9,
            solve_budget: 0,
        }
    }
}

impl Config {
    pub fn solver(&self) -> SolverOptions {
        SolverOptions { tol: self.solver_gap, max_iter: self.max_iter, ..SolverOptions::default() }
    }

    /// Applies `key=value` lines; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::parse(idx + 1, "expected key=value"))?;
            let (key, value) = (key.trim(), value.trim());
            let real = || -> Result<f64> {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite() && *v > 0.0)
                    .ok_or_else(|| Error::parse(idx + 1, format!("'{key}' needs a positive number, got '{value}'")))
            };
            let int = || -> Result<usize> {
                value.parse().map_err(|_| Error::parse(idx + 1, format!("'{key}' needs an integer, got '{value}'")))
            };
            match key {
                "rank_tau" => cfg.rank_tau = real()?,
                "align_tol" => cfg.align_tol = real()?,
                "solver_gap" => cfg.solver_gap = real()?,
                "max_iter" => cfg.max_iter = int()?,
                "heuristic_gap" => cfg.heuristic_gap = real()?,
                "relaxed_gap" => cfg.relaxed_gap = real()?,
                "retry_step_fraction" => cfg.retry_step_fraction = real()?,
                "solve_budget" => cfg.solve_budget = int()?,
                _ => return Err(Error::parse(idx + 1, format!("unknown key '{key}'"))),
            }
        }
        Ok(cfg)
    }
}
