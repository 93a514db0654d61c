//! The two SDP-driven four-coloring heuristics.
//!
//! Both start from a `K_4` `{k_1..k_4}` (the anchors), solve the cost
//! program and grow color classes `S_q = {v : X_{v,k_q} = 1}` by adding cost
//! entries that pull one undecided vertex at a time towards an anchor. They
//! differ only in the cost update:
//!
//! * [`Algorithm::Chained`] rebuilds `C` from scratch, linking consecutive
//!   members of every class with `−1`;
//! * [`Algorithm::Direct`] sets the single entry `C_{v,k_q} = −1`.
//!
//! A run stops `colored` once the primal solution has rank 3, and `failed`
//! when the scanned vertex has been rejected at all four anchors or a full
//! cyclic pass finds no admissible (vertex, anchor) pair.

use std::fmt;

use crate::certificates::{certify_cost, CertificateReport};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::formulations::{build_cost_sdp, solve_cost};
use crate::graph::{find_clique, validate_coloring, Coloring, Graph};
use crate::numlin::{self, SymMatrix};
use crate::sdp::{SdpStatus, SolverOptions};

/// Which cost update to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Algorithm 1: chained class costs.
    Chained,
    /// Algorithm 2: direct vertex–anchor costs.
    Direct,
}

impl Algorithm {
    pub fn from_number(n: u32) -> Option<Self> {
        match n {
            1 => Some(Algorithm::Chained),
            2 => Some(Algorithm::Direct),
            _ => None,
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Algorithm::Chained => 1,
            Algorithm::Direct => 2,
        }
    }
}

/// Result of one cost-program solve inside a heuristic.
#[derive(Clone, Debug)]
pub struct ModifiedSolve {
    pub x: SymMatrix,
    pub s: SymMatrix,
    pub rank_primal: usize,
    pub rank_dual: usize,
    pub status: SdpStatus,
    pub rel_error: f64,
    /// Whether the solve was accepted (converged, or within the relaxed
    /// tolerance, possibly after the retry).
    pub accepted: bool,
    pub retried: bool,
}

/// Solves the cost program with `k = 4` and cost `c`.
///
/// The first attempt runs to `cfg.heuristic_gap`; its best iterate is kept
/// if it reaches `cfg.relaxed_gap`. Otherwise one retry with the more
/// conservative step fraction `cfg.retry_step_fraction` runs to
/// `cfg.relaxed_gap`.
pub fn solve_modified(g: &Graph, c: &SymMatrix, cfg: &Config) -> Result<ModifiedSolve> {
    let inst = build_cost_sdp(g, 4, c)?;
    let first = SolverOptions { tol: cfg.heuristic_gap, max_iter: cfg.max_iter, ..SolverOptions::default() };
    let mut sol = solve_cost(&inst, &first)?;
    let ok = |s: &crate::formulations::CostSolution| s.status == SdpStatus::Optimal || s.rel_error <= cfg.relaxed_gap;
    let mut retried = false;
    if !ok(&sol) {
        let retry = SolverOptions { tol: cfg.relaxed_gap, step_fraction: cfg.retry_step_fraction, ..first };
        sol = solve_cost(&inst, &retry)?;
        retried = true;
    }
    Ok(ModifiedSolve {
        rank_primal: numlin::numerical_rank(&sol.x, cfg.rank_tau)?,
        rank_dual: numlin::numerical_rank(&sol.s, cfg.rank_tau)?,
        accepted: ok(&sol),
        status: sol.status,
        rel_error: sol.rel_error,
        x: sol.x,
        s: sol.s,
        retried,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogAction {
    Try,
    Accept,
    Reject,
    Rebuild,
}

impl fmt::Display for LogAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogAction::Try => "try",
            LogAction::Accept => "accept",
            LogAction::Reject => "reject",
            LogAction::Rebuild => "rebuild",
        })
    }
}

/// One trace line. `step` is the number of solves performed so far;
/// `vertex` and `anchor` are 0-based and printed 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogEntry {
    pub step: usize,
    pub vertex: usize,
    pub anchor: usize,
    pub action: LogAction,
    pub rank: usize,
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step={} vertex={} anchor={} action={} rank={}",
            self.step,
            self.vertex + 1,
            self.anchor + 1,
            self.action,
            self.rank
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeuristicStatus {
    Colored,
    Failed,
    SolverError,
}

impl fmt::Display for HeuristicStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeuristicStatus::Colored => "colored",
            HeuristicStatus::Failed => "failed",
            HeuristicStatus::SolverError => "solver-error",
        })
    }
}

#[derive(Clone, Debug)]
pub struct HeuristicOutcome {
    pub algorithm: Algorithm,
    pub status: HeuristicStatus,
    pub coloring: Option<Coloring>,
    /// Primal rank of the final solution. When the iterate rounds to a
    /// proper coloring's reference matrix (see [`HeuristicOutcome::rounded`])
    /// this is the rank of that reference matrix.
    pub final_rank: usize,
    pub solves: usize,
    pub log: Vec<LogEntry>,
    /// The anchors `k_1..k_4`.
    pub clique: Vec<usize>,
    /// Vertices aligned with some anchor in the last accepted solution.
    pub aligned: Vec<usize>,
    /// Termination was decided by rounding rather than by the rank count.
    pub rounded: bool,
    pub reason: Option<String>,
}

impl HeuristicOutcome {
    /// Trace lines in the `step=.. vertex=.. anchor=.. action=.. rank=..` format.
    pub fn log_text(&self) -> String {
        self.log.iter().map(|e| format!("{e}\n")).collect()
    }
}

/// Mutable state of one run.
pub struct HeuristicState<'a> {
    g: &'a Graph,
    cfg: &'a Config,
    algo: Algorithm,
    clique: Vec<usize>,
    cost: SymMatrix,
    classes: Vec<Vec<usize>>,
    badcolors: Vec<usize>,
    log: Vec<LogEntry>,
    solves: usize,
    x: SymMatrix,
    rank: usize,
    rounded: bool,
}

impl<'a> HeuristicState<'a> {
    fn new(g: &'a Graph, algo: Algorithm, cfg: &'a Config) -> Result<Self> {
        let clique = find_clique(g, 4).ok_or_else(|| Error::domain("graph has no K_4"))?;
        let n = g.n();
        Ok(HeuristicState {
            g,
            cfg,
            algo,
            clique,
            cost: SymMatrix::zeros(n),
            classes: vec![Vec::new(); 4],
            badcolors: Vec::new(),
            log: Vec::new(),
            solves: 0,
            x: SymMatrix::zeros(n),
            rank: n,
            rounded: false,
        })
    }

    fn budget(&self) -> usize {
        match self.cfg.solve_budget {
            0 => 4 * self.g.n() * self.g.n(),
            b => b,
        }
    }

    fn is_one(&self, v: f64) -> bool {
        (v - 1.0).abs() <= self.cfg.align_tol
    }

    fn aligned(&self, v: usize, q: usize) -> bool {
        self.is_one(self.x.get(v, self.clique[q]))
    }

    /// Re-solves with the current cost; `Ok(false)` on an unusable solve.
    fn solve(&mut self) -> Result<bool> {
        let sol = solve_modified(self.g, &self.cost, self.cfg)?;
        self.solves += 1;
        if !sol.accepted {
            return Ok(false);
        }
        self.x = sol.x;
        self.rank = sol.rank_primal;
        self.rounded = false;
        if self.rank > 3 && self.rounds_to_coloring().is_some() {
            self.rounded = true;
        }
        Ok(true)
    }

    fn done(&self) -> bool {
        self.rank <= 3 || self.rounded
    }

    fn anchor_classes(&self) -> Vec<Vec<usize>> {
        (0..4).map(|q| (0..self.g.n()).filter(|&v| self.aligned(v, q)).collect()).collect()
    }

    /// The coloring whose reference matrix `X` is within `align_tol` of,
    /// if every vertex sits on exactly one anchor and the classes are proper.
    fn rounds_to_coloring(&self) -> Option<Coloring> {
        let n = self.g.n();
        let mut col = vec![usize::MAX; n];
        for (q, cl) in self.anchor_classes().iter().enumerate() {
            for &v in cl {
                if col[v] != usize::MAX {
                    return None;
                }
                col[v] = q;
            }
        }
        if col.contains(&usize::MAX) {
            return None;
        }
        let c = Coloring::new(4, col).ok()?;
        if !validate_coloring(self.g, &c) {
            return None;
        }
        let close = (0..n).all(|i| {
            (i..n).all(|j| {
                let want = if c.color(i) == c.color(j) { 1.0 } else { -1.0 / 3.0 };
                (self.x.get(i, j) - want).abs() <= self.cfg.align_tol
            })
        });
        close.then_some(c)
    }

    fn record(&mut self, vertex: usize, q: usize, action: LogAction) {
        self.log.push(LogEntry { step: self.solves, vertex, anchor: self.clique[q], action, rank: self.rank });
    }

    fn rebuild_chained_cost(&mut self) {
        let mut c = SymMatrix::zeros(self.g.n());
        for cl in &self.classes {
            for w in cl.windows(2) {
                c.set(w[0], w[1], -1.0);
            }
        }
        self.cost = c;
    }

    fn outcome(self, status: HeuristicStatus, coloring: Option<Coloring>, reason: Option<String>) -> HeuristicOutcome {
        let aligned = (0..self.g.n()).filter(|&v| (0..4).any(|q| self.aligned(v, q))).collect();
        let final_rank = match (&coloring, self.rounded) {
            (Some(_), true) => 3,
            _ => self.rank,
        };
        HeuristicOutcome {
            algorithm: self.algo,
            status,
            coloring,
            final_rank,
            solves: self.solves,
            log: self.log,
            clique: self.clique,
            aligned,
            rounded: self.rounded,
            reason,
        }
    }

    fn run(mut self) -> Result<HeuristicOutcome> {
        let n = self.g.n();
        let budget = self.budget();
        let solver_error =
            |s: Self| Ok(s.outcome(HeuristicStatus::SolverError, None, Some("SDP solve did not converge".into())));
        if !self.solve()? {
            return solver_error(self);
        }
        let mut i = 0usize;
        // (vertex, anchor index, previous last member of the class)
        let mut pending: Option<(usize, usize, Option<usize>)> = None;
        let mut check_pending = true;
        // (vertex, anchor) pairs rejected under the cost matrix `memo`.
        let mut rejected: Vec<(usize, usize)> = Vec::new();
        let mut memo: Option<SymMatrix> = None;

        while !self.done() {
            if self.solves >= budget {
                return Ok(self.outcome(
                    HeuristicStatus::Failed,
                    None,
                    Some(format!("solve budget {budget} exhausted")),
                ));
            }
            if let Some((v, q, prev)) = pending {
                if check_pending && !self.aligned(v, q) {
                    self.badcolors.push(q);
                    rejected.push((v, q));
                    match self.algo {
                        Algorithm::Chained => {
                            if let Some(p) = prev {
                                self.cost.set(v, p, 0.0);
                            }
                        }
                        Algorithm::Direct => self.cost.set(v, self.clique[q], 0.0),
                    }
                    if !self.solve()? {
                        return solver_error(self);
                    }
                    self.record(v, q, LogAction::Reject);
                    check_pending = false;
                    continue;
                }
                if check_pending {
                    self.record(v, q, LogAction::Accept);
                }
            }
            check_pending = true;
            self.classes = self.anchor_classes();
            let colored: Vec<bool> = (0..n).map(|v| self.classes.iter().any(|c| c.contains(&v))).collect();
            if memo.as_ref() != Some(&self.cost) {
                rejected.clear();
                memo = Some(self.cost.clone());
            }

            let mut advanced = 0usize;
            let q = loop {
                if !colored[i] {
                    let pick = (0..4).find(|&q| {
                        if self.badcolors.contains(&q) || rejected.contains(&(i, q)) {
                            return false;
                        }
                        let x = self.x.get(i, self.clique[q]);
                        !self.is_one(x) && (x + 1.0 / 3.0).abs() > self.cfg.align_tol
                    });
                    if let Some(q) = pick {
                        break q;
                    }
                }
                if self.badcolors.len() == 4 {
                    let reason = format!("vertex {} rejected at all four anchors", i + 1);
                    return Ok(self.outcome(HeuristicStatus::Failed, None, Some(reason)));
                }
                i = (i + 1) % n;
                self.badcolors.clear();
                advanced += 1;
                if advanced > n {
                    let reason = "a full pass found no admissible vertex and anchor".to_string();
                    return Ok(self.outcome(HeuristicStatus::Failed, None, Some(reason)));
                }
            };

            let prev = match self.algo {
                Algorithm::Chained => {
                    let prev = self.classes[q].last().copied();
                    self.classes[q].push(i);
                    self.rebuild_chained_cost();
                    self.record(i, q, LogAction::Rebuild);
                    prev
                }
                Algorithm::Direct => {
                    self.cost.set(i, self.clique[q], -1.0);
                    None
                }
            };
            pending = Some((i, q, prev));
            if !self.solve()? {
                return solver_error(self);
            }
            self.record(i, q, LogAction::Try);
        }

        if let Some((v, q, _)) = pending {
            if check_pending && self.aligned(v, q) {
                self.record(v, q, LogAction::Accept);
            }
        }
        match self.rounds_to_coloring() {
            Some(c) => Ok(self.outcome(HeuristicStatus::Colored, Some(c), None)),
            None => {
                let reason = "rank-3 solution does not align every vertex with an anchor".to_string();
                Ok(self.outcome(HeuristicStatus::Failed, None, Some(reason)))
            }
        }
    }
}

/// Runs the chosen heuristic on `g`, which must contain a `K_4`.
pub fn run_heuristic(g: &Graph, algo: Algorithm, cfg: &Config) -> Result<HeuristicOutcome> {
    HeuristicState::new(g, algo, cfg)?.run()
}

pub fn heuristic1(g: &Graph, cfg: &Config) -> Result<HeuristicOutcome> {
    run_heuristic(g, Algorithm::Chained, cfg)
}

pub fn heuristic2(g: &Graph, cfg: &Config) -> Result<HeuristicOutcome> {
    run_heuristic(g, Algorithm::Direct, cfg)
}

/// Post-hoc certificate for a colored outcome: builds the coloring-dependent
/// cost matrix and dual assignment for the extracted coloring and verifies
/// them, establishing dual rank at least `n − 3`.
pub fn finalize_certificate(g: &Graph, outcome: &HeuristicOutcome, cfg: &Config) -> Result<CertificateReport> {
    if outcome.status != HeuristicStatus::Colored {
        return Err(Error::domain(format!("cannot certify a run with status {}", outcome.status)));
    }
    let c = outcome.coloring.as_ref().ok_or_else(|| Error::Numerical("colored outcome without a coloring".into()))?;
    if !validate_coloring(g, c) {
        return Err(Error::Numerical("extracted coloring is not proper".into()));
    }
    certify_cost(g, c, cfg, false)
}
