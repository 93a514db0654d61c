//! Batch runs of the heuristics over plantri corpora, with per-size failure
//! aggregation, CSV output and resumable checkpoints.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::graph::{find_clique, parse_plantri_ascii, Graph};
use crate::heuristics::{run_heuristic, Algorithm, HeuristicStatus};

/// Per-graph outcome in a batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowStatus {
    Colored,
    Failed,
    SolverError,
    /// The graph has no `K_4`, so the heuristics do not apply.
    NoClique,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Colored => "colored",
            RowStatus::Failed => "failed",
            RowStatus::SolverError => "solver-error",
            RowStatus::NoClique => "no-k4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "colored" => RowStatus::Colored,
            "failed" => RowStatus::Failed,
            "solver-error" => RowStatus::SolverError,
            "no-k4" => RowStatus::NoClique,
            _ => return None,
        })
    }

    pub fn is_failure(self) -> bool {
        matches!(self, RowStatus::Failed | RowStatus::SolverError)
    }
}

impl From<HeuristicStatus> for RowStatus {
    fn from(s: HeuristicStatus) -> Self {
        match s {
            HeuristicStatus::Colored => RowStatus::Colored,
            HeuristicStatus::Failed => RowStatus::Failed,
            HeuristicStatus::SolverError => RowStatus::SolverError,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchRow {
    /// 0-based position of the graph in its corpus file.
    pub graph_id: usize,
    pub n: usize,
    pub has_k4: bool,
    pub algorithm: Algorithm,
    pub status: RowStatus,
    pub solves: usize,
    pub wall_ms: f64,
    /// Row restored from a checkpoint (solve count and time not recorded).
    pub resumed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Aggregate {
    pub n: usize,
    pub graphs: usize,
    pub failures: usize,
}

impl Aggregate {
    pub fn failure_rate(&self) -> f64 {
        if self.graphs == 0 {
            0.0
        } else {
            self.failures as f64 / self.graphs as f64
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchReport {
    pub rows: Vec<BatchRow>,
}

impl BatchReport {
    /// Per-`n` totals over rows whose graph contains a `K_4`.
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut by_n: BTreeMap<usize, Aggregate> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.has_k4) {
            let a = by_n.entry(r.n).or_insert(Aggregate { n: r.n, graphs: 0, failures: 0 });
            a.graphs += 1;
            a.failures += usize::from(r.status.is_failure());
        }
        by_n.into_values().collect()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status.is_failure()).count()
    }

    pub fn extend(&mut self, other: BatchReport) {
        self.rows.extend(other.rows);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

fn run_one(idx: usize, g: &Graph, algo: Algorithm, cfg: &Config) -> BatchRow {
    let start = Instant::now();
    let has_k4 = find_clique(g, 4).is_some();
    let (status, solves) = if has_k4 {
        match run_heuristic(g, algo, cfg) {
            Ok(out) => (out.status.into(), out.solves),
            Err(_) => (RowStatus::SolverError, 0),
        }
    } else {
        (RowStatus::NoClique, 0)
    };
    BatchRow {
        graph_id: idx,
        n: g.n(),
        has_k4,
        algorithm: algo,
        status,
        solves,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        resumed: false,
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))
}

/// Runs the heuristic on every graph (skipping graphs without a `K_4` when
/// `filter_k4`) on `jobs` workers. Rows come back in input order.
pub fn run_batch(graphs: &[Graph], algo: Algorithm, filter_k4: bool, cfg: &Config, jobs: usize) -> Result<BatchReport> {
    let selected: Vec<(usize, &Graph)> =
        graphs.iter().enumerate().filter(|(_, g)| !filter_k4 || find_clique(g, 4).is_some()).collect();
    let rows = pool(jobs)?.install(|| selected.par_iter().map(|&(i, g)| run_one(i, g, algo, cfg)).collect());
    Ok(BatchReport { rows })
}

/// Parses a plantri corpus and runs [`run_batch`] on it.
pub fn run_batch_corpus(
    text: &str,
    algo: Algorithm,
    filter_k4: bool,
    cfg: &Config,
    jobs: usize,
) -> Result<BatchReport> {
    run_batch(&parse_plantri_ascii(text)?, algo, filter_k4, cfg, jobs)
}

/// Reads "graph_index status" checkpoint records.
pub fn read_checkpoint(text: &str) -> Result<BTreeMap<usize, RowStatus>> {
    let mut done = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(i), Some(s), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(idx + 1, "checkpoint record must be 'graph_index status'"));
        };
        let i: usize = i.parse().map_err(|_| Error::parse(idx + 1, format!("bad graph index '{i}'")))?;
        let s = RowStatus::parse(s).ok_or_else(|| Error::parse(idx + 1, format!("unknown status '{s}'")))?;
        done.insert(i, s);
    }
    Ok(done)
}

/// Like [`run_batch`], but appends a record per finished graph to
/// `checkpoint` and skips graphs already recorded there.
pub fn run_batch_resumable(
    graphs: &[Graph],
    algo: Algorithm,
    filter_k4: bool,
    cfg: &Config,
    jobs: usize,
    checkpoint: &Path,
) -> Result<BatchReport> {
    let done = match fs::read_to_string(checkpoint) {
        Ok(t) => read_checkpoint(&t)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
        Err(e) => return Err(e.into()),
    };
    let mut file = fs::OpenOptions::new().create(true).append(true).open(checkpoint)?;
    let workers = pool(jobs)?;
    let mut rows = Vec::new();
    let todo: Vec<(usize, &Graph)> = graphs
        .iter()
        .enumerate()
        .filter(|(_, g)| !filter_k4 || find_clique(g, 4).is_some())
        .filter(|(i, g)| match done.get(i) {
            Some(&status) => {
                rows.push(BatchRow {
                    graph_id: *i,
                    n: g.n(),
                    has_k4: status != RowStatus::NoClique,
                    algorithm: algo,
                    status,
                    solves: 0,
                    wall_ms: 0.0,
                    resumed: true,
                });
                false
            }
            None => true,
        })
        .collect();
    for chunk in todo.chunks(4 * jobs.max(1)) {
        let fresh: Vec<BatchRow> =
            workers.install(|| chunk.par_iter().map(|&(i, g)| run_one(i, g, algo, cfg)).collect());
        for r in &fresh {
            writeln!(file, "{} {}", r.graph_id, r.status.as_str())?;
        }
        file.flush()?;
        rows.extend(fresh);
    }
    rows.sort_by_key(|r| r.graph_id);
    Ok(BatchReport { rows })
}

/// Text: one line per `n` with graph and failure counts. CSV: one row per
/// graph.
pub fn emit_report(r: &BatchReport, format: ReportFormat) -> String {
    let mut s = String::new();
    match format {
        ReportFormat::Text => {
            let _ = writeln!(s, "{:>3} {:>8} {:>9} {:>8}", "n", "graphs", "failures", "rate");
            for a in r.aggregates() {
                let _ = writeln!(s, "{:>3} {:>8} {:>9} {:>7.2}%", a.n, a.graphs, a.failures, 100.0 * a.failure_rate());
            }
        }
        ReportFormat::Csv => {
            let _ = writeln!(s, "graph_id,n,has_k4,heuristic,status,solves,wall_ms");
            for row in &r.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{:.3}",
                    row.graph_id,
                    row.n,
                    row.has_k4,
                    row.algorithm.number(),
                    row.status.as_str(),
                    row.solves,
                    row.wall_ms
                );
            }
        }
    }
    s
}

/// Side-by-side table of two runs over the same corpora: `n`, graph count,
/// failures of the first and of the second heuristic.
pub fn emit_table(first: &BatchReport, second: &BatchReport) -> String {
    let a = first.aggregates();
    let b: BTreeMap<usize, Aggregate> = second.aggregates().into_iter().map(|x| (x.n, x)).collect();
    let mut s = format!("{:>3} {:>8} {:>10} {:>10}\n", "n", "graphs", "failures-1", "failures-2");
    for x in a {
        let f2 = b.get(&x.n).map_or("-".to_string(), |y| y.failures.to_string());
        let _ = writeln!(s, "{:>3} {:>8} {:>10} {:>10}", x.n, x.graphs, x.failures, f2);
    }
    s
}
