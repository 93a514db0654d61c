#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sdpcolor_core::graph::{find_clique, parse_edge_list, parse_plantri_ascii, Graph};
use sdpcolor_core::numlin::SymMatrix;
use sdpcolor_core::sdp::{Constraint, SdpProblem};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn fig(name: &str) -> Graph {
    parse_edge_list(&fixture_text(&format!("{name}.edges"))).unwrap()
}

pub fn corpus(n: usize) -> Vec<Graph> {
    parse_plantri_ascii(&fixture_text(&format!("corpus/n{n:02}.txt"))).unwrap()
}

/// Maximal planar graphs with a K_4, for `n` in the given range, in corpus order.
pub fn k4_fixtures(ns: std::ops::RangeInclusive<usize>) -> Vec<Graph> {
    ns.flat_map(corpus).filter(|g| find_clique(g, 4).is_some()).collect()
}

/// Independent brute-force count of proper colorings with at most `k`
/// colors, up to renaming colors: enumerate all k^n assignments and keep
/// those already in first-appearance normal form.
pub fn brute_force_colorings(g: &Graph, k: usize) -> u64 {
    let n = g.n();
    let mut count = 0;
    let mut a = vec![0usize; n];
    loop {
        let normal = {
            let mut next = 0;
            a.iter().all(|&c| {
                if c < next {
                    true
                } else if c == next {
                    next += 1;
                    true
                } else {
                    false
                }
            })
        };
        if normal && g.edges().iter().all(|&(i, j)| a[i] != a[j]) {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == n {
                return count;
            }
            a[i] += 1;
            if a[i] < k {
                break;
            }
            a[i] = 0;
            i += 1;
        }
    }
}

/// Dense eigenvalues from nalgebra, sorted descending. Used as an oracle
/// against the crate's own Jacobi solver.
pub fn oracle_eigenvalues(m: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

pub fn oracle_rank(m: &nalgebra::DMatrix<f64>, tau: f64) -> usize {
    let v = oracle_eigenvalues(m);
    let top = v.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    v.iter().filter(|x| x.abs() > tau * top).count()
}

fn diag(v: &[f64]) -> SymMatrix {
    SymMatrix::from_fn(v.len(), |i, j| if i == j { v[i] } else { 0.0 })
}

/// A random LP `min cᵀx, Ax = b, x ≥ 0` written as an SDP with diagonal data.
/// The first constraint fixes Σx, so the LP is bounded; b comes from a
/// strictly positive point, so both sides have interior points.
pub fn random_lp(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let n = rng.random_range(2..=6);
    let m = rng.random_range(1..=n.min(3));
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.5)).collect();
    let mut rows = vec![vec![1.0; n]];
    for _ in 1..m {
        rows.push((0..n).map(|_| rng.random_range(0.0..2.0)).collect());
    }
    let b = rows.iter().map(|r| r.iter().zip(&x0).map(|(a, x)| a * x).sum()).collect();
    (c, rows, b)
}

/// Exact LP optimum by enumerating basic solutions.
pub fn lp_oracle(c: &[f64], rows: &[Vec<f64>], b: &[f64]) -> f64 {
    let (n, m) = (c.len(), rows.len());
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let cols: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        let a = DMatrix::from_fn(m, m, |i, k| rows[i][cols[k]]);
        let Some(xb) = a.lu().solve(&DVector::from_column_slice(b)) else { continue };
        if xb.iter().any(|&v| !v.is_finite() || v < -1e-12) {
            continue;
        }
        best = best.min(cols.iter().zip(xb.iter()).map(|(&j, v)| c[j] * v).sum());
    }
    best
}

pub fn lp_problem(c: &[f64], rows: &[Vec<f64>], b: &[f64]) -> SdpProblem {
    let cons = rows.iter().zip(b).map(|(r, &b)| Constraint { a: diag(r), b }).collect();
    SdpProblem::new(diag(c), cons).unwrap()
}
