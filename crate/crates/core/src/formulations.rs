//! The coloring SDPs: the strict vector chromatic number program (SVCN) and
//! the cost-augmented program (CP), the reference solution, and coloring
//! extraction from low-rank primal solutions.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{all_cliques, validate_coloring, Coloring, Graph};
use crate::numlin::{self, SymMatrix};
use crate::sdp::{self, Constraint, SdpProblem, SdpSolution, SdpStatus, SolverOptions};

/// Default tolerance for "X_ij = 1" tests.
pub const DEFAULT_ALIGN_TOL: f64 = 1e-4;

/// SVCN primal on `n + 1` indices; index 0 carries α.
#[derive(Clone, Debug)]
pub struct SvcnInstance {
    pub graph: Graph,
    pub problem: SdpProblem,
}

/// SVCN: minimise `−z_00` subject to `z_ij + z_00 = 0` on edges,
/// `z_ii = 1` and `z_0i = 0` for every vertex.
pub fn build_svcn(g: &Graph) -> Result<SvcnInstance> {
    let n = g.n();
    if n == 0 {
        return Err(Error::domain("SVCN needs at least one vertex"));
    }
    let l = n + 1;
    let mut cons = Vec::with_capacity(g.edge_count() + 2 * n);
    for &(i, j) in g.edges() {
        let mut a = SymMatrix::zeros(l);
        a.set(0, 0, 1.0);
        a.set(i + 1, j + 1, 0.5);
        cons.push(Constraint { a, b: 0.0 });
    }
    for i in 0..n {
        let mut a = SymMatrix::zeros(l);
        a.set(i + 1, i + 1, 1.0);
        cons.push(Constraint { a, b: 1.0 });
    }
    for i in 0..n {
        let mut a = SymMatrix::zeros(l);
        a.set(0, i + 1, 0.5);
        cons.push(Constraint { a, b: 0.0 });
    }
    let mut c = SymMatrix::zeros(l);
    c.set(0, 0, -1.0);
    Ok(SvcnInstance { graph: g.clone(), problem: SdpProblem::new(c, cons)? })
}

/// SVCN solve with rank accounting on the full `(n+1)`-dimensional pair and
/// on the `n × n` submatrices that exclude index 0.
#[derive(Clone, Debug)]
pub struct SvcnResult {
    pub solution: SdpSolution,
    /// Optimal value `−z_00`.
    pub objective: f64,
    pub primal_rank_full: usize,
    pub dual_rank_full: usize,
    pub primal_rank: usize,
    pub dual_rank: usize,
    /// `n × n` primal block (vertex Gram matrix).
    pub x_sub: SymMatrix,
    pub s_sub: SymMatrix,
}

pub fn solve_svcn(inst: &SvcnInstance, opts: &SolverOptions, tau: f64) -> Result<SvcnResult> {
    let solution = sdp::solve_with(&inst.problem, opts);
    let idx: Vec<usize> = (1..=inst.graph.n()).collect();
    let x_sub = solution.x.principal(&idx);
    let s_sub = solution.s.principal(&idx);
    Ok(SvcnResult {
        objective: solution.primal_obj,
        primal_rank_full: numlin::numerical_rank(&solution.x, tau)?,
        dual_rank_full: numlin::numerical_rank(&solution.s, tau)?,
        primal_rank: numlin::numerical_rank(&x_sub, tau)?,
        dual_rank: numlin::numerical_rank(&s_sub, tau)?,
        x_sub,
        s_sub,
        solution,
    })
}

/// Cost-augmented program: minimise `C • X` subject to
/// `X_ij = −1/(k−1)` on edges and `X_ii = 1`.
#[derive(Clone, Debug)]
pub struct CostInstance {
    pub graph: Graph,
    pub k: usize,
    pub cost: SymMatrix,
    pub problem: SdpProblem,
}

impl CostInstance {
    /// Constraint index of edge number `e` (position in `graph.edges()`).
    pub fn edge_constraint(&self, e: usize) -> usize {
        e
    }

    /// Constraint index of the diagonal constraint for vertex `v`.
    pub fn diag_constraint(&self, v: usize) -> usize {
        self.graph.edge_count() + v
    }
}

pub fn build_cost_sdp(g: &Graph, k: usize, c: &SymMatrix) -> Result<CostInstance> {
    let n = g.n();
    if k < 2 {
        return Err(Error::domain("palette size must be at least 2"));
    }
    if c.dim() != n {
        return Err(Error::Dimension { expected: n, found: c.dim() });
    }
    if n == 0 {
        return Err(Error::domain("graph has no vertices"));
    }
    let off = -1.0 / (k as f64 - 1.0);
    let mut cons = Vec::with_capacity(g.edge_count() + n);
    for &(i, j) in g.edges() {
        let mut a = SymMatrix::zeros(n);
        a.set(i, j, 0.5);
        cons.push(Constraint { a, b: off });
    }
    for i in 0..n {
        let mut a = SymMatrix::zeros(n);
        a.set(i, i, 1.0);
        cons.push(Constraint { a, b: 1.0 });
    }
    Ok(CostInstance { graph: g.clone(), k, cost: c.clone(), problem: SdpProblem::new(c.clone(), cons)? })
}

/// Gram matrix of the reference vectors: 1 within a color class,
/// `−1/(k−1)` across classes.
pub fn reference_solution(g: &Graph, c: &Coloring) -> Result<SymMatrix> {
    if !validate_coloring(g, c) {
        return Err(Error::domain("coloring is not proper"));
    }
    if c.k() < 2 {
        return Err(Error::domain("palette size must be at least 2"));
    }
    let off = -1.0 / (c.k() as f64 - 1.0);
    Ok(SymMatrix::from_fn(g.n(), |i, j| if c.color(i) == c.color(j) { 1.0 } else { off }))
}

/// Reads a coloring off a reference-shaped matrix: `i` and `j` share a class
/// iff `|x_ij − 1| ≤ tol`. Returns `None` unless the relation is a partition
/// into at most `k` classes that properly colors `g`.
pub fn extract_coloring(g: &Graph, x: &SymMatrix, k: usize, tol: f64) -> Option<Coloring> {
    let n = x.dim();
    if n != g.n() || (0..n).any(|i| (x.get(i, i) - 1.0).abs() > tol) {
        return None;
    }
    let mut reps: Vec<usize> = Vec::new();
    let color: Vec<usize> = (0..n)
        .map(|i| {
            reps.iter().position(|&r| (x.get(r, i) - 1.0).abs() <= tol).unwrap_or_else(|| {
                reps.push(i);
                reps.len() - 1
            })
        })
        .collect();
    let consistent = (0..n).all(|i| (i + 1..n).all(|j| ((x.get(i, j) - 1.0).abs() <= tol) == (color[i] == color[j])));
    if !consistent || reps.len() > k {
        return None;
    }
    let c = Coloring::new(k, color).ok()?;
    validate_coloring(g, &c).then_some(c)
}

/// Orthonormal basis (columns) of the orthogonal complement of the clique
/// indicators `1_K` over all `k`-cliques `K`.
///
/// Every feasible `X` of the cost program satisfies `X 1_K = 0` (the unit
/// vectors of a `k`-clique with pairwise dots `−1/(k−1)` sum to zero), so
/// the feasible set lies in the face `{V Y Vᵀ : Y ⪰ 0}`.
pub fn clique_face_basis(g: &Graph, k: usize) -> Result<DMatrix<f64>> {
    let n = g.n();
    let cliques = all_cliques(g, k);
    if cliques.is_empty() {
        return Ok(DMatrix::identity(n, n));
    }
    let b = clique_indicator_sum(n, &cliques);
    let e = numlin::eigen_sym(&b)?;
    let cut = 1e-10 * e.values[0].max(1.0);
    let cols: Vec<usize> = (0..n).filter(|&c| e.values[c] <= cut).collect();
    Ok(DMatrix::from_fn(n, cols.len(), |r, c| e.vectors[(r, cols[c])]))
}

/// `Σ_K 1_K 1_Kᵀ`.
pub fn clique_indicator_sum(n: usize, cliques: &[Vec<usize>]) -> SymMatrix {
    let mut b = SymMatrix::zeros(n);
    for q in cliques {
        for (a, &u) in q.iter().enumerate() {
            b.add_to(u, u, 1.0);
            for &w in &q[a + 1..] {
                b.add_to(u, w, 1.0);
            }
        }
    }
    b
}

/// Solution of the cost program mapped back to `n × n`.
#[derive(Clone, Debug)]
pub struct CostSolution {
    pub x: SymMatrix,
    /// Full dual slack, made PSD by adding a multiple of `Σ_K 1_K 1_Kᵀ`
    /// (an objective-neutral dual move).
    pub s: SymMatrix,
    /// Dual vector over the original constraints.
    pub y: Vec<f64>,
    pub status: SdpStatus,
    pub rel_error: f64,
    pub iterations: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// Dimension of the face the reduced solve ran on.
    pub face_dim: usize,
    /// Number of linearly independent reduced constraints kept.
    pub kept_constraints: usize,
    pub reduced: SdpSolution,
}

/// Solves the cost program on the clique face: substitutes `X = V Y Vᵀ`,
/// drops reduced constraints that became linearly dependent and solves for
/// `Y`. Without `k`-cliques this is the plain solve.
pub fn solve_cost(inst: &CostInstance, opts: &SolverOptions) -> Result<CostSolution> {
    let g = &inst.graph;
    let n = g.n();
    let v = clique_face_basis(g, inst.k)?;
    let d = v.ncols();
    if d == 0 {
        return Err(Error::domain("cost program has an empty face"));
    }
    let mut kept = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut reduced = Vec::new();
    for (idx, con) in inst.problem.constraints().iter().enumerate() {
        let ar = con.a.congruence(&v);
        let mut w: Vec<f64> = (0..d)
            .flat_map(|i| (i..d).map(move |j| (i, j)))
            .map(|(i, j)| if i == j { ar.get(i, j) } else { std::f64::consts::SQRT_2 * ar.get(i, j) })
            .collect();
        for q in &basis {
            let dot: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
            w.iter_mut().zip(q).for_each(|(x, qv)| *x -= dot * qv);
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let fro = ar.as_matrix().norm();
        if norm > 1e-9 * fro.max(1.0) {
            w.iter_mut().for_each(|x| *x /= norm);
            basis.push(w);
            kept.push(idx);
            reduced.push(Constraint { a: ar, b: con.b });
        }
    }
    let rp = SdpProblem::new(inst.cost.congruence(&v), reduced)?;
    let sol = sdp::solve_with(&rp, opts);
    let x = SymMatrix::symmetrize(&v * sol.x.as_matrix() * v.transpose());

    let mut y = vec![0.0; inst.problem.m()];
    for (r, &idx) in kept.iter().enumerate() {
        y[idx] = sol.y[r];
    }
    let cliques = all_cliques(g, inst.k);
    let t = lift_shift(&inst.problem.dual_slack(&y), &clique_indicator_sum(n, &cliques))?;
    if t > 0.0 {
        let edge_pos = |i: usize, j: usize| g.edges().binary_search(&(i, j)).expect("clique edges exist");
        for q in &cliques {
            for (a, &u) in q.iter().enumerate() {
                y[inst.diag_constraint(u)] -= t;
                for &w in &q[a + 1..] {
                    y[inst.edge_constraint(edge_pos(u, w))] -= 2.0 * t;
                }
            }
        }
    }
    let s = inst.problem.dual_slack(&y);
    let dual_obj = inst.problem.b().iter().zip(&y).map(|(b, y)| b * y).sum();
    Ok(CostSolution {
        primal_obj: inst.cost.dot(&x),
        dual_obj,
        x,
        s,
        y,
        status: sol.status,
        rel_error: sol.rel_error,
        iterations: sol.iterations,
        face_dim: d,
        kept_constraints: kept.len(),
        reduced: sol,
    })
}

/// Smallest power-of-two multiple `t` (scaled by 4 for margin) making
/// `s0 + t·b` PSD; 0 when `s0` already is.
fn lift_shift(s0: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    let psd = |m: &SymMatrix| numlin::is_psd(m, None);
    if psd(s0)? {
        return Ok(0.0);
    }
    let mut t = 1e-6 * (1.0 + s0.max_abs());
    for _ in 0..80 {
        if psd(&s0.axpy(t, b))? {
            return Ok(4.0 * t);
        }
        t *= 2.0;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svcn_sizes() {
        let g = Graph::cycle(5);
        let inst = build_svcn(&g).unwrap();
        assert_eq!(inst.problem.m(), 5 + 10);
        assert_eq!(inst.problem.dim(), 6);
        for c in inst.problem.constraints() {
            let nnz = c.a.as_matrix().iter().filter(|v| **v != 0.0).count();
            assert!(nnz <= 3, "at most two distinct entries (one symmetric pair)");
        }
    }

    #[test]
    fn reference_triangle() {
        let g = Graph::complete(3);
        let c = Coloring::new(3, vec![0, 1, 2]).unwrap();
        let x = reference_solution(&g, &c).unwrap();
        assert_eq!(x.get(0, 1), -0.5);
        assert_eq!(numlin::numerical_rank(&x, 1e-6).unwrap(), 2);
        let back = extract_coloring(&g, &x, 3, DEFAULT_ALIGN_TOL).unwrap();
        assert!(back.same_partition(&c));
    }

    #[test]
    fn reference_path_two_colors() {
        let g = Graph::path(3);
        let c = Coloring::new(2, vec![0, 1, 0]).unwrap();
        let x = reference_solution(&g, &c).unwrap();
        assert_eq!(x.get(0, 2), 1.0);
        assert_eq!(x.get(0, 1), -1.0);
        assert_eq!(numlin::numerical_rank(&x, 1e-6).unwrap(), 1);
        assert!(reference_solution(&g, &Coloring::new(2, vec![0, 0, 1]).unwrap()).is_err());
    }

    #[test]
    fn extraction_rejects_non_reference_matrices() {
        let g = Graph::complete(3);
        assert!(extract_coloring(&g, &SymMatrix::identity(3), 2, 1e-4).is_none());
        assert!(extract_coloring(&g, &SymMatrix::ones(3), 3, 1e-4).is_none());
    }

    #[test]
    fn clique_face_of_k4_is_trivial_complement() {
        let v = clique_face_basis(&Graph::complete(4), 4).unwrap();
        assert_eq!(v.ncols(), 3);
        let ones = DMatrix::from_element(4, 1, 1.0);
        assert!((v.transpose() * ones).amax() < 1e-12);
    }
}
