//! Small dense standard-form SDPs and an infeasible-start primal–dual
//! interior-point solver.
//!
//! Primal: minimise `C • X` subject to `A_i • X = b_i`, `X ⪰ 0`.
//! Dual: maximise `bᵀy` subject to `S = C − Σ y_i A_i ⪰ 0`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numlin::{self, SymMatrix};

/// One equality constraint `A • X = b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub a: SymMatrix,
    pub b: f64,
}

/// Standard-form SDP instance.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    c: SymMatrix,
    constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(c: SymMatrix, constraints: Vec<Constraint>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::domain("an SDP needs at least one constraint"));
        }
        if let Some(bad) = constraints.iter().find(|k| k.a.dim() != c.dim()) {
            return Err(Error::Dimension { expected: c.dim(), found: bad.a.dim() });
        }
        Ok(SdpProblem { c, constraints })
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &SymMatrix {
        &self.c
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn b(&self) -> Vec<f64> {
        self.constraints.iter().map(|k| k.b).collect()
    }

    /// `max_i |A_i • X − b_i|`.
    pub fn primal_residual(&self, x: &SymMatrix) -> f64 {
        self.constraints.iter().map(|k| (k.a.dot(x) - k.b).abs()).fold(0.0, f64::max)
    }

    /// `C − Σ y_i A_i`.
    pub fn dual_slack(&self, y: &[f64]) -> SymMatrix {
        let mut s = self.c.as_matrix().clone();
        for (k, &yi) in self.constraints.iter().zip(y) {
            if yi != 0.0 {
                s -= k.a.as_matrix() * yi;
            }
        }
        SymMatrix::symmetrize(s)
    }

    /// Debug dump: a "dim m" line, the objective rows, then for every
    /// constraint its matrix rows followed by a line holding `b_i`.
    pub fn dump(&self) -> String {
        let mut s = format!("{} {}\n", self.dim(), self.m());
        let rows = |s: &mut String, a: &SymMatrix| {
            for i in 0..a.dim() {
                let row: Vec<String> = (0..a.dim()).map(|j| format!("{:.17e}", a.get(i, j))).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        };
        rows(&mut s, &self.c);
        for k in &self.constraints {
            rows(&mut s, &k.a);
            let _ = writeln!(s, "{:.17e}", k.b);
        }
        s
    }

    /// Parses [`SdpProblem::dump`] output.
    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, head) = lines.next().ok_or_else(|| Error::parse(1, "missing 'dim m' header"))?;
        let hv: Vec<usize> = head
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::parse(ln, format!("bad header token '{t}'"))))
            .collect::<Result<_>>()?;
        let [dim, m] = hv[..] else { return Err(Error::parse(ln, "header must be 'dim m'")) };
        let read = |lines: &mut dyn Iterator<Item = (usize, &str)>| -> Result<SymMatrix> {
            let mut rows = Vec::with_capacity(dim);
            let mut last = ln;
            for _ in 0..dim {
                let (l, t) = lines.next().ok_or_else(|| Error::parse(last, "dump truncated"))?;
                last = l;
                let row: Vec<f64> = t
                    .split_whitespace()
                    .map(|x| x.parse().map_err(|_| Error::parse(l, format!("bad number '{x}'"))))
                    .collect::<Result<_>>()?;
                rows.push(row);
            }
            SymMatrix::from_rows(&rows).map_err(|e| Error::parse(last, e.to_string()))
        };
        let c = read(&mut lines)?;
        let mut cons = Vec::with_capacity(m);
        for _ in 0..m {
            let a = read(&mut lines)?;
            let (l, t) = lines.next().ok_or_else(|| Error::parse(ln, "dump truncated"))?;
            let b = t.parse().map_err(|_| Error::parse(l, format!("bad right-hand side '{t}'")))?;
            cons.push(Constraint { a, b });
        }
        SdpProblem::new(c, cons)
    }
}

/// Solver termination state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
}

impl std::fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::MaxIterations => "max-iterations",
            SdpStatus::NumericalFailure => "numerical-failure",
        })
    }
}

/// Solver knobs. Defaults: relative tolerance `1e-8`, 200 iterations,
/// fraction-to-boundary `0.98`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub step_fraction: f64,
    /// Iterations without a halving of the best error before giving up.
    pub stall_limit: usize,
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iter: 200, step_fraction: 0.98, stall_limit: 5, record_trace: false }
    }
}

/// Per-iterate diagnostics (relative measures as used by the stopping test).
#[derive(Clone, Debug, PartialEq)]
pub struct IterateRecord {
    pub iter: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub primal_inf: f64,
    pub dual_inf: f64,
    pub rel_gap: f64,
    pub mu: f64,
}

/// Solver output: the best iterate seen, with residuals.
#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: SymMatrix,
    pub y: Vec<f64>,
    pub s: SymMatrix,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// `max_i |A_i • X − b_i|`.
    pub primal_residual: f64,
    /// `‖S − C + Σ y_i A_i‖_max`.
    pub dual_residual: f64,
    pub min_eig_x: f64,
    pub min_eig_s: f64,
    /// `max(primal_inf, dual_inf, rel_gap)` of the returned iterate.
    pub rel_error: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub trace: Vec<IterateRecord>,
}

pub fn solve(p: &SdpProblem) -> SdpSolution {
    solve_with(p, &SolverOptions::default())
}

struct Ops {
    l: usize,
    avec: DMatrix<f64>,
}

impl Ops {
    fn new(p: &SdpProblem) -> Self {
        let l = p.dim();
        let mut avec = DMatrix::zeros(p.m(), l * l);
        for (i, k) in p.constraints().iter().enumerate() {
            for (c, v) in k.a.as_matrix().as_slice().iter().enumerate() {
                avec[(i, c)] = *v;
            }
        }
        Ops { l, avec }
    }

    fn apply(&self, x: &DMatrix<f64>) -> DVector<f64> {
        &self.avec * DVector::from_column_slice(x.as_slice())
    }

    fn adjoint(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let v = self.avec.tr_mul(y);
        DMatrix::from_column_slice(self.l, self.l, v.as_slice())
    }
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Largest step `α ≤ 1` keeping `L Lᵀ + α dZ ⪰ 0`, before damping.
fn max_step(l_inv: &DMatrix<f64>, dz: &DMatrix<f64>) -> Result<f64> {
    let w = l_inv * dz * l_inv.transpose();
    let lmin = numlin::eigenvalues(&w)?.last().copied().unwrap_or(0.0);
    Ok(if lmin >= 0.0 { f64::INFINITY } else { -1.0 / lmin })
}

struct Schur {
    m: DMatrix<f64>,
    chol: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
    pinv: Option<DMatrix<f64>>,
}

impl Schur {
    fn new(m: DMatrix<f64>) -> Result<Self> {
        if let Some(chol) = m.clone().cholesky() {
            return Ok(Schur { m, chol: Some(chol), pinv: None });
        }
        let e = numlin::eigen_sym(&SymMatrix::symmetrize(m.clone()))?;
        let top = e.values.first().copied().unwrap_or(0.0).max(0.0);
        let dim = m.nrows();
        let mut pinv = DMatrix::zeros(dim, dim);
        for (c, &lam) in e.values.iter().enumerate() {
            if lam > 1e-14 * top {
                let q = e.vectors.column(c);
                pinv += q * q.transpose() / lam;
            }
        }
        Ok(Schur { m, chol: None, pinv: Some(pinv) })
    }

    fn base(&self, r: &DVector<f64>) -> DVector<f64> {
        match (&self.chol, &self.pinv) {
            (Some(c), _) => c.solve(r),
            (None, Some(p)) => p * r,
            _ => unreachable!("one factorisation is always present"),
        }
    }

    /// Solve with two rounds of iterative refinement.
    fn solve(&self, r: &DVector<f64>) -> DVector<f64> {
        let mut x = self.base(r);
        for _ in 0..2 {
            let res = r - &self.m * &x;
            x += self.base(&res);
        }
        x
    }
}

struct Best {
    err: f64,
    x: DMatrix<f64>,
    y: DVector<f64>,
    s: DMatrix<f64>,
    iter: usize,
}

/// Infeasible-start primal–dual path following with the HKM direction and
/// Mehrotra predictor–corrector steps. Returns the best iterate seen (by the
/// largest of relative primal infeasibility, dual infeasibility and gap).
pub fn solve_with(p: &SdpProblem, opts: &SolverOptions) -> SdpSolution {
    let l = p.dim();
    let ops = Ops::new(p);
    let c = p.objective().as_matrix().clone();
    let b = DVector::from_vec(p.b());
    let nb = 1.0 + b.amax();
    let nc = 1.0 + c.amax();
    let eta = 1.0 + b.amax() + c.amax();
    let mut x = DMatrix::identity(l, l) * eta;
    let mut s = DMatrix::identity(l, l) * eta;
    let mut y = DVector::zeros(p.m());
    let mut best: Option<Best> = None;
    // Best error after each iteration; the run has stalled when the best
    // error has not halved over the last `stall_limit` iterations.
    let mut history: Vec<f64> = Vec::new();
    let mut trace = Vec::new();
    let mut failure = false;
    let mut converged = false;

    for it in 0..=opts.max_iter {
        let rp = &b - ops.apply(&x);
        let rd = &c - &s - ops.adjoint(&y);
        let pobj = c.dot(&x);
        let dobj = b.dot(&y);
        let mu = x.dot(&s) / l as f64;
        let pinf = rp.amax() / nb;
        let dinf = rd.amax() / nc;
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
        let err = pinf.max(dinf).max(gap);
        if opts.record_trace {
            trace.push(IterateRecord {
                iter: it,
                primal_obj: pobj,
                dual_obj: dobj,
                primal_inf: pinf,
                dual_inf: dinf,
                rel_gap: gap,
                mu,
            });
        }
        if best.as_ref().is_none_or(|bst| err < bst.err) {
            best = Some(Best { err, x: x.clone(), y: y.clone(), s: s.clone(), iter: it });
        }
        let best_err = best.as_ref().map_or(err, |bst| bst.err);
        history.push(best_err);
        let stalled =
            history.len() > opts.stall_limit && best_err > 0.5 * history[history.len() - 1 - opts.stall_limit];
        if err < opts.tol {
            converged = true;
            break;
        }
        if stalled || it == opts.max_iter {
            break;
        }

        let (Some(lx), Some(ls)) = (x.clone().cholesky(), s.clone().cholesky()) else {
            failure = true;
            break;
        };
        let identity = DMatrix::<f64>::identity(l, l);
        let lx_inv = lx.l().solve_lower_triangular(&identity).expect("Cholesky factor is nonsingular");
        let ls_inv = ls.l().solve_lower_triangular(&identity).expect("Cholesky factor is nonsingular");
        let s_inv = ls_inv.transpose() * &ls_inv;

        let mut bmat = DMatrix::zeros(l * l, p.m());
        for (j, k) in p.constraints().iter().enumerate() {
            let bj = &x * k.a.as_matrix() * &s_inv;
            bmat.column_mut(j).copy_from_slice(bj.as_slice());
        }
        let schur = match Schur::new(sym(&ops.avec * bmat)) {
            Ok(sc) => sc,
            Err(_) => {
                failure = true;
                break;
            }
        };
        let x_rd_sinv = ops.apply(&(&x * &rd * &s_inv));
        // HKM: dX = (Rc − X dS) S⁻¹ symmetrised, with dS = Rd − Aᵀdy.
        let direction = |rc: &DMatrix<f64>| {
            let rhs = &rp - ops.apply(&(rc * &s_inv)) + &x_rd_sinv;
            let dy = schur.solve(&rhs);
            let ds = &rd - ops.adjoint(&dy);
            let dx = sym((rc - &x * &ds) * &s_inv);
            (dx, dy, ds)
        };
        let steps = |dx: &DMatrix<f64>, ds: &DMatrix<f64>, frac: f64| -> Result<(f64, f64)> {
            Ok(((frac * max_step(&lx_inv, dx)?).min(1.0), (frac * max_step(&ls_inv, ds)?).min(1.0)))
        };

        let xs = &x * &s;
        let (dx, _, ds) = direction(&(-&xs));
        let Ok((ap, ad)) = steps(&dx, &ds, 1.0) else {
            failure = true;
            break;
        };
        let mu_aff = (&x + &dx * ap).dot(&(&s + &ds * ad)) / l as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let rc = &identity * (sigma * mu) - &xs - &dx * &ds;
        let (dx, dy, ds) = direction(&rc);
        let Ok((ap, ad)) = steps(&dx, &ds, opts.step_fraction) else {
            failure = true;
            break;
        };
        // One common step length: separate primal and dual steps converge
        // just as fast here but drift much further from the central path,
        // which leaves ‖XS‖ orders of magnitude above μ at termination.
        let alpha = ap.min(ad);
        x = sym(&x + &dx * alpha);
        y += &dy * alpha;
        s = sym(&s + &ds * alpha);
    }

    let bst = best.expect("at least one iterate is evaluated");
    let status = if converged {
        SdpStatus::Optimal
    } else if failure {
        SdpStatus::NumericalFailure
    } else {
        SdpStatus::MaxIterations
    };
    let xs = SymMatrix::symmetrize(bst.x);
    let ss = SymMatrix::symmetrize(bst.s);
    let yv: Vec<f64> = bst.y.iter().copied().collect();
    let primal_obj = p.objective().dot(&xs);
    let dual_obj = p.b().iter().zip(&yv).map(|(bi, yi)| bi * yi).sum();
    let dual_residual = ss.max_abs_diff(&p.dual_slack(&yv));
    SdpSolution {
        primal_residual: p.primal_residual(&xs),
        dual_residual,
        min_eig_x: numlin::min_eigenvalue(&xs).unwrap_or(f64::NAN),
        min_eig_s: numlin::min_eigenvalue(&ss).unwrap_or(f64::NAN),
        x: xs,
        y: yv,
        s: ss,
        primal_obj,
        dual_obj,
        rel_error: bst.err,
        status,
        iterations: bst.iter,
        trace,
    }
}

/// Complementary-slackness evidence for a primal/dual pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplementarityReport {
    pub product_norm: f64,
    pub rank_x: usize,
    pub rank_s: usize,
    pub rank_sum: usize,
    pub dim: usize,
    /// `rank(X) + rank(S) ≤ ℓ` at the given rank threshold.
    pub rank_bound: bool,
    /// `‖XS‖_max ≤ tol`.
    pub verdict: bool,
}

/// `‖XS‖_max`, numerical ranks at `tau`, and whether `‖XS‖_max ≤ tol`.
///
/// The rank bound is reported separately: it follows from `XS = 0` only in
/// exact arithmetic. On nearly degenerate problems an approximate optimum can
/// carry small eigenvalues of both `X` and `S` along one direction that sit
/// above a fixed rank threshold while the product is still tiny.
pub fn check_complementarity(x: &SymMatrix, s: &SymMatrix, tol: f64, tau: f64) -> Result<ComplementarityReport> {
    if x.dim() != s.dim() {
        return Err(Error::Dimension { expected: x.dim(), found: s.dim() });
    }
    let product_norm = (x.as_matrix() * s.as_matrix()).amax();
    let rank_x = numlin::numerical_rank(x, tau)?;
    let rank_s = numlin::numerical_rank(s, tau)?;
    let dim = x.dim();
    Ok(ComplementarityReport {
        product_norm,
        rank_x,
        rank_s,
        rank_sum: rank_x + rank_s,
        dim,
        rank_bound: rank_x + rank_s <= dim,
        verdict: product_norm <= tol,
    })
}

/// Dual-feasibility evidence for a candidate `y`.
#[derive(Clone, Debug)]
pub struct DualCheck {
    pub s: SymMatrix,
    pub min_eig: f64,
    pub psd: bool,
    pub dual_obj: f64,
}

/// Reconstructs `S = C − Σ y_i A_i`, tests it for PSD and reports `bᵀy`.
pub fn verify_feasible_dual(p: &SdpProblem, y: &[f64]) -> Result<DualCheck> {
    if y.len() != p.m() {
        return Err(Error::Dimension { expected: p.m(), found: y.len() });
    }
    let s = p.dual_slack(y);
    let vals = numlin::eigenvalues(s.as_matrix())?;
    let min_eig = vals.last().copied().unwrap_or(0.0);
    let psd = min_eig >= -1e-9 * (1.0 + vals.first().map_or(0.0, |v| v.abs()));
    let dual_obj = p.b().iter().zip(y).map(|(b, y)| b * y).sum();
    Ok(DualCheck { s, min_eig, psd, dual_obj })
}
