//! Dense symmetric linear algebra: a symmetric matrix type, a cyclic Jacobi
//! eigensolver, numerical rank, PSD tests and Gram factors.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default relative threshold for [`numerical_rank`].
pub const DEFAULT_RANK_TAU: f64 = 1e-6;

/// Sweep cap for the Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense symmetric real matrix. Every mutator writes both `(i, j)` and
/// `(j, i)`, so the stored entries are exactly symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix { m: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix { m: DMatrix::identity(dim, dim) }
    }

    /// The all-ones matrix `J_dim`.
    pub fn ones(dim: usize) -> Self {
        SymMatrix { m: DMatrix::from_element(dim, dim, 1.0) }
    }

    /// Builds from `f(i, j)` evaluated on the upper triangle `i <= j`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut s = SymMatrix::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                s.set(i, j, f(i, j));
            }
        }
        s
    }

    /// Row-major construction; the input must be symmetric within `1e-12`
    /// relative to its largest entry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Dimension { expected: dim, found: r.len() });
        }
        Self::from_matrix(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
    }

    /// Wraps a square matrix after checking symmetry; the stored matrix is
    /// the exact average of `m` and `mᵀ`.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension { expected: m.nrows(), found: m.ncols() });
        }
        let scale = 1.0 + m.amax();
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::domain(format!("matrix is not symmetric (max asymmetry {asym:.3e})")));
        }
        Ok(Self::symmetrize(m))
    }

    /// `(m + mᵀ) / 2` without checks.
    pub fn symmetrize(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SymMatrix { m: (m + t) * 0.5 }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[(i, j)] = v;
        self.m[(j, i)] = v;
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.m[(i, j)] += v;
        if i != j {
            self.m[(j, i)] += v;
        }
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    /// `max_ij |a_ij|`.
    pub fn max_abs(&self) -> f64 {
        self.m.amax()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    /// Sum of all entries.
    pub fn sum(&self) -> f64 {
        self.m.sum()
    }

    /// Trace inner product `A • B = Σ_ij A_ij B_ij`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.m.dot(&other.m)
    }

    pub fn scaled(&self, a: f64) -> SymMatrix {
        SymMatrix { m: &self.m * a }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SymMatrix) -> SymMatrix {
        SymMatrix { m: &self.m + &other.m * a }
    }

    /// `max_ij |a_ij − b_ij|`.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        (&self.m - &other.m).amax()
    }

    /// Principal submatrix on the given indices (in the given order).
    pub fn principal(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix { m: DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.m[(idx[a], idx[b])]) }
    }

    /// `Vᵀ A V` for a `dim × r` matrix `V`.
    pub fn congruence(&self, v: &DMatrix<f64>) -> SymMatrix {
        SymMatrix::symmetrize(v.transpose() * &self.m * v)
    }
}

/// Eigenvalues in descending order with orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    /// `Q Λ Qᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.values));
        &self.vectors * d * self.vectors.transpose()
    }
}

/// Cyclic Jacobi on a row-major copy; returns unsorted eigenvalues and, when
/// requested, the accumulated rotations (columns are eigenvectors).
fn jacobi(a: &DMatrix<f64>, want_vectors: bool) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
    let n = a.nrows();
    let mut m: Vec<f64> = (0..n * n).map(|k| 0.5 * (a[(k / n, k % n)] + a[(k % n, k / n)])).collect();
    let mut v = if want_vectors { Some(DMatrix::<f64>::identity(n, n)) } else { None };
    let total: f64 = m.iter().map(|x| x * x).sum();
    if total == 0.0 || n < 2 {
        return Ok(((0..n).map(|i| m[i * n + i]).collect(), v));
    }
    let target = total * f64::EPSILON * f64::EPSILON;
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    if !converged {
        let off: f64 = (0..n).flat_map(|p| (p + 1..n).map(move |q| (p, q))).map(|(p, q)| m[p * n + q].powi(2)).sum();
        if off > target * 1e4 {
            return Err(Error::Numerical(format!("Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps")));
        }
    }
    Ok(((0..n).map(|i| m[i * n + i]).collect(), v))
}

/// Full spectral decomposition, eigenvalues sorted in descending order.
pub fn eigen_sym(a: &SymMatrix) -> Result<EigenDecomposition> {
    let (vals, vecs) = jacobi(a.as_matrix(), true)?;
    let vecs = vecs.expect("vectors requested");
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let values = idx.iter().map(|&i| vals[i]).collect();
    let vectors = DMatrix::from_fn(vecs.nrows(), idx.len(), |r, c| vecs[(r, idx[c])]);
    Ok(EigenDecomposition { values, vectors })
}

/// Eigenvalues only, descending. Accepts any square matrix and uses its
/// symmetric part.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (mut vals, _) = jacobi(a, false)?;
    vals.sort_by(|x, y| y.total_cmp(x));
    Ok(vals)
}

/// Count of eigenvalues with `|λ| > tau · max(1, |λ_1|)`.
pub fn rank_of_values(values: &[f64], tau: f64) -> usize {
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = tau * top.max(1.0);
    values.iter().filter(|v| v.abs() > cut).count()
}

/// Numerical rank with relative threshold `tau`.
pub fn numerical_rank(a: &SymMatrix, tau: f64) -> Result<usize> {
    Ok(rank_of_values(&eigenvalues(a.as_matrix())?, tau))
}

/// Smallest eigenvalue.
pub fn min_eigenvalue(a: &SymMatrix) -> Result<f64> {
    Ok(eigenvalues(a.as_matrix())?.last().copied().unwrap_or(0.0))
}

/// `λ_min >= −eps`; with `eps = None` the slack is `1e-9 · (1 + |λ_1|)`.
pub fn is_psd(a: &SymMatrix, eps: Option<f64>) -> Result<bool> {
    let vals = eigenvalues(a.as_matrix())?;
    let Some(&min) = vals.last() else { return Ok(true) };
    let eps = eps.unwrap_or_else(|| 1e-9 * (1.0 + vals[0].abs().max(min.abs())));
    Ok(min >= -eps)
}

/// Vectors `v_i ∈ R^rank` with `v_i · v_j ≈ a_ij`, from the `rank` largest
/// eigenpairs.
pub fn gram_factor(a: &SymMatrix, rank: usize) -> Result<Vec<Vec<f64>>> {
    let e = eigen_sym(a)?;
    let scale = 1.0 + e.values.first().map_or(0.0, |v| v.abs());
    if e.values.last().is_some_and(|&m| m < -1e-8 * scale) {
        return Err(Error::domain("gram_factor needs a positive semidefinite matrix"));
    }
    if rank > a.dim() {
        return Err(Error::Dimension { expected: a.dim(), found: rank });
    }
    let roots: Vec<f64> = e.values[..rank].iter().map(|v| v.max(0.0).sqrt()).collect();
    Ok((0..a.dim()).map(|i| (0..rank).map(|c| e.vectors[(i, c)] * roots[c]).collect()).collect())
}

/// Gram matrix of a list of vectors.
pub fn gram_matrix(vs: &[Vec<f64>]) -> SymMatrix {
    SymMatrix::from_fn(vs.len(), |i, j| vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum())
}

/// Matrix text format: a line with the dimension, then one row per line.
pub fn write_matrix_text(a: &SymMatrix) -> String {
    let mut s = format!("{}\n", a.dim());
    for i in 0..a.dim() {
        let row: Vec<String> = (0..a.dim()).map(|j| format!("{:.17e}", a.get(i, j))).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

/// Parses [`write_matrix_text`] output (lines starting with '#' are skipped).
pub fn parse_matrix_text(text: &str) -> Result<SymMatrix> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    parse_matrix_lines(&mut lines)
}

pub(crate) fn parse_matrix_lines<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<SymMatrix> {
    let (ln, head) = lines.next().ok_or_else(|| Error::parse(1, "missing matrix dimension"))?;
    let dim: usize = head.parse().map_err(|_| Error::parse(ln, format!("bad dimension '{head}'")))?;
    let mut rows = Vec::with_capacity(dim);
    for _ in 0..dim {
        let (ln, l) = lines.next().ok_or_else(|| Error::parse(ln, "matrix truncated"))?;
        let row: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::parse(ln, format!("bad number '{t}'"))))
            .collect::<Result<_>>()?;
        if row.len() != dim {
            return Err(Error::parse(ln, format!("expected {dim} entries, found {}", row.len())));
        }
        rows.push(row);
    }
    SymMatrix::from_rows(&rows).map_err(|e| Error::parse(ln, e.to_string()))
}
