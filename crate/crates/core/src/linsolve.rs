//! Sparse linear solves: direct LU (faer), restarted GMRES with ILU(0), and
//! GMRES preconditioned by an LU factorization of an earlier matrix.

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut};
use serde::Serialize;

use crate::error::{Error, LinearSolveFailure, Result, Subproblem};
use crate::fem::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    DirectLu,
    Gmres,
    /// GMRES preconditioned by the last LU factorization with the same
    /// sparsity pattern; refactors when that stops converging quickly.
    LaggedLu,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub method: SolveMethod,
    pub rel_tol: f64,
    /// Iteration cap for GMRES; ignored by the direct method.
    pub max_iter: usize,
    pub restart: usize,
    /// Reuse the previous numeric factorization when the matrix is bitwise identical.
    pub reuse_factorization: bool,
    /// GMRES iterations allowed with a lagged factorization before refactoring.
    pub lagged_max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { method: SolveMethod::DirectLu, rel_tol: 1e-10, max_iter: 2000, restart: 30, reuse_factorization: false, lagged_max_iter: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearSolveReport {
    /// ‖Ax − b‖ / ‖b‖, recomputed by explicit multiplication.
    pub residual_norm: f64,
    pub iterations: usize,
    pub method: SolveMethod,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let nb = norm(b);
    let rel = if nb > 0.0 { norm(&r) / nb } else { norm(&r) };
    (r, rel)
}

/// One-shot solve of `A x = b`.
pub fn solve(a: &CsrMatrix, b: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, LinearSolveReport)> {
    LinearSolver::new(Subproblem::Other).solve(a, b, opts)
}

struct Factorization {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    symbolic: SymbolicLu<usize>,
    numeric: Option<(Vec<f64>, Lu<usize, f64>)>,
}

/// Reusable solver tied to one subproblem. The symbolic LU analysis is kept
/// while the sparsity pattern stays the same.
pub struct LinearSolver {
    subproblem: Subproblem,
    context: Option<String>,
    cache: Option<Factorization>,
    /// Last solution, the initial guess of the next lagged solve.
    last_x: Option<Vec<f64>>,
}

impl LinearSolver {
    pub fn new(subproblem: Subproblem) -> Self {
        LinearSolver { subproblem, context: None, cache: None, last_x: None }
    }

    /// Extra text attached to failure reports (e.g. parameter values).
    pub fn set_context(&mut self, context: impl Into<String>) {
        self.context = Some(context.into());
    }

    fn fail(&self, failure: LinearSolveFailure) -> Error {
        Error::LinearSolve { subproblem: self.subproblem, failure, context: self.context.clone() }
    }

    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, LinearSolveReport)> {
        assert_eq!(a.nrows(), a.ncols(), "solve needs a square matrix");
        assert_eq!(a.nrows(), b.len(), "right-hand side length mismatch");
        if norm(b) == 0.0 {
            let report = LinearSolveReport { residual_norm: 0.0, iterations: 0, method: opts.method };
            return Ok((vec![0.0; b.len()], report));
        }
        match opts.method {
            SolveMethod::DirectLu => self.solve_direct(a, b, opts),
            SolveMethod::LaggedLu => {
                if let Some(out) = self.try_lagged(a, b, opts) {
                    self.last_x = Some(out.0.clone());
                    return Ok(out);
                }
                let (x, mut report) = self.solve_direct(a, b, opts)?;
                report.method = SolveMethod::LaggedLu;
                self.last_x = Some(x.clone());
                Ok((x, report))
            }
            SolveMethod::Gmres => {
                let ilu = Ilu0::new(a).map_err(|f| self.fail(f))?;
                let (x, iterations) = gmres(a, b, opts.rel_tol, opts.restart, opts.max_iter, None, |r| ilu.apply(r))
                    .map_err(|f| self.fail(f))?;
                let (_, rel) = relative_residual(a, &x, b);
                if !(rel <= opts.rel_tol) {
                    return Err(self.fail(LinearSolveFailure::Stagnated { iterations, residual: rel }));
                }
                Ok((x, LinearSolveReport { residual_norm: rel, iterations, method: SolveMethod::Gmres }))
            }
        }
    }

    /// GMRES with the cached factorization as preconditioner, if one exists
    /// for this pattern and it converges within the lagged iteration budget.
    fn try_lagged(&self, a: &CsrMatrix, b: &[f64], opts: &SolveOptions) -> Option<(Vec<f64>, LinearSolveReport)> {
        let cache = self.cache.as_ref()?;
        if cache.row_ptr != a.row_ptr() || cache.col_idx != a.col_idx() {
            return None;
        }
        let (_, lu) = cache.numeric.as_ref()?;
        let n = a.nrows();
        let precond = |r: &[f64]| {
            let mut x = r.to_vec();
            lu.solve_transpose_in_place_with_conj(Conj::No, MatMut::from_column_major_slice_mut(&mut x, n, 1));
            x
        };
        let budget = opts.lagged_max_iter.max(1);
        let (x, iterations) = gmres(a, b, opts.rel_tol, budget, budget, self.last_x.as_deref(), precond).ok()?;
        let (_, rel) = relative_residual(a, &x, b);
        Some((x, LinearSolveReport { residual_norm: rel, iterations, method: SolveMethod::LaggedLu }))
    }

    fn solve_direct(&mut self, a: &CsrMatrix, b: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, LinearSolveReport)> {
        let n = a.nrows();
        let same_pattern = self
            .cache
            .as_ref()
            .is_some_and(|c| c.row_ptr == a.row_ptr() && c.col_idx == a.col_idx());
        // The CSR arrays of A are the CSC arrays of Aᵀ; factor Aᵀ and solve transposed.
        let at_sym = SymbolicSparseColMatRef::new_checked(n, n, a.row_ptr(), None, a.col_idx());
        if !same_pattern {
            let symbolic = SymbolicLu::try_new(at_sym)
                .map_err(|e| self.fail(LinearSolveFailure::Singular { detail: format!("symbolic analysis: {e:?}") }))?;
            self.cache = Some(Factorization {
                row_ptr: a.row_ptr().to_vec(),
                col_idx: a.col_idx().to_vec(),
                symbolic,
                numeric: None,
            });
        }
        let cache = self.cache.as_mut().expect("factorization cache populated above");
        let reuse = opts.reuse_factorization && cache.numeric.as_ref().is_some_and(|(v, _)| v.as_slice() == a.values());
        if !reuse {
            let at = SparseColMatRef::new(at_sym, a.values());
            match Lu::try_new_with_symbolic(cache.symbolic.clone(), at) {
                Ok(lu) => cache.numeric = Some((a.values().to_vec(), lu)),
                Err(e) => {
                    cache.numeric = None;
                    let detail = format!("{e:?}");
                    return Err(self.fail(LinearSolveFailure::Singular { detail }));
                }
            }
        }
        let lu = &self.cache.as_ref().unwrap().numeric.as_ref().unwrap().1;

        let lu_solve = |rhs: &[f64]| {
            let mut x = rhs.to_vec();
            lu.solve_transpose_in_place_with_conj(Conj::No, MatMut::from_column_major_slice_mut(&mut x, n, 1));
            x
        };
        let mut x = lu_solve(b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(self.fail(LinearSolveFailure::Singular { detail: "non-finite solution (zero pivot)".into() }));
        }
        let (mut r, mut rel) = relative_residual(a, &x, b);
        // A couple of refinement sweeps recover accuracy lost to pivot growth.
        let mut sweeps = 0;
        while rel > opts.rel_tol && sweeps < 3 {
            let dx = lu_solve(&r);
            x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
            (r, rel) = relative_residual(a, &x, b);
            sweeps += 1;
        }
        if !(rel <= opts.rel_tol) {
            return Err(self.fail(LinearSolveFailure::ResidualTooLarge { residual: rel, tolerance: opts.rel_tol }));
        }
        Ok((x, LinearSolveReport { residual_norm: rel, iterations: 0, method: SolveMethod::DirectLu }))
    }
}

/// Incomplete LU with zero fill on the pattern of A.
struct Ilu0 {
    a: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    fn new(a: &CsrMatrix) -> std::result::Result<Self, LinearSolveFailure> {
        let mut lu = a.clone();
        let n = a.nrows();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in a.row_ptr()[i]..a.row_ptr()[i + 1] {
                if a.col_idx()[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(LinearSolveFailure::Singular { detail: format!("missing diagonal in row {i}") });
            }
        }
        let row_ptr = a.row_ptr().to_vec();
        let col_idx = a.col_idx().to_vec();
        let vals = lu.values_mut();
        for i in 0..n {
            for kk in row_ptr[i]..diag[i] {
                let k = col_idx[kk];
                let pivot = vals[diag[k]];
                if pivot == 0.0 {
                    return Err(LinearSolveFailure::Singular { detail: format!("zero ILU pivot in row {k}") });
                }
                vals[kk] /= pivot;
                let lik = vals[kk];
                // Row i -= l_ik * row k, restricted to the existing pattern of row i.
                let mut p = kk + 1;
                for q in diag[k] + 1..row_ptr[k + 1] {
                    let j = col_idx[q];
                    while p < row_ptr[i + 1] && col_idx[p] < j {
                        p += 1;
                    }
                    if p < row_ptr[i + 1] && col_idx[p] == j {
                        vals[p] -= lik * vals[q];
                    }
                }
            }
        }
        Ok(Ilu0 { a: lu, diag })
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let n = r.len();
        let (rp, ci, v) = (self.a.row_ptr(), self.a.col_idx(), self.a.values());
        let mut y = r.to_vec();
        for i in 0..n {
            for k in rp[i]..self.diag[i] {
                y[i] -= v[k] * y[ci[k]];
            }
        }
        for i in (0..n).rev() {
            for k in self.diag[i] + 1..rp[i + 1] {
                y[i] -= v[k] * y[ci[k]];
            }
            y[i] /= v[self.diag[i]];
        }
        y
    }
}

/// Right-preconditioned restarted GMRES.
fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    restart: usize,
    max_iter: usize,
    x0: Option<&[f64]>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
) -> std::result::Result<(Vec<f64>, usize), LinearSolveFailure> {
    let n = b.len();
    let m = restart.max(1);
    let nb = norm(b);
    let mut x = x0.filter(|x| x.len() == n).map_or_else(|| vec![0.0; n], |x| x.to_vec());
    let mut total = 0;
    let mut last_rel = 1.0;
    while total < max_iter {
        let (r, rel) = relative_residual(a, &x, b);
        last_rel = rel;
        if rel <= rel_tol {
            return Ok((x, total));
        }
        let beta = norm(&r);
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            total += 1;
            let mut w = a.mul_vec(&precond(&basis[k]));
            for (j, vj) in basis.iter().enumerate() {
                let hjk: f64 = w.iter().zip(vj).map(|(a, b)| a * b).sum();
                h[j][k] = hjk;
                w.iter_mut().zip(vj).for_each(|(w, v)| *w -= hjk * v);
            }
            let hk1 = norm(&w);
            h[k + 1][k] = hk1;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let d = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if d == 0.0 {
                break;
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() / nb <= rel_tol || hk1 == 0.0 || total >= max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / hk1).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut z = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&basis) {
            z.iter_mut().zip(vi).for_each(|(z, v)| *z += yi * v);
        }
        let dx = precond(&z);
        x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
        if k_used == 0 {
            break;
        }
    }
    let (_, rel) = relative_residual(a, &x, b);
    if rel <= rel_tol {
        Ok((x, total))
    } else {
        Err(LinearSolveFailure::Stagnated { iterations: total, residual: rel.min(last_rel.max(rel)) })
    }
}
