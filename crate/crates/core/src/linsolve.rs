//! Linear solves for the Newton corrections.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::assembly::SparseMatrix;
use crate::error::{Error, Result};

/// Relative residual accepted from the direct solver after refinement.
const DIRECT_TOL: f64 = 1e-10;
const REFINE_STEPS: usize = 2;

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    500
}

fn default_restart() -> usize {
    60
}

fn default_true() -> bool {
    true
}

fn default_lag_iter() -> usize {
    30
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Sparse LU with a fill-reducing ordering.
    #[default]
    Direct,
    /// Restarted GMRES, right-preconditioned with ILU(0).
    Krylov,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub method: Method,
    /// Relative residual target of the iterative solver.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_restart")]
    pub restart: usize,
    /// Direct method only: precondition GMRES with the previous LU factors and refactor only
    /// when that fails to converge within `lag_max_iter` iterations.
    #[serde(default = "default_true")]
    pub reuse_factorization: bool,
    #[serde(default = "default_lag_iter")]
    pub lag_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Direct,
            tol: default_tol(),
            max_iter: default_max_iter(),
            restart: default_restart(),
            reuse_factorization: true,
            lag_max_iter: default_lag_iter(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::config(format!("solver.tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.max_iter == 0 || self.restart == 0 {
            return Err(Error::config("solver.max_iter and solver.restart must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSolveReport {
    pub method: Method,
    /// Krylov iterations, or refinement steps for the direct solver.
    pub iterations: usize,
    /// `||K x - b|| / ||b||`.
    pub residual: f64,
    /// Whether a cached symbolic factorization was reused.
    pub reused_symbolic: bool,
    /// Whether a numeric factorization of an earlier matrix served as preconditioner.
    pub reused_numeric: bool,
}

/// Linear solver with state reused across calls on a fixed sparsity pattern.
pub struct LinearSolver {
    config: SolverConfig,
    symbolic: Option<(usize, usize, SymbolicLu<usize>)>,
    numeric: Option<Lu<usize, f64>>,
    /// Factorizations performed so far.
    factorizations: usize,
}

impl std::fmt::Debug for LinearSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearSolver")
            .field("config", &self.config)
            .field("has_symbolic", &self.symbolic.is_some())
            .finish()
    }
}

impl LinearSolver {
    pub fn new(config: SolverConfig) -> Self {
        LinearSolver { config, symbolic: None, numeric: None, factorizations: 0 }
    }

    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    /// Drops any cached numeric factorization.
    pub fn invalidate(&mut self) {
        self.numeric = None;
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Solves `K x = rhs`.
    pub fn solve(&mut self, k: &SparseMatrix, rhs: &[f64]) -> Result<(Vec<f64>, LinearSolveReport)> {
        assert_eq!(rhs.len(), k.n);
        if rhs.iter().all(|&v| v == 0.0) {
            let report = LinearSolveReport {
                method: self.config.method,
                iterations: 0,
                residual: 0.0,
                reused_symbolic: false,
                reused_numeric: false,
            };
            return Ok((vec![0.0; k.n], report));
        }
        match self.config.method {
            Method::Direct => self.solve_direct(k, rhs),
            Method::Krylov => {
                let ilu = Ilu0::new(k)?;
                let (x, iterations) = gmres(k, rhs, &ilu, &self.config)?;
                let residual = relative_residual(k, &x, rhs);
                let report = LinearSolveReport {
                    method: Method::Krylov,
                    iterations,
                    residual,
                    reused_symbolic: false,
                    reused_numeric: false,
                };
                Ok((x, report))
            }
        }
    }

    fn solve_direct(&mut self, k: &SparseMatrix, rhs: &[f64]) -> Result<(Vec<f64>, LinearSolveReport)> {
        let n = k.n;
        if self.config.reuse_factorization {
            let same = matches!(&self.symbolic, Some((sn, snnz, _)) if *sn == n && *snnz == k.nnz());
            if let (Some(lu), true) = (&self.numeric, same) {
                {
                    let cfg = SolverConfig {
                        tol: DIRECT_TOL,
                        max_iter: self.config.lag_max_iter,
                        restart: self.config.lag_max_iter,
                        ..self.config
                    };
                    if let Ok((x, iterations)) = gmres(k, rhs, &LuPreconditioner(lu), &cfg) {
                        let residual = relative_residual(k, &x, rhs);
                        if residual < 10.0 * DIRECT_TOL {
                            let report = LinearSolveReport {
                                method: Method::Direct,
                                iterations,
                                residual,
                                reused_symbolic: true,
                                reused_numeric: true,
                            };
                            return Ok((x, report));
                        }
                    }
                }
            }
        }
        // The CSR arrays of K are the CSC arrays of K^T; solve with the transpose.
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &k.row_ptr, None, &k.col_idx);
        let reused = matches!(&self.symbolic, Some((sn, snnz, _)) if *sn == n && *snnz == k.nnz());
        if !reused {
            let s =
                SymbolicLu::try_new(sym).map_err(|e| Error::LinearSolver(format!("symbolic factorization: {e:?}")))?;
            self.symbolic = Some((n, k.nnz(), s));
        }
        let symbolic = self.symbolic.as_ref().unwrap().2.clone();
        let kt = SparseColMatRef::new(sym, &k.values);
        let lu = Lu::try_new_with_symbolic(symbolic, kt)
            .map_err(|e| Error::LinearSolver(format!("numeric factorization: {e:?}")))?;
        self.factorizations += 1;
        let b = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        let sol = lu.solve_transpose(&b);
        let mut x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
        let mut residual = relative_residual(k, &x, rhs);
        let mut steps = 0;
        let mut r = vec![0.0; n];
        while !(residual < DIRECT_TOL) && steps < REFINE_STEPS && residual.is_finite() {
            k.mul_vec(&x, &mut r);
            let d = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i] - r[i]);
            let dx = lu.solve_transpose(&d);
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += dx[(i, 0)];
            }
            residual = relative_residual(k, &x, rhs);
            steps += 1;
        }
        if !residual.is_finite() || residual > 1e3 * DIRECT_TOL {
            return Err(Error::LinearSolver(format!(
                "direct solve residual {residual:.3e} (matrix singular or ill-conditioned)"
            )));
        }
        let report = LinearSolveReport {
            method: Method::Direct,
            iterations: steps,
            residual,
            reused_symbolic: reused,
            reused_numeric: false,
        };
        if self.config.reuse_factorization {
            self.numeric = Some(lu);
        }
        Ok((x, report))
    }
}

/// `||K x - b|| / ||b||`.
pub fn relative_residual(k: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut r = vec![0.0; k.n];
    k.mul_vec(x, &mut r);
    let num: f64 = r.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = b.iter().map(|v| v * v).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite `a`.
pub fn conjugate_gradient(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n;
    let inv_diag: Vec<f64> = (0..n)
        .map(|i| {
            let d = a.get(i, i);
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::LinearSolver(format!("non-positive diagonal {d:.3e} in row {i}")))
            }
        })
        .collect::<Result<_>>()?;
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        a.mul_vec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::LinearSolver("matrix is not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolver(format!("conjugate gradients did not reach {tol:.1e} in {max_iter} iterations")))
}

/// Right preconditioner `x = P^{-1} b`.
pub trait Preconditioner {
    fn apply(&self, b: &[f64], x: &mut [f64]);
}

/// Full LU factors of `K^T`, applied to `K` through the transposed solve.
struct LuPreconditioner<'a>(&'a Lu<usize, f64>);

impl Preconditioner for LuPreconditioner<'_> {
    fn apply(&self, b: &[f64], x: &mut [f64]) {
        let mut m = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        self.0.solve_transpose_in_place(m.as_mut());
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = m[(i, 0)];
        }
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    lu: SparseMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = a.n;
        let diag: Vec<usize> = (0..n)
            .map(|i| {
                let (cols, _) = a.row(i);
                cols.binary_search(&i)
                    .map(|k| a.row_ptr[i] + k)
                    .map_err(|_| Error::LinearSolver(format!("missing diagonal in row {i}")))
            })
            .collect::<Result<_>>()?;
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for kk in start..end {
                let k = lu.col_idx[kk];
                if k >= i {
                    break;
                }
                let pivot = lu.values[diag[k]];
                if pivot == 0.0 {
                    return Err(Error::LinearSolver(format!("zero pivot in ILU(0) at row {k}")));
                }
                let lik = lu.values[kk] / pivot;
                lu.values[kk] = lik;
                // a_ij -= l_ik * u_kj over the shared pattern
                let (ks, ke) = (diag[k] + 1, lu.row_ptr[k + 1]);
                let mut p = kk + 1;
                for q in ks..ke {
                    let j = lu.col_idx[q];
                    while p < end && lu.col_idx[p] < j {
                        p += 1;
                    }
                    if p == end {
                        break;
                    }
                    if lu.col_idx[p] == j {
                        lu.values[p] -= lik * lu.values[q];
                    }
                }
            }
            if lu.values[diag[i]] == 0.0 {
                return Err(Error::LinearSolver(format!("zero pivot in ILU(0) at row {i}")));
            }
        }
        Ok(Ilu0 { lu, diag })
    }
}

impl Preconditioner for Ilu0 {
    /// `x = (LU)^{-1} b`.
    fn apply(&self, b: &[f64], x: &mut [f64]) {
        let n = self.lu.n;
        for i in 0..n {
            let mut s = b[i];
            for k in self.lu.row_ptr[i]..self.diag[i] {
                s -= self.lu.values[k] * x[self.lu.col_idx[k]];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in self.diag[i] + 1..self.lu.row_ptr[i + 1] {
                s -= self.lu.values[k] * x[self.lu.col_idx[k]];
            }
            x[i] = s / self.lu.values[self.diag[i]];
        }
    }
}

/// Restarted GMRES with right preconditioning; returns the solution and iteration count.
pub fn gmres(a: &SparseMatrix, b: &[f64], m: &dyn Preconditioner, cfg: &SolverConfig) -> Result<(Vec<f64>, usize)> {
    let n = a.n;
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let restart = cfg.restart.min(n).max(1);
    let mut total = 0;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    while total < cfg.max_iter {
        a.mul_vec(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm(&r);
        if beta <= cfg.tol * bnorm {
            return Ok((x, total));
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut hcols: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::with_capacity(restart);
        let mut sn: Vec<f64> = Vec::with_capacity(restart);
        let mut g = vec![beta];
        let mut j = 0;
        while j < restart && total < cfg.max_iter {
            m.apply(&v[j], &mut z);
            a.mul_vec(&z, &mut w);
            let mut hcol = vec![0.0; j + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij: f64 = w.iter().zip(vi).map(|(a, b)| a * b).sum();
                hcol[i] = hij;
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm(&w);
            hcol[j + 1] = hn;
            for i in 0..j {
                let t = cs[i] * hcol[i] + sn[i] * hcol[i + 1];
                hcol[i + 1] = -sn[i] * hcol[i] + cs[i] * hcol[i + 1];
                hcol[i] = t;
            }
            let d = hcol[j].hypot(hcol[j + 1]);
            let (c, s) = if d == 0.0 { (1.0, 0.0) } else { (hcol[j] / d, hcol[j + 1] / d) };
            cs.push(c);
            sn.push(s);
            hcol[j] = d;
            hcol[j + 1] = 0.0;
            g.push(-s * g[j]);
            g[j] *= c;
            hcols.push(hcol);
            total += 1;
            j += 1;
            if g[j].abs() <= cfg.tol * bnorm || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        // back substitution for the Krylov coefficients
        let mut yv = vec![0.0; j];
        for i in (0..j).rev() {
            let mut s = g[i];
            for k in i + 1..j {
                s -= hcols[k][i] * yv[k];
            }
            yv[i] = s / hcols[i][i];
        }
        let mut u = vec![0.0; n];
        for (k, yk) in yv.iter().enumerate() {
            for (ui, vi) in u.iter_mut().zip(&v[k]) {
                *ui += yk * vi;
            }
        }
        m.apply(&u, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        if g[j].abs() <= cfg.tol * bnorm {
            a.mul_vec(&x, &mut r);
            let res: f64 = r.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if res <= 10.0 * cfg.tol * bnorm {
                return Ok((x, total));
            }
        }
    }
    let res = relative_residual(a, &x, b);
    if res <= cfg.tol {
        return Ok((x, total));
    }
    Err(Error::LinearSolver(format!("GMRES stalled at relative residual {res:.3e} after {total} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(n: usize, seed: u64) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 10.0 + rng.random::<f64>()));
            for _ in 0..4 {
                let j = rng.random_range(0..n);
                t.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
        SparseMatrix::from_triplets(n, &t)
    }

    #[test]
    fn identity_returns_rhs() {
        let k = SparseMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        let (x, rep) = LinearSolver::new(SolverConfig::default()).solve(&k, &b).unwrap();
        assert_eq!(x, b);
        assert!(rep.residual < 1e-15);
    }

    #[test]
    fn diagonal_two_by_two() {
        let k = SparseMatrix::from_triplets(2, &[(0, 0, 2.0), (1, 1, 4.0)]);
        for method in [Method::Direct, Method::Krylov] {
            let cfg = SolverConfig { method, tol: 1e-12, ..SolverConfig::default() };
            let (x, _) = LinearSolver::new(cfg).solve(&k, &[2.0, 4.0]).unwrap();
            assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn nonsymmetric_solve_residual() {
        let k = random_sparse(300, 5);
        let b: Vec<f64> = (0..300).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut s = LinearSolver::new(SolverConfig::default());
        let (x, rep) = s.solve(&k, &b).unwrap();
        assert!(relative_residual(&k, &x, &b) < 1e-10);
        assert!(!rep.reused_symbolic);
        let (_, rep) = s.solve(&k, &b).unwrap();
        assert!(rep.reused_symbolic);
    }

    #[test]
    fn lagged_factorization_preconditions_nearby_matrix() {
        let k = random_sparse(300, 5);
        let mut k2 = k.clone();
        for v in &mut k2.values {
            *v *= 1.01;
        }
        let b: Vec<f64> = (0..300).map(|i| (i as f64).cos()).collect();
        let mut s = LinearSolver::new(SolverConfig::default());
        s.solve(&k, &b).unwrap();
        let (x, rep) = s.solve(&k2, &b).unwrap();
        assert!(rep.reused_numeric);
        assert_eq!(s.factorizations(), 1);
        assert!(relative_residual(&k2, &x, &b) < 1e-10);
        let cfg = SolverConfig { reuse_factorization: false, ..SolverConfig::default() };
        let mut s = LinearSolver::new(cfg);
        s.solve(&k, &b).unwrap();
        let (_, rep) = s.solve(&k2, &b).unwrap();
        assert!(!rep.reused_numeric);
        assert_eq!(s.factorizations(), 2);
    }

    #[test]
    fn gmres_matches_direct() {
        let k = random_sparse(200, 9);
        let b: Vec<f64> = (0..200).map(|i| 1.0 + (i % 7) as f64).collect();
        let cfg = SolverConfig { method: Method::Krylov, tol: 1e-12, ..SolverConfig::default() };
        let (x, rep) = LinearSolver::new(cfg).solve(&k, &b).unwrap();
        assert!(rep.residual < 1e-11);
        let (xd, _) = LinearSolver::new(SolverConfig::default()).solve(&k, &b).unwrap();
        for (a, d) in x.iter().zip(&xd) {
            assert_abs_diff_eq!(a, d, epsilon = 1e-9);
        }
    }

    #[test]
    fn singular_matrix_fails() {
        let k = SparseMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 0, 1.0)]);
        let r = LinearSolver::new(SolverConfig::default()).solve(&k, &[1.0, 1.0, 1.0]);
        assert!(matches!(r, Err(Error::LinearSolver(_))));
    }

    #[test]
    fn cg_on_spd() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, &t);
        let b = vec![1.0; n];
        let x = conjugate_gradient(&a, &b, 1e-14, 500).unwrap();
        assert!(relative_residual(&a, &x, &b) < 1e-13);
    }
}
