//! Solves `L_II x_I = −L_IB x_B` for the free entries of a Laplacian system.
//!
//! The primary path is a sparse Cholesky factorization. The symbolic analysis
//! depends only on the sparsity pattern and the free set, so a
//! [`ConstrainedSolver`] computes it once and reuses it for every later matrix
//! with the same pattern. When the numeric factorization breaks down (an
//! indefinite stretch Laplacian after a fold, say) or leaves a large
//! residual, a Jacobi-scaled MINRES run takes over.

use std::sync::{Arc, OnceLock};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{MatMut, Side};

use crate::error::{Error, Result};
use crate::laplacian::{SparseLaplacian, SparsityPattern};

/// Relative residual a solve aims for.
pub const TARGET_RESIDUAL: f64 = 1e-10;
/// Relative residual above which a solve is reported as failed.
pub const FAILURE_RESIDUAL: f64 = 1e-6;
/// Relative tolerance of the MINRES fallback.
pub const MINRES_TOLERANCE: f64 = 1e-12;

const REFINEMENT_STEPS: usize = 3;

/// A Laplacian with a prescribed value on every fixed index.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem<'a> {
    pub laplacian: &'a SparseLaplacian,
    pub free_indices: Vec<usize>,
    pub fixed_indices: Vec<usize>,
    pub fixed_values: Vec<f64>,
}

impl ConstrainedSystem<'_> {
    /// Checks that free and fixed indices partition `0..n` and that every
    /// fixed value is finite.
    pub fn validate(&self) -> Result<()> {
        let n = self.laplacian.dim();
        if self.fixed_indices.len() != self.fixed_values.len() {
            return Err(Error::InvalidInput(format!(
                "{} fixed indices but {} fixed values",
                self.fixed_indices.len(),
                self.fixed_values.len()
            )));
        }
        let mut seen = vec![false; n];
        for &i in self.free_indices.iter().chain(&self.fixed_indices) {
            if i >= n {
                return Err(Error::InvalidInput(format!("index {i} out of range 0..{n}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidInput(format!("index {i} is listed twice")));
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!("index {i} is neither free nor fixed")));
        }
        if let Some(v) = self.fixed_values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("fixed value {v} is not finite")));
        }
        Ok(())
    }
}

/// Solves a single constrained system, returning the full-length solution.
pub fn solve_constrained(system: &ConstrainedSystem<'_>) -> Result<Vec<f64>> {
    system.validate()?;
    let solver = ConstrainedSolver::new(system.laplacian.pattern(), &system.free_indices)?;
    let mut x = vec![0.0; system.laplacian.dim()];
    for (&i, &v) in system.fixed_indices.iter().zip(&system.fixed_values) {
        x[i] = v;
    }
    solver.solve(system.laplacian, &x).map(|(x, _)| x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Nothing to solve: every index was fixed.
    Trivial,
    Cholesky,
    Minres,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub method: SolveMethod,
    /// `‖L_II x_I + L_IB x_B‖ / max(1, ‖L_IB x_B‖)`.
    pub residual: f64,
}

/// Compressed-column square matrix (both triangles stored).
#[derive(Debug, Clone)]
struct Csc {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Csc {
    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for c in 0..self.n {
            let xc = x[c];
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                out[self.row_idx[k]] += self.values[k] * xc;
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                if self.row_idx[k] == c {
                    d[c] += self.values[k];
                }
            }
        }
        d
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `‖A y − b‖ / max(1, ‖b‖)`.
fn relative_residual(a: &Csc, y: &[f64], b: &[f64], scratch: &mut [f64]) -> f64 {
    a.matvec(y, scratch);
    let r: f64 = scratch.iter().zip(b).map(|(ay, bi)| (ay - bi).powi(2)).sum();
    r.sqrt() / norm(b).max(1.0)
}

/// Reusable solver for one sparsity pattern and one free index set.
#[derive(Debug)]
pub struct ConstrainedSolver {
    pattern: Arc<SparsityPattern>,
    free: Vec<usize>,
    /// Free-block structure, with `src[k]` the Laplacian value slot of entry `k`.
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    src: Vec<usize>,
    /// Coupling to fixed columns, row by row: `(value slot, global column)`.
    coupling_ptr: Vec<usize>,
    coupling: Vec<(usize, usize)>,
    symbolic: OnceLock<std::result::Result<SymbolicLlt<usize>, String>>,
}

impl ConstrainedSolver {
    /// Prepares the free-block extraction. `free` may be in any order; it is
    /// sorted internally.
    pub fn new(pattern: &Arc<SparsityPattern>, free: &[usize]) -> Result<Self> {
        let n = pattern.dim();
        let mut free = free.to_vec();
        free.sort_unstable();
        free.dedup();
        if free.last().is_some_and(|&i| i >= n) {
            return Err(Error::InvalidInput(format!("free index out of range 0..{n}")));
        }
        let mut local = vec![usize::MAX; n];
        for (k, &g) in free.iter().enumerate() {
            local[g] = k;
        }
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut src = Vec::new();
        let mut coupling_ptr = vec![0];
        let mut coupling = Vec::new();
        // The pattern is symmetric, so row `g` of the Laplacian is also column `g`.
        for &g in &free {
            for slot in pattern.row(g) {
                let j = pattern.col_idx()[slot];
                if local[j] != usize::MAX {
                    row_idx.push(local[j]);
                    src.push(slot);
                } else {
                    coupling.push((slot, j));
                }
            }
            col_ptr.push(row_idx.len());
            coupling_ptr.push(coupling.len());
        }
        Ok(ConstrainedSolver {
            pattern: Arc::clone(pattern),
            free,
            col_ptr,
            row_idx,
            src,
            coupling_ptr,
            coupling,
            symbolic: OnceLock::new(),
        })
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    fn symbolic(&self) -> std::result::Result<&SymbolicLlt<usize>, String> {
        self.symbolic
            .get_or_init(|| {
                let n = self.free.len();
                let sym = SymbolicSparseColMatRef::new_checked(n, n, &self.col_ptr, None, &self.row_idx);
                SymbolicLlt::try_new(sym, Side::Lower).map_err(|e| format!("{e:?}"))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Solves for the free entries of `x`, whose fixed entries hold the
    /// prescribed values. Returns the completed vector.
    pub fn solve(&self, laplacian: &SparseLaplacian, x: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        if !Arc::ptr_eq(laplacian.pattern(), &self.pattern) {
            return Err(Error::InvalidInput(
                "Laplacian does not share the solver's sparsity pattern".into(),
            ));
        }
        assert_eq!(x.len(), self.pattern.dim());
        let mut out = x.to_vec();
        let n = self.free.len();
        if n == 0 {
            return Ok((
                out,
                SolveStats {
                    method: SolveMethod::Trivial,
                    residual: 0.0,
                },
            ));
        }

        let vals = laplacian.values();
        let a = Csc {
            n,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values: self.src.iter().map(|&s| vals[s]).collect(),
        };
        let b: Vec<f64> = (0..n)
            .map(|r| {
                -self.coupling[self.coupling_ptr[r]..self.coupling_ptr[r + 1]]
                    .iter()
                    .map(|&(slot, j)| vals[slot] * x[j])
                    .sum::<f64>()
            })
            .collect();
        let mut scratch = vec![0.0; n];

        let mut best: Option<(Vec<f64>, f64, SolveMethod)> = None;
        match self.cholesky(&a, &b, &mut scratch) {
            Ok((y, res)) => {
                if res <= TARGET_RESIDUAL {
                    best = Some((y, res, SolveMethod::Cholesky));
                } else {
                    log::debug!("Cholesky residual {res:e} above target, trying MINRES");
                    best = Some((y, res, SolveMethod::Cholesky));
                }
            }
            Err(msg) => log::debug!("Cholesky factorization failed ({msg}), trying MINRES"),
        }
        if best.as_ref().is_none_or(|(_, r, _)| *r > TARGET_RESIDUAL) {
            let start = best.as_ref().map(|(y, _, _)| y.clone());
            let y = minres_jacobi(&a, &b, start.as_deref(), MINRES_TOLERANCE, 10 * n);
            let res = relative_residual(&a, &y, &b, &mut scratch);
            if best.as_ref().is_none_or(|(_, r, _)| res < *r) {
                best = Some((y, res, SolveMethod::Minres));
            }
        }
        let (y, residual, method) = best.expect("at least one solve ran");
        if !(residual <= FAILURE_RESIDUAL) {
            return Err(Error::Singular(format!(
                "relative residual {residual:e} after fallback ({n} free unknowns)"
            )));
        }
        if residual > TARGET_RESIDUAL {
            log::warn!("linear solve accepted with relative residual {residual:e}");
        }
        for (&g, v) in self.free.iter().zip(y) {
            out[g] = v;
        }
        Ok((out, SolveStats { method, residual }))
    }

    fn cholesky(&self, a: &Csc, b: &[f64], scratch: &mut [f64]) -> std::result::Result<(Vec<f64>, f64), String> {
        let n = a.n;
        let symbolic = self.symbolic()?.clone();
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &a.col_ptr, None, &a.row_idx);
        let llt = Llt::try_new_with_symbolic(symbolic, SparseColMatRef::new(sym, &a.values), Side::Lower)
            .map_err(|e| format!("{e:?}"))?;
        let mut y = b.to_vec();
        llt.solve_in_place(MatMut::from_column_major_slice_mut(&mut y, n, 1));
        let mut res = relative_residual(a, &y, b, scratch);
        if !res.is_finite() {
            return Err("non-finite solution".into());
        }
        // Iterative refinement with the same factor.
        for _ in 0..REFINEMENT_STEPS {
            if res <= 1e-3 * TARGET_RESIDUAL {
                break;
            }
            a.matvec(&y, scratch);
            let mut r: Vec<f64> = b.iter().zip(scratch.iter()).map(|(bi, ay)| bi - ay).collect();
            llt.solve_in_place(MatMut::from_column_major_slice_mut(&mut r, n, 1));
            let candidate: Vec<f64> = y.iter().zip(&r).map(|(yi, d)| yi + d).collect();
            let cres = relative_residual(a, &candidate, b, scratch);
            if !(cres < res) {
                break;
            }
            y = candidate;
            res = cres;
        }
        Ok((y, res))
    }
}

/// MINRES on the symmetrically Jacobi-scaled system `D^{-1/2} A D^{-1/2}`,
/// with `D = |diag A|` (entries of zero are left unscaled).
fn minres_jacobi(a: &Csc, b: &[f64], x0: Option<&[f64]>, tol: f64, max_iter: usize) -> Vec<f64> {
    let n = a.n;
    let scale: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|d| if *d != 0.0 { 1.0 / d.abs().sqrt() } else { 1.0 })
        .collect();
    let mut scaled = a.clone();
    for c in 0..n {
        for k in a.col_ptr[c]..a.col_ptr[c + 1] {
            scaled.values[k] *= scale[a.row_idx[k]] * scale[c];
        }
    }
    let rhs: Vec<f64> = b.iter().zip(&scale).map(|(bi, s)| bi * s).collect();
    let start: Vec<f64> = match x0 {
        Some(x) => x.iter().zip(&scale).map(|(xi, s)| xi / s).collect(),
        None => vec![0.0; n],
    };
    let y = minres(&scaled, &rhs, start, tol, max_iter);
    y.iter().zip(&scale).map(|(yi, s)| yi * s).collect()
}

/// Plain MINRES for a symmetric (possibly indefinite) matrix.
fn minres(a: &Csc, b: &[f64], mut x: Vec<f64>, tol: f64, max_iter: usize) -> Vec<f64> {
    let n = a.n;
    let mut av = vec![0.0; n];
    a.matvec(&x, &mut av);
    let r0: Vec<f64> = b.iter().zip(&av).map(|(bi, ai)| bi - ai).collect();
    let beta1 = norm(&r0);
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    if beta1 <= tol * bnorm {
        return x;
    }
    let mut v_prev = vec![0.0; n];
    let mut v: Vec<f64> = r0.iter().map(|r| r / beta1).collect();
    let mut w_prev2 = vec![0.0; n];
    let mut w_prev = vec![0.0; n];
    let (mut c0, mut s0, mut c1, mut s1) = (1.0, 0.0, 1.0, 0.0);
    let mut eta = beta1;
    let mut beta_prev = 0.0;
    for _ in 0..max_iter {
        a.matvec(&v, &mut av);
        let alpha = dot(&v, &av);
        let mut v_next: Vec<f64> = (0..n)
            .map(|i| av[i] - alpha * v[i] - beta_prev * v_prev[i])
            .collect();
        let beta_next = norm(&v_next);

        // Apply the two previous rotations to the new column of T, then
        // build the rotation that annihilates its subdiagonal.
        let rho3 = s0 * beta_prev;
        let rho2 = c1 * c0 * beta_prev + s1 * alpha;
        let gamma_bar = -s1 * c0 * beta_prev + c1 * alpha;
        let rho1 = gamma_bar.hypot(beta_next);
        if rho1 == 0.0 {
            break;
        }
        let (c, s) = (gamma_bar / rho1, beta_next / rho1);
        let w: Vec<f64> = (0..n)
            .map(|i| (v[i] - rho2 * w_prev[i] - rho3 * w_prev2[i]) / rho1)
            .collect();
        for i in 0..n {
            x[i] += c * eta * w[i];
        }
        eta *= -s;

        if eta.abs() <= tol * bnorm || beta_next == 0.0 {
            break;
        }
        for vi in &mut v_next {
            *vi /= beta_next;
        }
        v_prev = std::mem::replace(&mut v, v_next);
        w_prev2 = std::mem::replace(&mut w_prev, w);
        beta_prev = beta_next;
        (c0, s0, c1, s1) = (c1, s1, c, s);
    }
    x
}
