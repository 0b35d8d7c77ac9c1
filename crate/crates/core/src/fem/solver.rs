//! Linear solvers, selectable by name.

use std::sync::Mutex;

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::LuError;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, Mat};

use super::sparse::{dot, norm2, CsrMatrix, SparseSystem};
use crate::error::{Error, Result};

/// A factorized (or prepared) operator that can be applied to many right-hand sides.
pub trait Factorization: Send + Sync {
    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>>;
}

pub trait LinearSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn factorize(&self, matrix: &CsrMatrix) -> Result<Box<dyn Factorization>>;

    fn solve(&self, system: &SparseSystem) -> Result<Vec<f64>> {
        self.factorize(&system.matrix)?.solve(&system.rhs)
    }
}

/// Names accepted by [`solver_by_name`].
pub const SOLVER_NAMES: [&str; 3] = ["lu", "cg", "cg-jacobi"];

pub fn solver_by_name(name: &str, tol: f64, max_iter: usize) -> Result<Box<dyn LinearSolver>> {
    match name {
        "lu" => Ok(Box::new(DirectLu::default())),
        "cg" => Ok(Box::new(ConjugateGradient {
            preconditioner: Preconditioner::None,
            tol,
            max_iter,
        })),
        "cg-jacobi" => Ok(Box::new(ConjugateGradient {
            preconditioner: Preconditioner::Jacobi,
            tol,
            max_iter,
        })),
        other => Err(Error::Config(format!(
            "unknown linear solver \"{other}\" (available: {})",
            SOLVER_NAMES.join(", ")
        ))),
    }
}

/// Sparse LU from faer. The symbolic analysis is cached and reused while the
/// sparsity pattern stays the same.
#[derive(Default)]
pub struct DirectLu {
    cache: Mutex<Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>>,
}

struct LuFactor {
    lu: Lu<usize, f64>,
    matrix: CsrMatrix,
}

impl LinearSolver for DirectLu {
    fn name(&self) -> &'static str {
        "lu"
    }

    fn factorize(&self, matrix: &CsrMatrix) -> Result<Box<dyn Factorization>> {
        if matrix.nrows != matrix.ncols {
            return Err(Error::Assembly("LU needs a square matrix".into()));
        }
        let n = matrix.nrows;
        if n == 0 {
            return Ok(Box::new(LuFactor::empty()));
        }
        faer::set_global_parallelism(faer::Par::Seq);
        // The CSR arrays of A are the CSC arrays of Aᵀ; factor Aᵀ and solve transposed.
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &matrix.row_ptr, None, &matrix.col_idx);
        let at = SparseColMatRef::new(sym, &matrix.values);
        let symbolic = {
            let mut cache = self.cache.lock().expect("solver cache lock");
            match cache.as_ref() {
                Some((rp, ci, s)) if *rp == matrix.row_ptr && *ci == matrix.col_idx => s.clone(),
                _ => {
                    let s = SymbolicLu::try_new(sym).map_err(|e| Error::Assembly(format!("symbolic LU failed: {e:?}")))?;
                    *cache = Some((matrix.row_ptr.clone(), matrix.col_idx.clone(), s.clone()));
                    s
                }
            }
        };
        let lu = Lu::try_new_with_symbolic(symbolic, at).map_err(map_lu_error)?;
        Ok(Box::new(LuFactor {
            lu,
            matrix: matrix.clone(),
        }))
    }
}

fn map_lu_error(e: LuError) -> Error {
    match e {
        LuError::SymbolicSingular { index } => Error::SingularPivot { pivot: index },
        LuError::Generic(g) => Error::Assembly(format!("sparse LU failed: {g:?}")),
    }
}

impl LuFactor {
    fn empty() -> Self {
        let m = CsrMatrix::zeros(0, 0);
        let sym = SymbolicSparseColMatRef::new_checked(0, 0, &m.row_ptr, None, &m.col_idx);
        let lu = Lu::try_new_with_symbolic(SymbolicLu::try_new(sym).expect("empty"), SparseColMatRef::new(sym, &m.values)).expect("empty");
        Self { lu, matrix: m }
    }
}

impl Factorization for LuFactor {
    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.matrix.nrows;
        if rhs.len() != n {
            return Err(Error::Assembly(format!("rhs length {} for {n}×{n} system", rhs.len())));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut x = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        self.lu.solve_transpose_in_place_with_conj(Conj::No, x.as_mut());
        let x: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::SingularPivot { pivot: i });
        }
        // Zero pivots replaced by tiny values give huge, inaccurate solutions.
        let r: Vec<f64> = self.matrix.mul_vec(&x).iter().zip(rhs).map(|(a, b)| a - b).collect();
        let scale = self.matrix.norm_fro() * norm2(&x) + norm2(rhs);
        if norm2(&r) > 1e-8 * scale.max(f64::MIN_POSITIVE) {
            let worst = r
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map_or(0, |(i, _)| i);
            return Err(Error::SingularPivot { pivot: worst });
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

pub struct ConjugateGradient {
    pub preconditioner: Preconditioner,
    pub tol: f64,
    pub max_iter: usize,
}

struct CgOperator {
    matrix: CsrMatrix,
    inv_diag: Option<Vec<f64>>,
    tol: f64,
    max_iter: usize,
}

impl LinearSolver for ConjugateGradient {
    fn name(&self) -> &'static str {
        match self.preconditioner {
            Preconditioner::None => "cg",
            Preconditioner::Jacobi => "cg-jacobi",
        }
    }

    fn factorize(&self, matrix: &CsrMatrix) -> Result<Box<dyn Factorization>> {
        let inv_diag = match self.preconditioner {
            Preconditioner::None => None,
            Preconditioner::Jacobi => Some(
                matrix
                    .diagonal()
                    .iter()
                    .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
                    .collect(),
            ),
        };
        Ok(Box::new(CgOperator {
            matrix: matrix.clone(),
            inv_diag,
            tol: self.tol,
            max_iter: self.max_iter,
        }))
    }
}

impl Factorization for CgOperator {
    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        cg(&self.matrix, rhs, None, self.inv_diag.as_deref(), self.tol, self.max_iter).map(|(x, _)| x)
    }
}

/// Preconditioned conjugate gradients from `x0` (zero by default). Returns
/// the solution and the iteration count.
pub fn cg(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    inv_diag: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let ax = a.mul_vec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let precond = |r: &[f64]| -> Vec<f64> {
        match inv_diag {
            Some(d) => r.iter().zip(d).map(|(a, b)| a * b).collect(),
            None => r.to_vec(),
        }
    };
    if norm2(&r) <= tol * bnorm {
        return Ok((x, 0));
    }
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Breakdown {
                iteration: it,
                reason: format!("non-positive curvature pᵀAp = {pap:e}"),
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= tol * bnorm {
            return Ok((x, it));
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::IterativeFailure {
        iterations: max_iter,
        residual: norm2(&r) / bnorm,
    })
}

pub fn solve_direct(system: &SparseSystem) -> Result<Vec<f64>> {
    DirectLu::default().solve(system)
}

pub fn solve_cg(system: &SparseSystem, preconditioner: Preconditioner, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    ConjugateGradient {
        preconditioner,
        tol,
        max_iter,
    }
    .solve(system)
}
