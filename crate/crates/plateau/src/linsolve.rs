//! Sparse symmetric linear solves with factorize-once / solve-many
//! semantics.
//!
//! The inner loop of the splitting solver repeatedly solves `A u = b` with
//! the *same* matrix `A = γ_C K_curl + γ_M M` (symmetric positive definite)
//! and a new right-hand side every iteration, so the Cholesky factors are
//! computed once up front and reused. A Jacobi-preconditioned conjugate
//! gradient backend is available for systems too large to factor; both
//! backends deliver `‖Ax − b‖₂ ≤ 1e−10 ‖b‖₂`.

use thiserror::Error;

use crate::fespace::SparseMatrix;

/// Relative residual guaranteed by [`Factorization::solve`].
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Diagonal entries below `PIVOT_CUTOFF · max_i a_ii` are treated as
/// singular before attempting a factorization (a Cholesky pivot never
/// exceeds the corresponding diagonal entry).
const PIVOT_CUTOFF: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum LinsolveError {
    #[error("matrix is {nrows}×{ncols}; a symmetric solve needs a square matrix")]
    NonSquare { nrows: usize, ncols: usize },
    #[error("matrix is numerically singular: {detail}")]
    Singular { detail: String },
    #[error("right-hand side has {got} entries, factorization expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(
        "conjugate gradients stalled at relative residual {residual:.3e} \
         after {iterations} iterations"
    )]
    DidNotConverge { residual: f64, iterations: usize },
}

enum Backend {
    Cholesky(faer::sparse::linalg::solvers::Llt<usize, f64>),
    /// Jacobi-preconditioned CG; keeps its own copy of the matrix.
    ConjugateGradient { a: SparseMatrix, inv_diag: Vec<f64> },
}

/// Reusable factorization of a symmetric positive-definite matrix.
pub struct Factorization {
    n: usize,
    backend: Backend,
}

fn check_square(a: &SparseMatrix) -> Result<usize, LinsolveError> {
    if a.nrows() != a.ncols() {
        return Err(LinsolveError::NonSquare { nrows: a.nrows(), ncols: a.ncols() });
    }
    Ok(a.nrows())
}

fn check_diagonal(a: &SparseMatrix) -> Result<Vec<f64>, LinsolveError> {
    let n = a.nrows();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let max_diag = diag.iter().fold(0.0f64, |m, &d| m.max(d.abs()));
    for (i, &d) in diag.iter().enumerate() {
        if d <= PIVOT_CUTOFF * max_diag {
            return Err(LinsolveError::Singular {
                detail: format!("diagonal entry {i} is {d:.3e} (max diagonal {max_diag:.3e})"),
            });
        }
    }
    Ok(diag)
}

/// Computes the sparse Cholesky factorization of `A`.
///
/// `A` must be square, symmetric, and positive definite; an indefinite or
/// numerically singular matrix (pivot below `1e−14` of the largest
/// diagonal entry) is rejected.
pub fn factorize(a: &SparseMatrix) -> Result<Factorization, LinsolveError> {
    let n = check_square(a)?;
    check_diagonal(a)?;
    let triplets: Vec<faer::sparse::Triplet<usize, usize, f64>> =
        a.triplets().map(|(r, c, v)| faer::sparse::Triplet::new(r, c, v)).collect();
    let mat = faer::sparse::SparseColMat::try_new_from_triplets(n, n, &triplets)
        .expect("CSR triplets are always in-bounds");
    let llt = mat.sp_cholesky(faer::Side::Lower).map_err(|e| LinsolveError::Singular {
        detail: format!("Cholesky factorization failed: {e:?}"),
    })?;
    Ok(Factorization { n, backend: Backend::Cholesky(llt) })
}

/// Sets up the conjugate-gradient backend instead of factoring `A`; same
/// residual guarantee, no fill-in, for systems too large to factor.
pub fn factorize_cg(a: &SparseMatrix) -> Result<Factorization, LinsolveError> {
    let n = check_square(a)?;
    let diag = check_diagonal(a)?;
    let inv_diag = diag.into_iter().map(|d| 1.0 / d).collect();
    Ok(Factorization { n, backend: Backend::ConjugateGradient { a: a.clone(), inv_diag } })
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` to relative residual [`SOLVE_TOLERANCE`].
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinsolveError> {
        if b.len() != self.n {
            return Err(LinsolveError::DimensionMismatch { expected: self.n, got: b.len() });
        }
        match &self.backend {
            Backend::Cholesky(llt) => {
                use faer::linalg::solvers::Solve;
                let rhs = faer::Mat::from_fn(self.n, 1, |i, _| b[i]);
                let x = llt.solve(&rhs);
                Ok((0..self.n).map(|i| x[(i, 0)]).collect())
            }
            Backend::ConjugateGradient { a, inv_diag } => {
                conjugate_gradient(a, inv_diag, b)
            }
        }
    }
}

/// Jacobi-preconditioned conjugate gradients to relative residual
/// [`SOLVE_TOLERANCE`]; strictly sequential, hence deterministic.
fn conjugate_gradient(
    a: &SparseMatrix,
    inv_diag: &[f64],
    b: &[f64],
) -> Result<Vec<f64>, LinsolveError> {
    let n = b.len();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let max_iters = 20 * n.max(100);
    for it in 0..max_iters {
        let ap = a.matvec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(LinsolveError::Singular {
                detail: format!("nonpositive curvature pᵀAp = {pap:.3e} in CG step {it}"),
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm <= SOLVE_TOLERANCE * b_norm {
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
    let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    Err(LinsolveError::DidNotConverge { residual: r_norm / b_norm, iterations: max_iters })
}
