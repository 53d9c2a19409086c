//! Generalized symmetric-definite eigenproblems `A x = λ M x` and source
//! problems `A x = b`.
//!
//! Small systems are reduced to a standard dense problem through the
//! Cholesky factor of `M`. Large systems use a sparse Cholesky factorization
//! of `A` and a restarted block Krylov iteration on `A⁻¹M`, orthogonalized in
//! the `M` inner product; the block form resolves multiple eigenvalues.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Llt;
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::SymmetricSparseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Dense below [`EigenOptions::dense_threshold`], shift-invert above.
    Auto,
    Dense,
    ShiftInvert,
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub method: Method,
    /// Relative residual target `‖Ax − λMx‖ ≤ tol ‖A‖∞ ‖x‖`.
    pub tol: f64,
    pub seed: u64,
    pub max_restarts: usize,
    pub dense_threshold: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            method: Method::Auto,
            tol: 1e-10,
            seed: 0x5eed,
            max_restarts: 200,
            dense_threshold: 2000,
        }
    }
}

/// Smallest eigenpairs in ascending order. Eigenvectors are `M`-orthonormal
/// with their largest-magnitude component positive.
#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    /// `‖Ax − λMx‖ / (‖A‖∞ ‖x‖)` per pair.
    pub residuals: Vec<f64>,
    /// Restarts used; zero for the dense path.
    pub iterations: usize,
}

/// Sparse `LLᵀ` factorization with a fill-reducing ordering.
pub struct SparseCholesky {
    llt: Llt<usize, f64>,
    dim: usize,
}

impl SparseCholesky {
    /// `what` names the matrix in the error message.
    pub fn new(a: &SymmetricSparseMatrix, what: &str) -> Result<Self> {
        let lower = a.to_faer_lower()?;
        let llt = lower
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::NotPositiveDefinite(format!("{what}: {e:?}")))?;
        Ok(SparseCholesky { llt, dim: a.dim() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(self.dim, 1, |i, _| b[i]);
        self.llt.solve_in_place(x.as_mut());
        (0..self.dim).map(|i| x[(i, 0)]).collect()
    }

    pub fn solve_in_place(&self, b: &mut Mat<f64>) {
        self.llt.solve_in_place(b.as_mut());
    }
}

/// Solves `A x = b` for symmetric positive definite `A`, refining until the
/// normwise backward error is at most `1e-12`.
pub fn solve_source(a: &SymmetricSparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::InvalidParameter(format!(
            "right-hand side has length {}, matrix has dimension {}",
            b.len(),
            a.dim()
        )));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; b.len()]);
    }
    let chol = SparseCholesky::new(a, "system matrix")?;
    let anorm = a.norm_inf();
    let mut x = chol.solve(b);
    let mut rel = f64::INFINITY;
    for step in 0..4 {
        let r: Vec<f64> = b.iter().zip(a.mul_vec(&x)).map(|(bi, ai)| bi - ai).collect();
        rel = norm2(&r) / (anorm * norm2(&x) + bnorm);
        if rel <= 1e-12 {
            return Ok(x);
        }
        if step < 3 {
            let dx = chol.solve(&r);
            x.iter_mut().zip(dx).for_each(|(xi, d)| *xi += d);
        }
    }
    Err(Error::NoConvergence {
        iterations: 3,
        worst_residual: rel,
        residuals: vec![rel],
    })
}

pub fn solve_gevp(
    a: &SymmetricSparseMatrix,
    m: &SymmetricSparseMatrix,
    k: usize,
    opts: &EigenOptions,
) -> Result<EigenSolution> {
    let n = a.dim();
    if m.dim() != n {
        return Err(Error::InvalidParameter(format!(
            "stiffness has dimension {n}, mass has dimension {}",
            m.dim()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "requested {k} eigenpairs of a problem of dimension {n}"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let dense = match opts.method {
        Method::Dense => true,
        Method::ShiftInvert => false,
        Method::Auto => n <= opts.dense_threshold,
    };
    let (values, vectors, iterations) = if dense {
        let (v, x) = dense_gevp(a, m, k)?;
        (v, x, 0)
    } else {
        shift_invert(a, m, k, opts)?
    };

    let anorm = a.norm_inf();
    let mut eigenvectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (lambda, mut x) in values.iter().copied().zip(vectors) {
        normalize_sign(&mut x);
        residuals.push(relative_residual(a, m, lambda, &x, anorm));
        eigenvectors.push(x);
    }
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if !(worst <= opts.tol) {
        return Err(Error::NoConvergence {
            iterations,
            worst_residual: worst,
            residuals,
        });
    }
    Ok(EigenSolution {
        eigenvalues: values,
        eigenvectors,
        residuals,
        iterations,
    })
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn relative_residual(a: &SymmetricSparseMatrix, m: &SymmetricSparseMatrix, lambda: f64, x: &[f64], anorm: f64) -> f64 {
    let ax = a.mul_vec(x);
    let mx = m.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(&mx).map(|(p, q)| p - lambda * q).collect();
    let denom = anorm * norm2(x);
    if denom == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / denom
    }
}

fn normalize_sign(x: &mut [f64]) {
    let pivot = x
        .iter()
        .copied()
        .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
    if pivot < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

fn dense_gevp(a: &SymmetricSparseMatrix, m: &SymmetricSparseMatrix, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.dim();
    let ad = a.to_faer_dense();
    let md = m.to_faer_dense();
    let a_llt = ad
        .llt(Side::Lower)
        .map_err(|e| Error::NotPositiveDefinite(format!("stiffness matrix: {e:?}")))?;
    let llt = md
        .llt(Side::Lower)
        .map_err(|e| Error::NotPositiveDefinite(format!("mass matrix: {e:?}")))?;
    let l = llt.L();

    // C = L⁻¹ A L⁻ᵀ, using the symmetry of A for the second solve.
    let mut x = ad.clone();
    l.solve_lower_triangular_in_place(x.as_mut());
    let mut c = x.transpose().to_owned();
    l.solve_lower_triangular_in_place(c.as_mut());
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));

    let eig = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Internal(format!("dense eigensolver failed: {e:?}")))?;
    let p = (k + 5).min(n);
    let mut y = eig.U().get(.., 0..p).to_owned();
    l.transpose().solve_upper_triangular_in_place(y.as_mut());

    // One step of inverse subspace iteration removes the accuracy lost in
    // the reduction through L.
    let mut z = Mat::from_fn(n, p, |i, j| (0..n).map(|q| md[(i, q)] * y[(q, j)]).sum::<f64>());
    a_llt.solve_in_place(z.as_mut());
    let (values, vectors) = rayleigh_ritz(a, m, &z)?;
    Ok((values[..k].to_vec(), vectors[..k].to_vec()))
}

/// Ritz pairs of the pencil `(A, M)` on the column span of `z`, ascending.
fn rayleigh_ritz(a: &SymmetricSparseMatrix, m: &SymmetricSparseMatrix, z: &Mat<f64>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (n, p) = (z.nrows(), z.ncols());
    let col = |j: usize| -> Vec<f64> { (0..n).map(|i| z[(i, j)]).collect() };
    let az: Vec<Vec<f64>> = (0..p).map(|j| a.mul_vec(&col(j))).collect();
    let mz: Vec<Vec<f64>> = (0..p).map(|j| m.mul_vec(&col(j))).collect();
    let dot = |x: &[f64], j: usize| -> f64 { (0..n).map(|i| x[i] * z[(i, j)]).sum() };
    let ar = Mat::from_fn(p, p, |i, j| 0.5 * (dot(&az[j], i) + dot(&az[i], j)));
    let mr = Mat::from_fn(p, p, |i, j| 0.5 * (dot(&mz[j], i) + dot(&mz[i], j)));
    let llt = mr
        .llt(Side::Lower)
        .map_err(|e| Error::Internal(format!("Ritz basis lost independence: {e:?}")))?;
    let l = llt.L();
    let mut c = ar;
    l.solve_lower_triangular_in_place(c.as_mut());
    let mut c = c.transpose().to_owned();
    l.solve_lower_triangular_in_place(c.as_mut());
    let c = Mat::from_fn(p, p, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let eig = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Internal(format!("Ritz eigensolver failed: {e:?}")))?;
    let s = eig.S().column_vector();
    let mut y = eig.U().to_owned();
    l.transpose().solve_upper_triangular_in_place(y.as_mut());
    let x = z * &y;
    let values = (0..p).map(|i| s[i]).collect();
    let vectors = (0..p).map(|j| (0..n).map(|i| x[(i, j)]).collect()).collect();
    Ok((values, vectors))
}

/// `M`-inner products and orthogonalization over column vectors.
struct MSpace<'a> {
    m: &'a SymmetricSparseMatrix,
}

impl MSpace<'_> {
    fn dot(&self, x: &[f64], mx: &[f64]) -> f64 {
        x.iter().zip(mx).map(|(a, b)| a * b).sum()
    }

    /// Orthogonalizes `w` against `basis` (with precomputed `M·basis`) and
    /// normalizes it; `None` if it is numerically dependent.
    fn orthonormalize(&self, basis: &[Vec<f64>], mbasis: &[Vec<f64>], mut w: Vec<f64>) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut mw = self.m.mul_vec(&w);
        let original = self.dot(&w, &mw).max(0.0).sqrt();
        if original == 0.0 {
            return None;
        }
        for _ in 0..2 {
            for (v, mv) in basis.iter().zip(mbasis) {
                let c = self.dot(&w, mv);
                w.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
            }
            mw = self.m.mul_vec(&w);
        }
        let norm = self.dot(&w, &mw).max(0.0).sqrt();
        if norm <= 1e-10 * original {
            return None;
        }
        w.iter_mut().for_each(|v| *v /= norm);
        mw.iter_mut().for_each(|v| *v /= norm);
        Some((w, mw))
    }
}

fn cols_to_mat(cols: &[Vec<f64>], n: usize) -> Mat<f64> {
    Mat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

fn shift_invert(
    a: &SymmetricSparseMatrix,
    m: &SymmetricSparseMatrix,
    k: usize,
    opts: &EigenOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, usize)> {
    let n = a.dim();
    let chol = SparseCholesky::new(a, "stiffness matrix")?;
    SparseCholesky::new(m, "mass matrix")?;
    let space = MSpace { m };
    let anorm = a.norm_inf();

    let p = (k + 5).min(n);
    let max_basis = (2 * k + 10).max(30).max(2 * p).min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut block: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();

    let mut worst = f64::INFINITY;
    let mut residuals = Vec::new();
    for restart in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
        let mut mbasis: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
        let mut frontier = Vec::new();
        for w in block.drain(..) {
            if let Some((v, mv)) = space.orthonormalize(&basis, &mbasis, w) {
                basis.push(v);
                mbasis.push(mv);
                frontier.push(basis.len() - 1);
            }
        }
        while basis.len() < max_basis && !frontier.is_empty() {
            let mut rhs = cols_to_mat(&frontier.iter().map(|&j| mbasis[j].clone()).collect::<Vec<_>>(), n);
            chol.solve_in_place(&mut rhs);
            let mut next = Vec::new();
            for c in 0..rhs.ncols() {
                if basis.len() == max_basis {
                    break;
                }
                let w: Vec<f64> = (0..n).map(|i| rhs[(i, c)]).collect();
                if let Some((v, mv)) = space.orthonormalize(&basis, &mbasis, w) {
                    basis.push(v);
                    mbasis.push(mv);
                    next.push(basis.len() - 1);
                }
            }
            frontier = next;
        }
        let dim = basis.len();
        if dim < k {
            return Err(Error::Internal(format!(
                "Krylov basis collapsed to dimension {dim} below the {k} requested pairs"
            )));
        }

        // Rayleigh–Ritz for A⁻¹M in the M inner product: H = Vᵀ M A⁻¹ M V.
        let mv = cols_to_mat(&mbasis, n);
        let mut z = mv.clone();
        chol.solve_in_place(&mut z);
        let h = mv.transpose() * &z;
        let h = Mat::from_fn(dim, dim, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
        let eig = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Internal(format!("Ritz eigensolver failed: {e:?}")))?;
        let theta = eig.S().column_vector();
        let y = eig.U();
        let v = cols_to_mat(&basis, n);

        // Largest θ = smallest λ, taken from the end of the ascending list.
        let order: Vec<usize> = (0..dim).rev().collect();
        let ritz: Vec<(f64, Vec<f64>)> = order
            .iter()
            .take(p.min(dim))
            .map(|&j| {
                let x = &v * y.get(.., j..j + 1);
                (1.0 / theta[j], (0..n).map(|i| x[(i, 0)]).collect())
            })
            .collect();

        residuals = ritz[..k]
            .iter()
            .map(|(lambda, x)| relative_residual(a, m, *lambda, x, anorm))
            .collect();
        worst = residuals.iter().copied().fold(0.0, f64::max);
        if worst <= opts.tol {
            let (values, vectors) = ritz.into_iter().take(k).unzip();
            return Ok((values, vectors, restart));
        }
        block = ritz.into_iter().map(|(_, x)| x).collect();
    }
    Err(Error::NoConvergence {
        iterations: opts.max_restarts,
        worst_residual: worst,
        residuals,
    })
}
