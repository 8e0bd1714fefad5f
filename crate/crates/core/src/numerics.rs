//! Dense real linear algebra shared by every other module.
//!
//! Matrices and vectors are plain `nalgebra` dynamic types. This module adds
//! the checked operations the analytics need: dimension-checked products,
//! Kronecker products, an LU solve that reports near-singular pivots, power
//! iteration for a dominant eigenpair, and a spectral-radius estimate.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub type DenseMatrix = DMatrix<f64>;
pub type DenseVector = DVector<f64>;

/// Default convergence tolerance for iterative routines.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default iteration cap for power iteration.
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare { op: &'static str, rows: usize, cols: usize },
    #[error("matrix is singular to working precision (pivot magnitude {pivot:e})")]
    Singular { pivot: f64 },
    #[error("power iteration did not converge in {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// Build a matrix from row-major entries, rejecting non-finite values.
pub fn matrix_from_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<DenseMatrix, NumericsError> {
    if entries.len() != rows * cols {
        return Err(NumericsError::DimensionMismatch {
            op: "matrix_from_rows",
            left_rows: rows,
            left_cols: cols,
            right_rows: entries.len(),
            right_cols: 1,
        });
    }
    let m = DenseMatrix::from_row_slice(rows, cols, entries);
    ensure_finite(&m)?;
    Ok(m)
}

pub fn ensure_finite(m: &DenseMatrix) -> Result<(), NumericsError> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if !m[(r, c)].is_finite() {
                return Err(NumericsError::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

pub fn mat_mul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
    if a.ncols() != b.nrows() {
        return Err(NumericsError::DimensionMismatch {
            op: "mat_mul",
            left_rows: a.nrows(),
            left_cols: a.ncols(),
            right_rows: b.nrows(),
            right_cols: b.ncols(),
        });
    }
    Ok(a * b)
}

pub fn mat_vec(a: &DenseMatrix, x: &DenseVector) -> Result<DenseVector, NumericsError> {
    if a.ncols() != x.len() {
        return Err(NumericsError::DimensionMismatch {
            op: "mat_vec",
            left_rows: a.nrows(),
            left_cols: a.ncols(),
            right_rows: x.len(),
            right_cols: 1,
        });
    }
    Ok(a * x)
}

/// Kronecker product; block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    a.kronecker(b)
}

/// `x ⊗ I_m` for a column vector `x`, as an `(len*m) x m` matrix.
pub fn kron_vec_identity(x: &DenseVector, m: usize) -> DenseMatrix {
    let col = DenseMatrix::from_column_slice(x.len(), 1, x.as_slice());
    kron(&col, &DenseMatrix::identity(m, m))
}

/// Solve `a x = b` by LU factorization with partial pivoting.
///
/// A pivot whose magnitude falls below `n * eps * max|a|` is treated as zero.
pub fn solve_linear(a: &DenseMatrix, b: &DenseVector) -> Result<DenseVector, NumericsError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(NumericsError::NotSquare {
            op: "solve_linear",
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if b.len() != n {
        return Err(NumericsError::DimensionMismatch {
            op: "solve_linear",
            left_rows: n,
            left_cols: n,
            right_rows: b.len(),
            right_cols: 1,
        });
    }
    let scale = a.amax();
    let lu = a.clone().lu();
    let u = lu.u();
    let threshold = (n.max(1) as f64) * f64::EPSILON * scale;
    let min_pivot = (0..n).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if n > 0 && !(min_pivot > threshold) {
        return Err(NumericsError::Singular { pivot: min_pivot });
    }
    lu.solve(b).ok_or(NumericsError::Singular { pivot: min_pivot })
}

/// Solve `a X = B` column by column.
pub fn solve_matrix(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
    let mut out = DenseMatrix::zeros(a.ncols(), b.ncols());
    for j in 0..b.ncols() {
        let col = solve_linear(a, &b.column(j).into_owned())?;
        out.set_column(j, &col);
    }
    Ok(out)
}

/// Dominant eigenpair by power iteration.
///
/// Iterates are rescaled to unit max-norm; iteration stops when two successive
/// rescaled iterates differ by at most `tol` in max-norm. The returned vector
/// sums to one when all of its entries are nonnegative, otherwise it has unit
/// max-norm.
pub fn dominant_eigpair(a: &DenseMatrix, tol: f64, max_iter: usize) -> Result<(f64, DenseVector), NumericsError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(NumericsError::NotSquare {
            op: "dominant_eigpair",
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if n == 0 {
        return Ok((0.0, DenseVector::zeros(0)));
    }
    let mut x = DenseVector::from_element(n, 1.0);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let y = a * &x;
        let Some(next) = normalize_max(&y) else {
            // a x = 0: x lies in the kernel, the dominant eigenvalue is 0
            return Ok((0.0, finish_vector(x)));
        };
        residual = (&next - &x).amax();
        x = next;
        if residual <= tol {
            let ax = a * &x;
            let lambda = x.dot(&ax) / x.dot(&x);
            return Ok((lambda, finish_vector(x)));
        }
    }
    Err(NumericsError::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

fn normalize_max(y: &DenseVector) -> Option<DenseVector> {
    let (idx, _) = y.iter().enumerate().fold(
        (0, 0.0_f64),
        |(bi, bv), (i, v)| {
            if v.abs() > bv {
                (i, v.abs())
            } else {
                (bi, bv)
            }
        },
    );
    let pivot = y[idx];
    if pivot == 0.0 {
        return None;
    }
    // fix the sign so the largest entry is positive
    Some(y / pivot)
}

fn finish_vector(x: DenseVector) -> DenseVector {
    if x.iter().all(|&v| v >= 0.0) {
        let s = x.sum();
        if s > 0.0 {
            return x / s;
        }
    }
    let m = x.amax();
    if m > 0.0 {
        x / m
    } else {
        x
    }
}

/// Extreme eigenvalues of a symmetric matrix: the largest by power iteration
/// and the smallest by power iteration on `lambda_max * I - s`.
///
/// Convergence is measured on the Rayleigh quotient, which converges twice as
/// fast as the iterate for symmetric matrices.
pub fn symmetric_extreme_eigenvalues(s: &DenseMatrix, tol: f64, max_iter: usize) -> Result<(f64, f64), NumericsError> {
    let n = s.nrows();
    if n != s.ncols() {
        return Err(NumericsError::NotSquare {
            op: "symmetric_extreme_eigenvalues",
            rows: s.nrows(),
            cols: s.ncols(),
        });
    }
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let top = symmetric_top_eigenvalue(s, tol, max_iter)?;
    if top <= 0.0 {
        return Ok((top, top));
    }
    let shifted = DenseMatrix::identity(n, n) * top - s;
    let gap = symmetric_top_eigenvalue(&shifted, tol, max_iter)?;
    Ok(((top - gap).max(0.0).min(top), top))
}

fn symmetric_top_eigenvalue(s: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64, NumericsError> {
    let n = s.nrows();
    // Deterministic start with distinct weights so it is unlikely to be
    // orthogonal to the top eigenvector.
    let mut x = DenseVector::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).sqrt() * 1e-3);
    x /= x.norm();
    let mut lambda = x.dot(&(s * &x));
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let y = s * &x;
        let norm = y.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        x = y / norm;
        let next = x.dot(&(s * &x));
        residual = (next - lambda).abs();
        lambda = next;
        if residual <= tol * lambda.abs().max(f64::MIN_POSITIVE) {
            return Ok(lambda);
        }
    }
    Err(NumericsError::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Result of a spectral-radius estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub converged: bool,
}

/// Estimate the spectral radius from `‖a^(2^j)‖^(1/2^j)`.
///
/// Each step squares the current power and renormalizes it, carrying the
/// accumulated scale in log form so neither underflow nor overflow occurs.
/// The estimate approaches `ρ(a)` from above for any matrix, including ones
/// with complex or tied dominant eigenvalues. Stops when two successive
/// estimates differ by at most `tol`; `max_squarings` caps the number of
/// squarings.
pub fn spectral_radius(a: &DenseMatrix, tol: f64, max_squarings: usize) -> Result<SpectralEstimate, NumericsError> {
    if a.nrows() != a.ncols() {
        return Err(NumericsError::NotSquare {
            op: "spectral_radius",
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.nrows() == 0 {
        return Ok(SpectralEstimate {
            value: 0.0,
            converged: true,
        });
    }
    let norm0 = a.norm();
    if norm0 == 0.0 {
        return Ok(SpectralEstimate {
            value: 0.0,
            converged: true,
        });
    }
    // power = a^(2^j) / exp(log_scale)
    let mut power = a / norm0;
    let mut log_scale = norm0.ln();
    let mut exponent = 1.0_f64;
    let mut estimate = norm0;
    for _ in 0..max_squarings {
        let squared = &power * &power;
        let norm = squared.norm();
        if norm == 0.0 {
            return Ok(SpectralEstimate {
                value: 0.0,
                converged: true,
            });
        }
        power = squared / norm;
        log_scale = 2.0 * log_scale + norm.ln();
        exponent *= 2.0;
        let next = (log_scale / exponent).exp();
        let delta = (next - estimate).abs();
        estimate = next;
        if delta <= tol {
            return Ok(SpectralEstimate {
                value: estimate,
                converged: true,
            });
        }
    }
    Ok(SpectralEstimate {
        value: estimate,
        converged: false,
    })
}

/// Numerical rank: pivots of a fully pivoted LU that exceed
/// `rel_threshold * ‖a‖_max`.
pub fn numerical_rank(a: &DenseMatrix, rel_threshold: f64) -> usize {
    let scale = a.amax();
    if scale == 0.0 {
        return 0;
    }
    let lu = a.clone().full_piv_lu();
    let u = lu.u();
    let k = a.nrows().min(a.ncols());
    (0..k).filter(|&i| u[(i, i)].abs() > rel_threshold * scale).count()
}

/// Maximum absolute row sum.
pub fn inf_norm(a: &DenseMatrix) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, e: &[f64]) -> DenseMatrix {
        matrix_from_rows(rows, cols, e).unwrap()
    }

    #[test]
    fn mat_mul_examples() {
        let b = m(3, 3, &[1., 2., 3., 4., 5., 6., 7., 8., 10.]);
        assert_eq!(mat_mul(&DenseMatrix::identity(3, 3), &b).unwrap(), b);
        let p = mat_mul(&m(2, 2, &[1., 2., 3., 4.]), &m(2, 2, &[0., 1., 1., 0.])).unwrap();
        assert_eq!(p, m(2, 2, &[2., 1., 4., 3.]));
        let a = m(2, 2, &[0.7, 0.4, 0.3, 0.6]);
        let v = mat_mul(&a, &m(2, 1, &[4. / 7., 3. / 7.])).unwrap();
        assert!((v[(0, 0)] - 4. / 7.).abs() < 1e-15);
        assert!((v[(1, 0)] - 3. / 7.).abs() < 1e-15);
    }

    #[test]
    fn mat_mul_dimension_error_names_shapes() {
        let err = mat_mul(&DenseMatrix::zeros(2, 3), &DenseMatrix::zeros(2, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3"), "{msg}");
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            matrix_from_rows(1, 2, &[1.0, f64::NAN]),
            Err(NumericsError::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn kron_examples() {
        assert_eq!(
            kron(&DenseMatrix::identity(2, 2), &DenseMatrix::identity(3, 3)),
            DenseMatrix::identity(6, 6)
        );
        let k = kron(&m(2, 2, &[1., 2., 0., 1.]), &m(2, 1, &[1., 1.]));
        assert_eq!(k, m(4, 2, &[1., 2., 1., 2., 0., 1., 0., 1.]));
        let k = kron_vec_identity(&DenseVector::from_element(2, 1.0), 2);
        assert_eq!(k, m(4, 2, &[1., 0., 0., 1., 1., 0., 0., 1.]));
    }

    #[test]
    fn solve_examples() {
        let b = DenseVector::from_vec(vec![1., -2., 3., 0.5]);
        assert_eq!(solve_linear(&DenseMatrix::identity(4, 4), &b).unwrap(), b);
        let x = solve_linear(&m(2, 2, &[2., 0., 0., 4.]), &DenseVector::from_vec(vec![2., 8.])).unwrap();
        assert_eq!(x, DenseVector::from_vec(vec![1., 2.]));
    }

    #[test]
    fn solve_rejects_singular() {
        let err = solve_linear(&m(2, 2, &[1., 2., 2., 4.]), &DenseVector::from_vec(vec![1., 1.])).unwrap_err();
        assert!(matches!(err, NumericsError::Singular { .. }));
        let err = solve_linear(&DenseMatrix::zeros(2, 3), &DenseVector::zeros(2)).unwrap_err();
        assert!(matches!(err, NumericsError::NotSquare { .. }));
    }

    #[test]
    fn eigpair_examples() {
        let (l, v) = dominant_eigpair(&m(2, 2, &[1., 0., 0., 0.5]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((l - 1.0).abs() < 1e-10);
        assert!((v[0] - 1.0).abs() < 1e-10 && v[1].abs() < 1e-10);

        let (l, v) = dominant_eigpair(&m(2, 2, &[0.7, 0.4, 0.3, 0.6]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((l - 1.0).abs() < 1e-10);
        assert!((v[0] - 4. / 7.).abs() < 1e-10);
        assert!((v[1] - 3. / 7.).abs() < 1e-10);

        // symmetric doubly-stochastic 3x3
        let d = m(3, 3, &[0.5, 0.25, 0.25, 0.25, 0.5, 0.25, 0.25, 0.25, 0.5]);
        let (l, v) = dominant_eigpair(&d, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((l - 1.0).abs() < 1e-10);
        for x in v.iter() {
            assert!((x - 1. / 3.).abs() < 1e-10);
        }
    }

    #[test]
    fn eigpair_non_convergence_reports_residual() {
        // period-2 permutation never settles
        let err = dominant_eigpair(&m(2, 2, &[0., 1., 1., 0.]), 1e-12, 50);
        // starting from the all-ones vector it is already a fixed point
        assert!(err.is_ok());
        let rot = m(2, 2, &[0., -1., 1., 0.]);
        match dominant_eigpair(&rot, 1e-12, 50) {
            Err(NumericsError::NoConvergence { iterations, residual }) => {
                assert_eq!(iterations, 50);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn spectral_radius_examples() {
        let r = spectral_radius(&m(2, 2, &[0.5, 0., 0., 0.2]), DEFAULT_TOL, 64).unwrap();
        assert!(r.converged);
        assert!((r.value - 0.5).abs() < 1e-10);
        let r = spectral_radius(&(DenseMatrix::identity(5, 5) * 0.3), DEFAULT_TOL, 64).unwrap();
        assert!((r.value - 0.3).abs() < 1e-10);
        let p = m(3, 3, &[0.2, 0.5, 0.0, 0.3, 0.25, 0.6, 0.5, 0.25, 0.4]);
        let r = spectral_radius(&p, DEFAULT_TOL, 64).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10, "{}", r.value);
        // rotation: complex pair of modulus 0.9
        let rot = m(2, 2, &[0., -0.9, 0.9, 0.]);
        let r = spectral_radius(&rot, DEFAULT_TOL, 64).unwrap();
        assert!((r.value - 0.9).abs() < 1e-10);
        // nilpotent
        let r = spectral_radius(&m(2, 2, &[0., 1., 0., 0.]), DEFAULT_TOL, 64).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn symmetric_extremes() {
        let s = m(2, 2, &[2., 0., 0., 8.]);
        let (lo, hi) = symmetric_extreme_eigenvalues(&s, 1e-14, DEFAULT_MAX_ITER).unwrap();
        assert!((lo - 2.0).abs() < 1e-10 && (hi - 8.0).abs() < 1e-10);
        let (lo, hi) = symmetric_extreme_eigenvalues(&(DenseMatrix::identity(2, 2) * 2.0), 1e-14, 100).unwrap();
        assert!((lo - 2.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_of_outer_product() {
        let u = DenseVector::from_vec(vec![1., 2., 3.]);
        let a = &u * u.transpose();
        assert_eq!(numerical_rank(&a, 1e-8), 1);
        assert_eq!(numerical_rank(&DenseMatrix::identity(4, 4), 1e-8), 4);
    }
}
