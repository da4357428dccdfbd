//! Small dense linear-algebra helpers shared by the model, barrier and
//! certification code.
//!
//! Matrix 2-norms and symmetric eigenvalues are closed-form for sizes up to
//! two; larger matrices fall back to power iteration / `SymmetricEigen`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const POWER_ITERATIONS: usize = 500;
const POWER_TOL: f64 = 1e-14;

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn sym2_eigenvalues(a: f64, b: f64, d: f64) -> (f64, f64) {
    // [[a, b], [b, d]]
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - radius, mean + radius)
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix.
fn max_eigenvalue_psd(s: &DMatrix<f64>) -> f64 {
    match s.nrows() {
        0 => 0.0,
        1 => s[(0, 0)],
        2 => sym2_eigenvalues(s[(0, 0)], 0.5 * (s[(0, 1)] + s[(1, 0)]), s[(1, 1)]).1,
        n => {
            let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
            let mut lambda = 0.0;
            for _ in 0..POWER_ITERATIONS {
                let y = s * &x;
                let norm = y.norm();
                if norm == 0.0 {
                    return 0.0;
                }
                let next = x.dot(&y);
                x = y / norm;
                if (next - lambda).abs() <= POWER_TOL * next.abs().max(1.0) {
                    lambda = next;
                    break;
                }
                lambda = next;
            }
            lambda
        }
    }
}

/// Induced 2-norm (largest singular value).
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 1 || a.ncols() == 1 {
        return a.norm();
    }
    let gram = if a.ncols() <= a.nrows() {
        a.transpose() * a
    } else {
        a * a.transpose()
    };
    max_eigenvalue_psd(&gram).max(0.0).sqrt()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue_sym(a: &DMatrix<f64>) -> f64 {
    match a.nrows() {
        0 => f64::INFINITY,
        1 => a[(0, 0)],
        2 => sym2_eigenvalues(a[(0, 0)], 0.5 * (a[(0, 1)] + a[(1, 0)]), a[(1, 1)]).0,
        _ => a.clone().symmetric_eigen().eigenvalues.min(),
    }
}

pub fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    a.is_square() && (a - a.transpose()).amax() <= tol * a.amax().max(1.0)
}

/// Symmetric and strictly positive definite.
pub fn is_spd(a: &DMatrix<f64>) -> bool {
    is_symmetric(a, 1e-12) && min_eigenvalue_sym(a) > 0.0
}

pub(crate) fn require_spd(name: &str, a: &DMatrix<f64>) -> Result<()> {
    if is_spd(a) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be symmetric positive definite"
        )))
    }
}

pub(crate) fn require_symmetric(name: &str, a: &DMatrix<f64>) -> Result<()> {
    if is_symmetric(a, 1e-12) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be symmetric")))
    }
}

/// `w^T W w`.
pub fn weighted_norm_sq(w: &DVector<f64>, weight: &DMatrix<f64>) -> f64 {
    (weight * w).dot(w)
}

/// `x^T A x` for a square `A`.
pub fn quad_form(a: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    weighted_norm_sq(x, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sym2_matches_symmetric_eigen() {
        let m = DMatrix::from_row_slice(2, 2, &[5.0, 2.0, 2.0, 1.0]);
        let (lo, hi) = sym2_eigenvalues(5.0, 2.0, 1.0);
        let eig = m.symmetric_eigen().eigenvalues;
        assert_relative_eq!(lo, eig.min(), epsilon = 1e-12);
        assert_relative_eq!(hi, eig.max(), epsilon = 1e-12);
    }

    #[test]
    fn spectral_norm_closed_form_and_power_iteration_agree_with_svd() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -3.0, 0.5, 2.0]);
        let svd = a.clone().svd(false, false).singular_values.max();
        assert_relative_eq!(spectral_norm(&a), svd, epsilon = 1e-12);

        let b = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0, 2.0, 0.0, 1.0]);
        let svd = b.clone().svd(false, false).singular_values.max();
        assert_relative_eq!(spectral_norm(&b), svd, epsilon = 1e-9);

        let row = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        assert_relative_eq!(spectral_norm(&row), 5.0);
    }

    #[test]
    fn spd_detection() {
        assert!(is_spd(&DMatrix::identity(2, 2)));
        assert!(!is_spd(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])));
        assert!(!is_spd(&DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0])));
    }
}
