//! Dense complex linear algebra used by the certificate and polishing code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative cutoff below which singular values are treated as zero.
pub const RANK_TOL: f64 = 1e-12;

pub fn to_dvector(x: &[Complex64]) -> CVector {
    DVector::from_column_slice(x)
}

/// Singular values in descending order (empty matrix gives an empty list).
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_unstable_by(|x, y| y.total_cmp(x));
    s
}

/// Smallest singular value of a tall (or square) matrix; zero when the
/// matrix is wide, since it is then column-rank deficient.
pub fn min_singular_value(a: &CMatrix) -> f64 {
    if a.ncols() > a.nrows() {
        return 0.0;
    }
    singular_values(a).last().copied().unwrap_or(0.0)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let mut e: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_unstable_by(f64::total_cmp);
    e
}

/// Minimum-norm least-squares solution of `a x = b` via the SVD.
///
/// Fails when `a` is numerically rank deficient and `require_full_column_rank`
/// is set; otherwise small singular values are truncated.
pub fn lstsq(a: &CMatrix, b: &CVector, require_full_column_rank: bool) -> Result<CVector> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    if a.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = RANK_TOL * smax.max(f64::MIN_POSITIVE) * (a.nrows().max(a.ncols()) as f64);
    if require_full_column_rank {
        let rank = svd.singular_values.iter().filter(|&&s| s > cut).count();
        if rank < a.ncols() {
            return Err(Error::Singular(format!("rank {rank} < {} columns", a.ncols())));
        }
    }
    svd.solve(b, cut).map_err(|e| Error::Singular(e.to_string()))
}

/// `‖a‖₂→₂`.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = DMatrix::from_row_slice(
            3,
            2,
            &[
                c(1.0, 0.0),
                c(0.0, 1.0),
                c(2.0, 0.0),
                c(1.0, 1.0),
                c(0.0, 0.0),
                c(3.0, 0.0),
            ],
        );
        let x = DVector::from_column_slice(&[c(0.5, -1.0), c(2.0, 0.25)]);
        let b = &a * &x;
        let got = lstsq(&a, &b, true).unwrap();
        assert!((got - x).norm() < 1e-12);
    }

    #[test]
    fn rank_deficiency_detected() {
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let b = DVector::from_column_slice(&[c(1.0, 0.0), c(2.0, 0.0)]);
        assert!(lstsq(&a, &b, true).is_err());
        assert!(lstsq(&a, &b, false).is_ok());
        assert_eq!(min_singular_value(&DMatrix::<Complex64>::zeros(2, 3)), 0.0);
    }

    #[test]
    fn hermitian_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let e = hermitian_eigenvalues(&a);
        assert!((e[0] - 1.0).abs() < 1e-12 && (e[1] - 3.0).abs() < 1e-12);
    }
}
