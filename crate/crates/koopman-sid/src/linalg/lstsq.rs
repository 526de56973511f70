//! Minimum-norm least squares via QR reduction and SVD pseudoinverse.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::ensure_finite;

/// Default singular-value truncation threshold relative to the largest
/// singular value: the usual numerical-rank heuristic.
pub fn default_rel_tol(rows: usize, cols: usize) -> f64 {
    1e-10 * rows.max(cols) as f64
}

/// Solve `min ||X B - Y||_F` and return the minimum-Frobenius-norm minimizer.
///
/// Singular values below `rel_tol * sigma_max` are truncated; `None` uses
/// [`default_rel_tol`]. Tall systems are first reduced by a thin QR so the
/// SVD runs on the small triangular factor.
pub fn lstsq_minnorm(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    rel_tol: Option<f64>,
) -> Result<DMatrix<f64>> {
    if x.nrows() != y.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "lstsq: X has {} rows but Y has {}",
            x.nrows(),
            y.nrows()
        )));
    }
    ensure_finite(x, "lstsq X")?;
    ensure_finite(y, "lstsq Y")?;
    let rel_tol = rel_tol.unwrap_or_else(|| default_rel_tol(x.nrows(), x.ncols()));

    let (a, b) = if x.nrows() > x.ncols() {
        // X = Q R; pinv(X) = pinv(R) Q^T since Q has orthonormal columns.
        let qr = x.clone().qr();
        let b = qr.q().transpose() * y;
        (qr.unpack_r(), b)
    } else {
        (x.clone(), y.clone())
    };

    let svd = a.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let eps = rel_tol * sigma_max;
    svd.solve(&b, eps)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_design_returns_y() {
        let y = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let x = DMatrix::identity(3, 3);
        let b = lstsq_minnorm(&x, &y, None).unwrap();
        assert!((&b - &y).norm() < 1e-12);
    }

    #[test]
    fn exact_consistent_system() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let y = DMatrix::from_row_slice(2, 1, &[2.0, 4.0]);
        let b = lstsq_minnorm(&x, &y, None).unwrap();
        assert!((b[(0, 0)] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn rank_deficient_gives_min_norm_solution() {
        // Oracle: explicit SVD pseudoinverse of the rank-1 2x2 gives
        // pinv(X) Y = ones(2,2)/4 * Y = [[1,0],[1,0]].
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let y = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 2.0, 0.0]);
        let b = lstsq_minnorm(&x, &y, None).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert!((&b - &expect).norm() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let x = DMatrix::zeros(3, 2);
        let y = DMatrix::zeros(4, 2);
        assert!(matches!(
            lstsq_minnorm(&x, &y, None),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn residual_is_locally_optimal() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let x = DMatrix::from_fn(20, 4, |_, _| rng.gen_range(-1.0..1.0));
        let y = DMatrix::from_fn(20, 4, |_, _| rng.gen_range(-1.0..1.0));
        let b = lstsq_minnorm(&x, &y, None).unwrap();
        let base = (&x * &b - &y).norm();
        for _ in 0..20 {
            let dir = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0)).normalize();
            let perturbed = (&x * (&b + dir * 1e-3) - &y).norm();
            assert!(perturbed >= base - 1e-12);
        }
    }
}
