//! Principal matrix logarithm.
//!
//! Complex Schur form, inverse scaling-and-squaring on the triangular factor
//! (repeated principal square roots until close to the identity, then a
//! degree-7 Pade approximant in partial-fraction form), and back
//! transformation. The result has every eigenvalue inside the strip
//! -pi < Im z < pi and is real for real input off the branch cut.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};

use super::schur::complex_schur;
use super::{ensure_finite, ensure_square, CMat};

/// Gauss-Legendre nodes and weights on [0,1] for the [7/7] Pade approximant
/// of log(1 + x) in partial-fraction form.
const PADE7: [(f64, f64); 7] = [
    (0.0254460438286207377, 0.0647424830844348466),
    (0.12923440720030278, 0.139852695744638334),
    (0.297077424311301417, 0.190915025252559472),
    (0.5, 0.208979591836734694),
    (0.702922575688698583, 0.190915025252559472),
    (0.87076559279969722, 0.139852695744638334),
    (0.974553956171379262, 0.0647424830844348466),
];

/// Distance from the negative real axis below which an eigenvalue is
/// rejected: the principal logarithm of a real matrix stops being real and
/// unique on the cut, so we refuse to pick a side silently.
const BRANCH_CUT_TOL: f64 = 1e-10;

/// Compute the principal logarithm `B` of a square real matrix `m`, so that
/// `exp(B) = m` and every eigenvalue of `B` has imaginary part in (-pi, pi).
///
/// Fails with [`Error::Singular`] on a numerically zero eigenvalue and with
/// [`Error::BranchCut`] when an eigenvalue sits on the closed negative real
/// axis.
pub fn principal_log(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_square(m)?;
    ensure_finite(m, "principal_log")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }

    let (q, t) = complex_schur(m)?;
    let scale = t.map(|z| z.norm()).max().max(1.0);
    for i in 0..n {
        let lambda = t[(i, i)];
        if lambda.norm() <= 1e-13 * scale {
            return Err(Error::Singular(lambda.norm()));
        }
        if lambda.re <= 0.0 && lambda.im.abs() <= BRANCH_CUT_TOL * lambda.norm().max(1.0) {
            return Err(Error::BranchCut {
                re: lambda.re,
                im: lambda.im,
            });
        }
    }

    let log_t = log_triangular(t);
    let b = &q * log_t * q.adjoint();
    Ok(b.map(|z| z.re))
}

/// Logarithm of a complex upper-triangular matrix with spectrum off the cut.
fn log_triangular(mut t: CMat) -> CMat {
    let n = t.nrows();
    let eye = CMat::identity(n, n);

    let mut sqrt_count = 0u32;
    while dist_to_identity(&t) > 0.25 && sqrt_count < 60 {
        t = sqrt_triangular(&t);
        sqrt_count += 1;
    }

    let x = &t - &eye;
    let mut b = CMat::zeros(n, n);
    for (node, weight) in PADE7 {
        // term = x * (I + node * x)^{-1}, both triangular
        let lhs = &eye + &x * Complex::new(node, 0.0);
        let term = solve_upper_triangular(&lhs, &x);
        b += term * Complex::new(weight, 0.0);
    }
    b * Complex::new(2f64.powi(sqrt_count as i32), 0.0)
}

/// Principal square root of a complex upper-triangular matrix via the
/// Bjorck-Hammarling recurrence. The spectrum is off the closed negative
/// axis, so the diagonal square roots all have positive real part and the
/// denominators never vanish.
fn sqrt_triangular(t: &CMat) -> CMat {
    let n = t.nrows();
    let mut r = CMat::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = t[(i, i)].sqrt();
    }
    for d in 1..n {
        for i in 0..(n - d) {
            let j = i + d;
            let mut s = t[(i, j)];
            for k in (i + 1)..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = s / (r[(i, i)] + r[(j, j)]);
        }
    }
    r
}

/// Solve `L Z = R` for upper-triangular `L`, dense `R`.
fn solve_upper_triangular(l: &CMat, r: &CMat) -> CMat {
    let n = l.nrows();
    let mut z = CMat::zeros(n, n);
    for c in 0..n {
        for i in (0..n).rev() {
            let mut s = r[(i, c)];
            for k in (i + 1)..n {
                s -= l[(i, k)] * z[(k, c)];
            }
            z[(i, c)] = s / l[(i, i)];
        }
    }
    z
}

fn dist_to_identity(t: &CMat) -> f64 {
    let n = t.nrows();
    // one-norm of T - I
    (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let v = if i == j {
                        t[(i, j)] - Complex::new(1.0, 0.0)
                    } else {
                        t[(i, j)]
                    };
                    v.norm()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat_exp;
    use std::f64::consts::PI;

    fn rotation(theta: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
    }

    #[test]
    fn log_of_identity_is_zero() {
        let b = principal_log(&DMatrix::identity(3, 3)).unwrap();
        assert!(b.norm() < 1e-14);
    }

    #[test]
    fn rotation_by_pi_third_recovers_generator() {
        // Oracle: atan2 angle extraction on the 2x2 rotation.
        let theta = PI / 3.0;
        let m = rotation(theta);
        let b = principal_log(&m).unwrap();
        let recovered = f64::atan2(m[(1, 0)], m[(0, 0)]);
        assert!((b[(1, 0)] - recovered).abs() < 1e-14);
        assert!((b[(0, 1)] + theta).abs() < 1e-13);
        assert!((b[(1, 0)] - theta).abs() < 1e-13);
        assert!(b[(0, 0)].abs() < 1e-13 && b[(1, 1)].abs() < 1e-13);
    }

    #[test]
    fn rotation_past_pi_wraps_to_principal_branch() {
        // Rotation by 4pi/3 logs to the generator of a rotation by -2pi/3.
        let m = rotation(4.0 * PI / 3.0);
        let b = principal_log(&m).unwrap();
        let expected = 2.0 * PI / 3.0;
        assert!((b[(0, 1)] - expected).abs() < 1e-13);
        assert!((b[(1, 0)] + expected).abs() < 1e-13);
        // exp(B) still reproduces M even though the angle wrapped.
        let back = mat_exp(&b, 1.0).unwrap();
        assert!((&back - &m).norm() < 1e-12);
    }

    #[test]
    fn branch_cut_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 2.0]);
        assert!(matches!(principal_log(&m), Err(Error::BranchCut { .. })));
    }

    #[test]
    fn singular_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(principal_log(&m), Err(Error::Singular(_))));
    }

    #[test]
    fn defective_exponential_round_trips() {
        // Jordan-type block: eigendecomposition would fail, Schur does not.
        let a = DMatrix::from_row_slice(3, 3, &[0.3, 1.0, 0.0, 0.0, 0.3, 1.0, 0.0, 0.0, 0.3]);
        let e = mat_exp(&a, 1.0).unwrap();
        let b = principal_log(&e).unwrap();
        assert!((&b - &a).norm() / a.norm() < 1e-11);
    }

    #[test]
    fn stiff_spread_of_eigenvalues() {
        let m = DMatrix::from_row_slice(2, 2, &[1e-3, 0.0, 0.0, 1e3]);
        let b = principal_log(&m).unwrap();
        assert!((b[(0, 0)] - 1e-3f64.ln()).abs() < 1e-12);
        assert!((b[(1, 1)] - 1e3f64.ln()).abs() < 1e-12);
    }
}
