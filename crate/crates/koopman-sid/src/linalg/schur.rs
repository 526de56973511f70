//! Reduction of a real matrix to complex upper-triangular Schur form.
//!
//! nalgebra produces the real quasi-triangular form with 2x2 blocks for
//! conjugate eigenvalue pairs. Each block is rotated by a 2x2 unitary built
//! from its eigenvector, yielding A = Q T Q^H with T strictly upper
//! triangular over the complex field. The block eigenvalues are written back
//! as exact conjugates, which downstream code relies on when pairing shifts.
//!
//! nalgebra's Francis iteration can stall on matrices with several
//! equal-modulus conjugate pairs (it lacks exceptional shifts), so the
//! factorization is retried under seeded random orthogonal similarities
//! until it converges; the rotation is undone afterwards. The retry ladder
//! is deterministic.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{to_complex, CMat};

/// Complex Schur factorization of a real matrix: returns `(q, t)` with
/// `a = q t q^H`, `q` unitary and `t` upper triangular.
pub(crate) fn complex_schur(a: &DMatrix<f64>) -> Result<(CMat, CMat)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((CMat::zeros(0, 0), CMat::zeros(0, 0)));
    }
    let (q_re, t_re) = real_schur(a)?;
    let mut q = to_complex(&q_re);
    let mut t = to_complex(&t_re);

    let mut k = 0;
    while k + 1 < n {
        if t_re[(k + 1, k)] == 0.0 {
            k += 1;
            continue;
        }
        // 2x2 block with complex pair mu +/- i nu.
        let (t11, t12) = (t_re[(k, k)], t_re[(k, k + 1)]);
        let (t21, t22) = (t_re[(k + 1, k)], t_re[(k + 1, k + 1)]);
        let mu = 0.5 * (t11 + t22);
        let disc = (t11 - t22) * (t11 - t22) + 4.0 * t12 * t21;
        debug_assert!(disc < 0.0, "real Schur 2x2 block must have complex pair");
        let nu = 0.5 * (-disc).max(0.0).sqrt();
        let lambda = Complex::new(mu, nu);

        // Unit eigenvector (lambda - t22, t21) of the block, completed to a
        // unitary U = [u1 u2].
        let v0 = lambda - Complex::new(t22, 0.0);
        let v1 = Complex::new(t21, 0.0);
        let norm = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
        let (a0, a1) = (v0 / norm, v1 / norm);
        let u = [[a0, -a1.conj()], [a1, a0.conj()]];

        // t[k..k+2, :] = U^H * t[k..k+2, :]
        for j in k..n {
            let (x, y) = (t[(k, j)], t[(k + 1, j)]);
            t[(k, j)] = u[0][0].conj() * x + u[1][0].conj() * y;
            t[(k + 1, j)] = u[0][1].conj() * x + u[1][1].conj() * y;
        }
        // t[:, k..k+2] = t[:, k..k+2] * U
        for i in 0..(k + 2) {
            let (x, y) = (t[(i, k)], t[(i, k + 1)]);
            t[(i, k)] = x * u[0][0] + y * u[1][0];
            t[(i, k + 1)] = x * u[0][1] + y * u[1][1];
        }
        // q[:, k..k+2] = q[:, k..k+2] * U
        for i in 0..n {
            let (x, y) = (q[(i, k)], q[(i, k + 1)]);
            q[(i, k)] = x * u[0][0] + y * u[1][0];
            q[(i, k + 1)] = x * u[0][1] + y * u[1][1];
        }

        // Pin the block to its exact values: conjugate diagonal, zero fill-in.
        t[(k, k)] = lambda;
        t[(k + 1, k + 1)] = lambda.conj();
        t[(k + 1, k)] = Complex::new(0.0, 0.0);
        k += 2;
    }

    // The quasi-triangular storage leaves exact zeros below the diagonal
    // elsewhere; clear roundoff from the block rotations.
    for i in 0..n {
        for j in 0..i {
            t[(i, j)] = Complex::new(0.0, 0.0);
        }
    }

    Ok((q, t))
}

/// Real Schur with the randomized-similarity retry ladder.
fn real_schur(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let max_niter = 200 + 50 * n;
    if let Some(s) = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, max_niter) {
        return Ok(s.unpack());
    }
    for seed in 1..=8u64 {
        let g = random_orthogonal(n, seed);
        let rotated = &g * a * g.transpose();
        if let Some(s) = nalgebra::linalg::Schur::try_new(rotated, f64::EPSILON, max_niter) {
            let (q, t) = s.unpack();
            return Ok((g.transpose() * q, t));
        }
    }
    Err(Error::NoConvergence("real Schur iteration"))
}

fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let g = DMatrix::from_fn(n, n, |_, _| {
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) - 0.5
    });
    g.qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(q: &CMat, t: &CMat) -> CMat {
        q * t * q.adjoint()
    }

    fn assert_factorization(a: &DMatrix<f64>, tol: f64) {
        let (q, t) = complex_schur(a).unwrap();
        let r = reconstruct(&q, &t);
        let n = a.nrows();
        for i in 0..n {
            for j in 0..n {
                assert!((r[(i, j)].re - a[(i, j)]).abs() < tol, "entry ({i},{j})");
                assert!(r[(i, j)].im.abs() < tol);
            }
        }
    }

    #[test]
    fn triangularizes_rotation_block() {
        let a = DMatrix::from_row_slice(2, 2, &[0.1, 3.0, -3.0, 0.1]);
        let (q, t) = complex_schur(&a).unwrap();
        assert_eq!(t[(1, 0)], Complex::new(0.0, 0.0));
        assert_eq!(t[(0, 0)], t[(1, 1)].conj());
        let r = reconstruct(&q, &t);
        for i in 0..2 {
            for j in 0..2 {
                assert!((r[(i, j)].re - a[(i, j)]).abs() < 1e-12);
                assert!(r[(i, j)].im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mixed_real_and_complex_spectrum() {
        // Block diagonal: eigenvalues -2 and +/- 3i, similarity-scrambled.
        let d = DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 0.5, 0.0, 0.0, 3.0, 0.0, -3.0, 0.0]);
        let p = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.1, 1.0, 0.3, 0.0, -0.1, 1.0]);
        let a = &p * d * p.try_inverse().unwrap();
        assert_factorization(&a, 1e-10);
        let (_, t) = complex_schur(&a).unwrap();
        let mut eigs: Vec<Complex<f64>> = (0..3).map(|i| t[(i, i)]).collect();
        eigs.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        assert!((eigs[0] - Complex::new(0.0, -3.0)).norm() < 1e-10);
        assert!((eigs[1] - Complex::new(-2.0, 0.0)).norm() < 1e-10);
        assert!((eigs[2] - Complex::new(0.0, 3.0)).norm() < 1e-10);
    }

    #[test]
    fn converges_on_stacked_rotations() {
        // Two equal-frequency rotor blocks stall the plain Francis
        // iteration; the retry ladder must handle them.
        let a = DMatrix::from_row_slice(
            5,
            5,
            &[
                0.1, -3.0, 0.0, 0.0, 0.0, //
                3.0, 0.1, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.2, -3.0, 0.0, //
                0.0, 0.0, 6.0, 0.2, -6.0, //
                0.0, 0.0, 0.0, 3.0, 0.2,
            ],
        );
        assert_factorization(&a, 1e-11);
    }

    #[test]
    fn converges_on_pure_rotor_pair() {
        let a = DMatrix::from_row_slice(3, 3, &[0.2, -3.0, 0.0, 6.0, 0.2, -6.0, 0.0, 3.0, 0.2]);
        assert_factorization(&a, 1e-12);
    }
}
