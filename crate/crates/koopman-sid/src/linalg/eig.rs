//! Eigendecomposition of real matrices with complex spectra.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::Result;

use super::schur::complex_schur;
use super::{ensure_finite, ensure_square, CMat, Spectrum};

/// Eigenvalues and right eigenvectors of a square real matrix.
///
/// Returns the spectrum sorted by descending real part (ties by ascending
/// imaginary part) and the complex eigenvector matrix `v` with columns in the
/// same order, so `a * v ~= v * diag(lambda)`. Complex eigenvalues come in
/// exact conjugate pairs.
pub fn eigendecompose(a: &DMatrix<f64>) -> Result<(Spectrum, CMat)> {
    ensure_square(a)?;
    ensure_finite(a, "eigendecompose")?;
    let n = a.nrows();
    if n == 0 {
        return Ok((Spectrum::new(vec![]), CMat::zeros(0, 0)));
    }

    let (q, t) = complex_schur(a)?;
    let scale = t.map(|z| z.norm()).max().max(1.0);
    // Floor applied to near-zero denominators for repeated eigenvalues,
    // as in LAPACK's triangular eigenvector back-substitution.
    let smlnum = f64::EPSILON * scale;

    let mut pairs: Vec<(Complex<f64>, Vec<Complex<f64>>)> = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = vec![Complex::new(0.0, 0.0); n];
        y[k] = Complex::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = Complex::new(0.0, 0.0);
            for i in (j + 1)..=k {
                s += t[(j, i)] * y[i];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < smlnum {
                denom = Complex::new(smlnum, 0.0);
            }
            y[j] = -s / denom;
        }
        // v = Q y, normalized
        let mut v = vec![Complex::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = Complex::new(0.0, 0.0);
            for j in 0..=k {
                s += q[(i, j)] * y[j];
            }
            v[i] = s;
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut v {
            *z /= norm;
        }
        pairs.push((lambda, v));
    }

    pairs.sort_by(|a, b| {
        b.0.re
            .partial_cmp(&a.0.re)
            .unwrap()
            .then(a.0.im.partial_cmp(&b.0.im).unwrap())
    });

    let eigenvalues: Vec<Complex<f64>> = pairs.iter().map(|(l, _)| *l).collect();
    let mut v = CMat::zeros(n, n);
    for (col, (_, vec)) in pairs.iter().enumerate() {
        for row in 0..n {
            v[(row, col)] = vec[row];
        }
    }
    Ok((Spectrum::new(eigenvalues), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &DMatrix<f64>, spectrum: &Spectrum, v: &CMat) -> f64 {
        let n = a.nrows();
        let ac = super::super::to_complex(a);
        let mut worst: f64 = 0.0;
        for (k, lambda) in spectrum.eigenvalues().iter().enumerate() {
            let col = v.column(k);
            let av = &ac * col;
            let lv = col * *lambda;
            let err = (av - lv).map(|z| z.norm()).max();
            worst = worst.max(err / (1.0 + a.norm()));
        }
        worst
    }

    #[test]
    fn spiral_pair() {
        let a = DMatrix::from_row_slice(2, 2, &[0.1, 3.0, -3.0, 0.1]);
        let (s, v) = eigendecompose(&a).unwrap();
        assert!((s.eigenvalues()[0] - Complex::new(0.1, -3.0)).norm() < 1e-13);
        assert!((s.eigenvalues()[1] - Complex::new(0.1, 3.0)).norm() < 1e-13);
        // exact conjugate pairing
        assert_eq!(s.eigenvalues()[0].conj(), s.eigenvalues()[1]);
        assert!(residual(&a, &s, &v) < 1e-12);
    }

    #[test]
    fn pure_rotation() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -3.0, 3.0, 0.0]);
        let (s, _) = eigendecompose(&a).unwrap();
        assert_eq!(s.max_abs_imag(), 3.0);
        assert!(s.contains(Complex::new(0.0, 3.0), 1e-13));
        assert!(s.contains(Complex::new(0.0, -3.0), 1e-13));
    }

    #[test]
    fn diagonal_real() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let (s, v) = eigendecompose(&a).unwrap();
        assert_eq!(s.eigenvalues()[0], Complex::new(-1.0, 0.0));
        assert_eq!(s.eigenvalues()[1], Complex::new(-2.0, 0.0));
        assert_eq!(s.max_abs_imag(), 0.0);
        assert!(residual(&a, &s, &v) < 1e-14);
    }

    #[test]
    fn repeated_semisimple_eigenvalue() {
        // Generator of the triangular benchmark on {x1, x2, x1^2}:
        // spectrum {-1, -1, -2} with a two-dimensional eigenspace at -1.
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, -2.0]);
        let (s, v) = eigendecompose(&a).unwrap();
        let eigs = s.eigenvalues();
        assert!((eigs[0].re + 1.0).abs() < 1e-13 && (eigs[1].re + 1.0).abs() < 1e-13);
        assert!((eigs[2].re + 2.0).abs() < 1e-13);
        assert!(residual(&a, &s, &v) < 1e-10);
    }

    #[test]
    fn random_matrices_have_small_residual_and_paired_spectra() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(2..=6);
            let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let (s, v) = eigendecompose(&a).unwrap();
            assert!(residual(&a, &s, &v) < 1e-9);
            for l in s.eigenvalues() {
                if l.im != 0.0 {
                    assert!(s.eigenvalues().contains(&l.conj()));
                }
            }
        }
    }
}
