//! Dense matrix kernels: eigendecomposition, matrix exponential, principal
//! logarithm, and minimum-norm least squares.
//!
//! Everything here operates on real square matrices and reports complex
//! spectra. The principal logarithm is the branch whose eigenvalues have
//! imaginary parts in the open strip (-pi, pi); it is the inverse of the
//! matrix exponential exactly when the generator spectrum fits the strip,
//! which is what the sampling analysis in [`crate::sampling`] exploits.

mod eig;
mod expm;
mod logm;
mod lstsq;
mod schur;

pub use eig::eigendecompose;
pub use expm::mat_exp;
pub use logm::principal_log;
pub use lstsq::{lstsq_minnorm, default_rel_tol};

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};

pub(crate) type CMat = DMatrix<Complex<f64>>;

/// Eigenvalues of a matrix, sorted by descending real part with ties broken
/// by ascending imaginary part, together with the largest imaginary magnitude.
///
/// For spectra obtained from a generator the imaginary parts are angular
/// frequencies in rad/s, so `max_abs_imag` is the quantity that enters the
/// critical sampling period.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<Complex<f64>>,
    max_abs_imag: f64,
}

impl Spectrum {
    pub fn new(mut eigenvalues: Vec<Complex<f64>>) -> Self {
        eigenvalues.sort_by(|a, b| {
            b.re.partial_cmp(&a.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        let max_abs_imag = eigenvalues.iter().map(|l| l.im.abs()).fold(0.0, f64::max);
        Self {
            eigenvalues,
            max_abs_imag,
        }
    }

    pub fn eigenvalues(&self) -> &[Complex<f64>] {
        &self.eigenvalues
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.max_abs_imag
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// True when some eigenvalue lies within `tol` of `lambda`.
    pub fn contains(&self, lambda: Complex<f64>, tol: f64) -> bool {
        self.eigenvalues.iter().any(|l| (l - lambda).norm() <= tol)
    }
}

/// Eigenvalues of a real square matrix as a sorted [`Spectrum`].
///
/// Complex eigenvalues of 2x2 Schur blocks are produced as exact conjugate
/// pairs, so a real spectrum never picks up spurious imaginary dust.
pub fn spectrum_of(a: &DMatrix<f64>) -> Result<Spectrum> {
    ensure_square(a)?;
    ensure_finite(a, "spectrum_of")?;
    let (_, t) = schur::complex_schur(a)?;
    Ok(Spectrum::new((0..t.nrows()).map(|i| t[(i, i)]).collect()))
}

pub(crate) fn ensure_finite(a: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn ensure_square(a: &DMatrix<f64>) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )))
    }
}

pub(crate) fn to_complex(a: &DMatrix<f64>) -> CMat {
    a.map(|x| Complex::new(x, 0.0))
}
