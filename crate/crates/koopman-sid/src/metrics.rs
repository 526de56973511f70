//! Identification error measures: coefficient NRMSE and the DFT spectral
//! error of reconstructed trajectories.

use nalgebra::DVector;
use num_complex::Complex;
use rustfft::FftPlanner;

use crate::dynamics::{integrate_path, DynamicalSystem, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::koopman::FieldCoefficients;

/// Entries with absolute value above this count as nonzero coefficients.
const ZERO_COEFF_TOL: f64 = 1e-12;

/// Normalized root-mean-square error between identified and true
/// coefficient matrices:
/// `RMSE = sqrt(sum (w_hat - w)^2 / (n N))`, normalized by the mean absolute
/// nonzero true coefficient.
pub fn nrmse(w_hat: &FieldCoefficients, w_true: &FieldCoefficients) -> Result<f64> {
    if w_hat.w.shape() != w_true.w.shape() || w_hat.dictionary != w_true.dictionary {
        return Err(Error::ShapeMismatch(
            "NRMSE requires matching dictionaries and coefficient shapes".into(),
        ));
    }
    let mut nonzero = 0usize;
    let mut abs_sum = 0.0;
    for &w in w_true.w.iter() {
        if w.abs() > ZERO_COEFF_TOL {
            nonzero += 1;
            abs_sum += w.abs();
        }
    }
    if nonzero == 0 {
        return Err(Error::AllZeroTruth);
    }
    let mean_abs = abs_sum / nonzero as f64;
    let count = w_true.w.len() as f64;
    let rmse = ((&w_hat.w - &w_true.w).norm_squared() / count).sqrt();
    Ok(rmse / mean_abs)
}

/// Unnormalized forward DFT: `P[q] = sum_s signal[s] exp(-2 pi i q s / len)`.
pub fn dft(signal: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    if buf.len() > 1 {
        FftPlanner::new()
            .plan_fft_forward(buf.len())
            .process(&mut buf);
    }
    buf
}

/// Squared 2-norm distance of the DFTs of true and reconstructed states.
///
/// Both trajectories start at `x0` and are sampled at `fs` Hz for
/// `n_samples` samples; the result is one error per state component.
/// Divergence of the identified field propagates as [`Error::Divergence`].
pub fn spectral_error(
    sys_true: &DynamicalSystem,
    w_hat: &FieldCoefficients,
    x0: &DVector<f64>,
    fs: f64,
    n_samples: usize,
) -> Result<Vec<f64>> {
    let n = sys_true.dim();
    let times: Vec<f64> = (0..n_samples).map(|k| k as f64 / fs).collect();
    let truth = integrate_path(
        &sys_true.as_rhs(),
        x0.as_slice(),
        &times,
        DEFAULT_TOL,
        DEFAULT_TOL,
    )?;
    let rhs = w_hat.as_rhs();
    let pred = integrate_path(&rhs, x0.as_slice(), &times, DEFAULT_TOL, DEFAULT_TOL)?;

    let mut errors = Vec::with_capacity(n);
    for k in 0..n {
        let sig_true: Vec<f64> = truth.iter().map(|x| x[k]).collect();
        let sig_pred: Vec<f64> = pred.iter().map(|x| x[k]).collect();
        let p_true = dft(&sig_true);
        let p_pred = dft(&sig_pred);
        let err: f64 = p_true
            .iter()
            .zip(&p_pred)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        errors.push(err);
    }
    Ok(errors)
}

/// One row of a sampling-period sweep, in the pinned CSV schema
/// `T_s,nrmse,nrmse_quarter,max_abs_imag,residual,dictionary`.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub t_s: f64,
    pub nrmse: f64,
    pub nrmse_quarter: f64,
    pub max_abs_imag: f64,
    pub residual: f64,
    pub dictionary: String,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "T_s,nrmse,nrmse_quarter,max_abs_imag,residual,dictionary";

    pub fn new(
        t_s: f64,
        nrmse: f64,
        max_abs_imag: f64,
        residual: f64,
        dictionary: impl Into<String>,
    ) -> Self {
        Self {
            t_s,
            nrmse,
            nrmse_quarter: nrmse.powf(0.25),
            max_abs_imag,
            residual,
            dictionary: dictionary.into(),
        }
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.t_s, self.nrmse, self.nrmse_quarter, self.max_abs_imag, self.residual,
            self.dictionary
        )
    }
}
