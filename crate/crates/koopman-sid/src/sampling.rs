//! Critical sampling periods, strip membership, and generator aliases.
//!
//! The central quantity is `max|Im sigma(L)|` of a generator matrix. Below
//! `T_gamma = pi / max|Im sigma(L)|` the principal logarithm of `exp(L T_s)`
//! recovers `L` uniquely; at or beyond it, other real generators produce the
//! same discrete flow. [`construct_alias`] builds them explicitly by pushing
//! conjugate eigenvalue pairs through integer multiples of `2 pi / T_s`, and
//! [`enumerate_aliases`] lists every alias whose spectrum stays inside the
//! aliasing space of the true generator.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{eigendecompose, mat_exp, spectrum_of, Spectrum};

/// Verdict of the critical-period analysis for one spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingVerdict {
    /// `max|Im lambda|` in rad/s.
    pub max_abs_imag: f64,
    /// `pi / max_abs_imag`; infinite for a purely real spectrum.
    pub t_gamma: f64,
    /// Minimum sampling frequency `2 * max_abs_imag` in rad/s.
    pub min_frequency: f64,
    /// Optional check of a concrete sampling period: `(T_s, no_aliasing)`.
    pub no_aliasing_at: Option<(f64, bool)>,
}

impl SamplingVerdict {
    /// Record whether sampling at `t_s` avoids aliasing (strict inclusion;
    /// the strip edge `Im lambda * T_s = pi` counts as aliasing).
    pub fn check_at(mut self, t_s: f64) -> Self {
        self.no_aliasing_at = Some((t_s, self.max_abs_imag < std::f64::consts::PI / t_s));
        self
    }
}

/// Critical sampling period of a generator spectrum.
pub fn critical_period(spectrum: &Spectrum) -> SamplingVerdict {
    let max_abs_imag = spectrum.max_abs_imag();
    let t_gamma = if max_abs_imag > 0.0 {
        std::f64::consts::PI / max_abs_imag
    } else {
        f64::INFINITY
    };
    SamplingVerdict {
        max_abs_imag,
        t_gamma,
        min_frequency: 2.0 * max_abs_imag,
        no_aliasing_at: None,
    }
}

/// Best verdict over several candidate eigenspaces: the one allowing the
/// largest critical period.
pub fn critical_period_over<'a, I>(spectra: I) -> Option<SamplingVerdict>
where
    I: IntoIterator<Item = &'a Spectrum>,
{
    spectra
        .into_iter()
        .map(critical_period)
        .max_by(|a, b| a.t_gamma.partial_cmp(&b.t_gamma).unwrap())
}

/// True when every eigenvalue of `l` lies strictly inside the strip
/// `|Im z| < pi / T_s`.
pub fn in_strip(l: &DMatrix<f64>, t_s: f64) -> Result<bool> {
    Ok(spectrum_of(l)?.max_abs_imag() < std::f64::consts::PI / t_s)
}

/// True when `max|Im sigma(candidate)| <= max|Im sigma(truth)|` up to 1e-12,
/// i.e. the candidate lies in the aliasing space of the true generator.
pub fn in_alias_space(candidate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<bool> {
    if candidate.shape() != truth.shape() {
        return Err(Error::ShapeMismatch(format!(
            "alias-space check: {}x{} vs {}x{}",
            candidate.nrows(),
            candidate.ncols(),
            truth.nrows(),
            truth.ncols()
        )));
    }
    let c = spectrum_of(candidate)?.max_abs_imag();
    let t = spectrum_of(truth)?.max_abs_imag();
    Ok(c <= t + 1e-12)
}

/// A constructed alias together with the evidence that it is one.
#[derive(Debug, Clone)]
pub struct AliasCertificate {
    pub l_true: DMatrix<f64>,
    pub l_alias: DMatrix<f64>,
    pub t_s: f64,
    /// Integer branch shift per conjugate pair (pairs ordered as in the
    /// sorted spectrum, positive-imaginary member).
    pub branch_shifts: Vec<i64>,
    /// Relative Frobenius distance of `exp(L T_s)` and `exp(L~ T_s)`.
    pub exp_gap: f64,
    /// Whether the alias spectrum stays inside the aliasing space.
    pub in_alias_space: bool,
}

/// Eigendecomposition with conjugate pairs located, shared by the alias
/// constructors.
struct PairedDecomposition {
    eigenvalues: Vec<Complex<f64>>,
    v: nalgebra::DMatrix<Complex<f64>>,
    v_inv: nalgebra::DMatrix<Complex<f64>>,
    /// (index of +Im member, index of conjugate) per pair
    pairs: Vec<(usize, usize)>,
}

fn paired_decomposition(l: &DMatrix<f64>) -> Result<PairedDecomposition> {
    let (spectrum, v) = eigendecompose(l)?;
    let svd = v.clone().svd(false, false);
    let smin = svd.singular_values.min();
    let smax = svd.singular_values.max();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond >= 1e8 {
        return Err(Error::Defective(cond));
    }
    let v_inv = v.clone().try_inverse().ok_or(Error::Defective(cond))?;

    let eigenvalues = spectrum.eigenvalues().to_vec();
    let mut used = vec![false; eigenvalues.len()];
    let mut pairs = Vec::new();
    for i in 0..eigenvalues.len() {
        if used[i] || eigenvalues[i].im <= 0.0 {
            continue;
        }
        let conj = eigenvalues[i].conj();
        let j = eigenvalues
            .iter()
            .enumerate()
            .position(|(j, e)| !used[j] && j != i && *e == conj)
            .ok_or_else(|| Error::NoConvergence("conjugate pairing"))?;
        used[i] = true;
        used[j] = true;
        pairs.push((i, j));
    }
    Ok(PairedDecomposition {
        eigenvalues,
        v,
        v_inv,
        pairs,
    })
}

fn alias_from(
    l: &DMatrix<f64>,
    dec: &PairedDecomposition,
    t_s: f64,
    shifts: &[i64],
) -> Result<AliasCertificate> {
    let n_pairs = dec.pairs.len();
    if shifts.len() > n_pairs && shifts[n_pairs..].iter().any(|&s| s != 0) {
        return Err(Error::RealEigenvalue);
    }
    let mut shifted = dec.eigenvalues.clone();
    let step = 2.0 * std::f64::consts::PI / t_s;
    for (k, &(plus, minus)) in dec.pairs.iter().enumerate() {
        let s = shifts.get(k).copied().unwrap_or(0);
        if s != 0 {
            shifted[plus] += Complex::new(0.0, s as f64 * step);
            shifted[minus] -= Complex::new(0.0, s as f64 * step);
        }
    }
    let lambda = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(shifted));
    let alias_c = &dec.v * lambda * &dec.v_inv;
    let l_alias = alias_c.map(|z| z.re);

    let e_true = mat_exp(l, t_s)?;
    let e_alias = mat_exp(&l_alias, t_s)?;
    let exp_gap = (&e_true - &e_alias).norm() / e_true.norm();
    let in_space = in_alias_space(&l_alias, l)?;
    Ok(AliasCertificate {
        l_true: l.clone(),
        l_alias,
        t_s,
        branch_shifts: shifts.to_vec(),
        exp_gap,
        in_alias_space: in_space,
    })
}

/// Build the real generator alias of `l` obtained by shifting each conjugate
/// eigenvalue pair `k` by `2 pi shifts[k] / T_s` along the imaginary axis
/// (and its conjugate oppositely), reassembled through the shared
/// eigenvectors.
///
/// Requires `l` diagonalizable with eigenvector condition number below 1e8.
/// Requesting a shift where no conjugate pair exists yields
/// [`Error::RealEigenvalue`].
pub fn construct_alias(l: &DMatrix<f64>, t_s: f64, shifts: &[i64]) -> Result<AliasCertificate> {
    let dec = paired_decomposition(l)?;
    alias_from(l, &dec, t_s, shifts)
}

/// Enumerate every alias of `l` at period `t_s` whose spectrum stays inside
/// the aliasing space, in lexicographic shift order, up to `max_count`
/// entries. The zero-shift member (the generator itself) is included, so the
/// result is a singleton exactly when `T_s` avoids aliasing.
pub fn enumerate_aliases(
    l: &DMatrix<f64>,
    t_s: f64,
    max_count: usize,
) -> Result<Vec<AliasCertificate>> {
    let dec = paired_decomposition(l)?;
    let beta_max = dec
        .eigenvalues
        .iter()
        .map(|e| e.im.abs())
        .fold(0.0, f64::max);
    let bound = beta_max + 1e-12 * beta_max.max(1.0);
    let step = 2.0 * std::f64::consts::PI / t_s;

    // admissible shift range per pair: |beta + n * step| <= bound
    let ranges: Vec<(i64, i64)> = dec
        .pairs
        .iter()
        .map(|&(plus, _)| {
            let beta = dec.eigenvalues[plus].im;
            let lo = ((-bound - beta) / step).ceil() as i64;
            let hi = ((bound - beta) / step).floor() as i64;
            (lo, hi)
        })
        .collect();

    let mut out = Vec::new();
    let mut shifts: Vec<i64> = ranges.iter().map(|&(lo, _)| lo).collect();
    if ranges.is_empty() {
        // purely real spectrum: the singleton
        out.push(alias_from(l, &dec, t_s, &[])?);
        return Ok(out);
    }
    'outer: loop {
        if out.len() >= max_count {
            break;
        }
        out.push(alias_from(l, &dec, t_s, &shifts)?);
        // lexicographic odometer, last coordinate fastest
        let mut i = ranges.len();
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            if shifts[i] < ranges[i].1 {
                shifts[i] += 1;
                for j in (i + 1)..ranges.len() {
                    shifts[j] = ranges[j].0;
                }
                break;
            }
        }
    }
    Ok(out)
}

/// Check Koopman-eigenspace validity from gradient matrices at sample
/// points: every matrix must have smallest singular value above 1e-8.
/// Returns the verdict and the worst condition number seen.
pub fn validate_eigenspace(gradients: &[DMatrix<f64>]) -> (bool, f64) {
    let mut valid = !gradients.is_empty();
    let mut worst_cond: f64 = 1.0;
    for g in gradients {
        let svd = g.clone().svd(false, false);
        let smin = svd.singular_values.min();
        let smax = svd.singular_values.max();
        if smin <= 1e-8 {
            valid = false;
            worst_cond = f64::INFINITY;
        } else {
            worst_cond = worst_cond.max(smax / smin);
        }
    }
    (valid, worst_cond)
}
