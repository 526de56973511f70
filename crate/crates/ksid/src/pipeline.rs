//! Shared identification driver for the sweep, predict, and spectral
//! commands.

use nalgebra::DVector;

use koopman_sid::dynamics::{sample_snapshots, Dopri5, DynamicalSystem, Rhs, DEFAULT_TOL};
use koopman_sid::error::Result;
use koopman_sid::koopman::{
    estimate_generator, estimate_koopman, recover_field, FieldCoefficients, GeneratorEstimate,
    KoopmanEstimate,
};
use koopman_sid::observables::{lift, Dictionary};

use crate::config::SamplingConfig;

pub struct Identification {
    pub koopman: KoopmanEstimate,
    pub generator: GeneratorEstimate,
    pub coefficients: FieldCoefficients,
}

/// Sample, lift, regress, take the principal logarithm, extract
/// coefficients.
pub fn identify_at(
    sys: &DynamicalSystem,
    dict: &Dictionary,
    sampling: &SamplingConfig,
    seed: u64,
    t_s: f64,
) -> Result<Identification> {
    let init_box: Vec<(f64, f64)> = sampling.init_box.iter().map(|b| (b[0], b[1])).collect();
    let snaps = sample_snapshots(sys, sampling.n_traj, sampling.n_snap, t_s, &init_box, seed)?;
    identify_snapshots(&snaps, dict)
}

pub fn identify_snapshots(
    snaps: &koopman_sid::dynamics::SnapshotSet,
    dict: &Dictionary,
) -> Result<Identification> {
    let data = lift(snaps, dict)?;
    let koopman = estimate_koopman(&data, None)?;
    let generator = estimate_generator(&koopman)?;
    let coefficients = recover_field(&generator)?;
    Ok(Identification {
        koopman,
        generator,
        coefficients,
    })
}

/// Integrate a right-hand side at the sample times, stopping early on a
/// numeric failure. Returns the states produced so far plus the failure, if
/// any. Times must be increasing and start at or after zero.
pub fn sample_path_partial<R: Rhs>(
    rhs: &R,
    x0: &DVector<f64>,
    times: &[f64],
) -> (Vec<Vec<f64>>, Option<koopman_sid::Error>) {
    let mut solver = Dopri5::new(DEFAULT_TOL, DEFAULT_TOL);
    let mut y = x0.as_slice().to_vec();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if let Err(e) = solver.advance(rhs, &mut y, t, target) {
            return (out, Some(e));
        }
        t = target;
        out.push(y.clone());
    }
    (out, None)
}

/// Evenly spaced output times `0, 1/fs, ..., (n-1)/fs`.
pub fn sample_times(fs: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / fs).collect()
}
