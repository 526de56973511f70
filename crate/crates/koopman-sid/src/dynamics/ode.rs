//! Embedded Dormand-Prince 5(4) integrator with adaptive step control.
//!
//! Tolerances default to 1e-12 absolute and relative so that integration
//! error sits far below every identification tolerance in the crate. The
//! integrator aborts with [`Error::Divergence`] once the state norm passes
//! 1e6, which keeps runaway alias fields from stalling the step controller.

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;

/// State-norm bound beyond which integration is abandoned.
pub const DIVERGENCE_NORM: f64 = 1e6;

const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// Difference between the 5th- and 4th-order weights, applied to k1..k7.
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Right-hand side of an autonomous ODE; may fail (e.g. at a pole).
pub trait Rhs {
    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<()>;
}

impl<F> Rhs for F
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        self(x, dx)
    }
}

pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    h: Option<f64>,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            h: None,
        }
    }

    /// Advance `y` in place from `t0` to `t1`, reusing the adapted step size
    /// across calls.
    pub fn advance<R: Rhs>(&mut self, rhs: &R, y: &mut Vec<f64>, t0: f64, t1: f64) -> Result<()> {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(());
        }
        let n = y.len();
        let mut t = t0;
        let mut h = self.h.unwrap_or(span * 1e-3).min(span);

        let mut k = vec![vec![0.0; n]; 7];
        let mut stage = vec![0.0; n];
        let mut y_new = vec![0.0; n];

        rhs.eval(y, &mut k[0])?;
        let mut fresh_k1 = true;

        let mut steps = 0usize;
        loop {
            if t >= t1 - 1e-14 * span.abs() {
                break;
            }
            steps += 1;
            if steps > 1_000_000 {
                return Err(Error::Divergence {
                    trajectory: 0,
                    t,
                    norm: inf_norm(y),
                });
            }
            h = h.min(t1 - t);
            if !fresh_k1 {
                rhs.eval(y, &mut k[0])?;
                fresh_k1 = true;
            }

            combine(&mut stage, y, h, &[&k[0]], &A2);
            rhs.eval(&stage, &mut k[1])?;
            combine(&mut stage, y, h, &[&k[0], &k[1]], &A3);
            rhs.eval(&stage, &mut k[2])?;
            combine(&mut stage, y, h, &[&k[0], &k[1], &k[2]], &A4);
            rhs.eval(&stage, &mut k[3])?;
            combine(&mut stage, y, h, &[&k[0], &k[1], &k[2], &k[3]], &A5);
            rhs.eval(&stage, &mut k[4])?;
            combine(&mut stage, y, h, &[&k[0], &k[1], &k[2], &k[3], &k[4]], &A6);
            rhs.eval(&stage, &mut k[5])?;
            combine(
                &mut y_new,
                y,
                h,
                &[&k[0], &k[1], &k[2], &k[3], &k[4], &k[5]],
                &B5,
            );
            rhs.eval(&y_new, &mut k[6])?;

            // Weighted RMS error over the embedded difference.
            let mut err_sq = 0.0;
            for i in 0..n {
                let e: f64 = h * ERR.iter().zip(k.iter()).map(|(c, ki)| c * ki[i]).sum::<f64>();
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err_sq += (e / sc) * (e / sc);
            }
            let err = (err_sq / n as f64).sqrt();

            if err <= 1.0 {
                t += h;
                std::mem::swap(y, &mut y_new);
                k.swap(0, 6); // FSAL: k7 of the accepted step is the next k1
                fresh_k1 = true;
                let norm = inf_norm(y);
                if !norm.is_finite() || norm > DIVERGENCE_NORM {
                    return Err(Error::Divergence {
                        trajectory: 0,
                        t,
                        norm,
                    });
                }
            } else {
                fresh_k1 = true; // k[0] still holds f(y); y unchanged
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
            if !h.is_finite() || h <= 1e-15 * span {
                return Err(Error::Divergence {
                    trajectory: 0,
                    t,
                    norm: inf_norm(y),
                });
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

fn combine(out: &mut [f64], y: &[f64], h: f64, ks: &[&Vec<f64>], coeffs: &[f64]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (c, ki) in coeffs.iter().zip(ks.iter()) {
            acc += c * ki[i];
        }
        out[i] = y[i] + h * acc;
    }
}

fn inf_norm(y: &[f64]) -> f64 {
    y.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Integrate from `x0` over `[0, t]` and return the final state.
pub fn integrate<R: Rhs>(rhs: &R, x0: &[f64], t: f64, rtol: f64, atol: f64) -> Result<Vec<f64>> {
    let mut y = x0.to_vec();
    let mut solver = Dopri5::new(rtol, atol);
    solver.advance(rhs, &mut y, 0.0, t)?;
    Ok(y)
}

/// Sample the solution at the given strictly increasing times (the first may
/// be 0 to include the initial state).
pub fn integrate_path<R: Rhs>(
    rhs: &R,
    x0: &[f64],
    times: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut y = x0.to_vec();
    let mut solver = Dopri5::new(rtol, atol);
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    for &target in times {
        solver.advance(rhs, &mut y, t, target)?;
        t = target;
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(x: &[f64], dx: &mut [f64]) -> Result<()> {
        dx[0] = x[1];
        dx[1] = -x[0];
        Ok(())
    }

    #[test]
    fn harmonic_oscillator_period() {
        let tau = 2.0 * std::f64::consts::PI;
        let y = integrate(&harmonic, &[1.0, 0.0], tau, 1e-12, 1e-12).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10);
        assert!(y[1].abs() < 1e-10);
    }

    #[test]
    fn divergence_is_caught() {
        let blowup = |x: &[f64], dx: &mut [f64]| -> Result<()> {
            dx[0] = x[0] * x[0] + 1.0;
            Ok(())
        };
        let r = integrate(&blowup, &[1.0], 10.0, 1e-9, 1e-9);
        assert!(matches!(r, Err(Error::Divergence { .. })));
    }

    #[test]
    fn path_sampling_matches_single_shot() {
        let times = [0.25, 0.5, 0.75, 1.0];
        let path = integrate_path(&harmonic, &[1.0, 0.0], &times, 1e-12, 1e-12).unwrap();
        let direct = integrate(&harmonic, &[1.0, 0.0], 1.0, 1e-12, 1e-12).unwrap();
        assert!((path[3][0] - direct[0]).abs() < 1e-11);
        assert!((path[3][1] - direct[1]).abs() < 1e-11);
    }
}
