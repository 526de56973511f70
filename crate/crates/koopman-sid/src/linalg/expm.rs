//! Matrix exponential by scaling-and-squaring with the [13/13] Pade
//! approximant (Higham 2005 coefficients, fixed order).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::{ensure_finite, ensure_square};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// Compute `exp(a * t)` for a square real matrix.
pub fn mat_exp(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    ensure_square(a)?;
    ensure_finite(a, "mat_exp")?;
    if !t.is_finite() {
        return Err(Error::NonFinite("mat_exp time"));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }

    let mut m = a * t;
    let norm = one_norm(&m);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    if s > 0 {
        m /= 2f64.powi(s);
    }

    let eye = DMatrix::<f64>::identity(n, n);
    let m2 = &m * &m;
    let m4 = &m2 * &m2;
    let m6 = &m2 * &m4;

    let b = &PADE13;
    let u_inner = &m6 * (b[13] * &m6 + b[11] * &m4 + b[9] * &m2)
        + b[7] * &m6
        + b[5] * &m4
        + b[3] * &m2
        + b[1] * &eye;
    let u = &m * u_inner;
    let v = &m6 * (b[12] * &m6 + b[10] * &m4 + b[8] * &m2)
        + b[6] * &m6
        + b[4] * &m4
        + b[2] * &m2
        + b[0] * &eye;

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut exp = lhs
        .lu()
        .solve(&rhs)
        .ok_or(Error::Singular(0.0))?;

    for _ in 0..s {
        exp = &exp * &exp;
    }
    Ok(exp)
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
