//! Observable dictionaries and lifting of snapshot data.
//!
//! A dictionary is an ordered basis of scalar observables: the monomials of
//! total degree at most `m` in graded-lexicographic order (degree first,
//! then exponent tuples descending), optionally followed by rational terms
//! `x_l / (1 + x_k^p)` ordered by `(p, k, l)`. Column indices are therefore
//! stable across runs, which the coefficient extraction and CSV schemas
//! rely on.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::SnapshotSet;
use crate::error::{Error, Result};
use crate::exec;

/// One basis observable. Coordinate indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BasisFn {
    Monomial {
        exponents: Vec<u32>,
    },
    Rational {
        numerator: usize,
        denominator: usize,
        power: u32,
    },
}

impl BasisFn {
    pub fn coordinate(dim: usize, k: usize) -> Self {
        let mut exponents = vec![0; dim];
        exponents[k] = 1;
        BasisFn::Monomial { exponents }
    }

    fn degree(&self) -> u32 {
        match self {
            BasisFn::Monomial { exponents } => exponents.iter().sum(),
            BasisFn::Rational { .. } => 0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            BasisFn::Monomial { exponents } => {
                let mut v = 1.0;
                for (xi, &s) in x.iter().zip(exponents) {
                    if s > 0 {
                        v *= xi.powi(s as i32);
                    }
                }
                Ok(v)
            }
            BasisFn::Rational {
                numerator,
                denominator,
                power,
            } => {
                let d = 1.0 + x[*denominator].powi(*power as i32);
                if d.abs() < 1e-12 {
                    return Err(Error::PoleHit {
                        coordinate: denominator + 1,
                        power: *power,
                        pair_index: None,
                    });
                }
                Ok(x[*numerator] / d)
            }
        }
    }

    /// Partial derivative with respect to coordinate `j`.
    pub fn grad(&self, x: &[f64], j: usize) -> Result<f64> {
        match self {
            BasisFn::Monomial { exponents } => {
                let s = exponents[j];
                if s == 0 {
                    return Ok(0.0);
                }
                let mut v = s as f64;
                for (q, &sq) in exponents.iter().enumerate() {
                    let e = if q == j { sq - 1 } else { sq };
                    if e > 0 {
                        v *= x[q].powi(e as i32);
                    }
                }
                Ok(v)
            }
            BasisFn::Rational {
                numerator,
                denominator,
                power,
            } => {
                let d = 1.0 + x[*denominator].powi(*power as i32);
                if d.abs() < 1e-12 {
                    return Err(Error::PoleHit {
                        coordinate: denominator + 1,
                        power: *power,
                        pair_index: None,
                    });
                }
                let mut g = 0.0;
                if j == *numerator {
                    g += 1.0 / d;
                }
                if j == *denominator {
                    let p = *power as f64;
                    g += x[*numerator] * (-p * x[*denominator].powi(*power as i32 - 1)) / (d * d);
                }
                Ok(g)
            }
        }
    }
}

impl std::fmt::Display for BasisFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasisFn::Monomial { exponents } => {
                if exponents.iter().all(|&s| s == 0) {
                    return write!(f, "1");
                }
                let mut first = true;
                for (i, &s) in exponents.iter().enumerate() {
                    if s == 0 {
                        continue;
                    }
                    if !first {
                        write!(f, "*")?;
                    }
                    first = false;
                    if s == 1 {
                        write!(f, "x{}", i + 1)?;
                    } else {
                        write!(f, "x{}^{}", i + 1, s)?;
                    }
                }
                Ok(())
            }
            BasisFn::Rational {
                numerator,
                denominator,
                power,
            } => {
                if *power == 1 {
                    write!(f, "x{}/(1+x{})", numerator + 1, denominator + 1)
                } else {
                    write!(f, "x{}/(1+x{}^{})", numerator + 1, denominator + 1, power)
                }
            }
        }
    }
}

/// Ordered observable basis with bookkeeping for the coordinate functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    basis: Vec<BasisFn>,
    /// For each state coordinate `k`, the basis index `l` with `g_l(x) = x_k`.
    state_indices: Vec<usize>,
    dim: usize,
    degree: u32,
    rational_power_cap: Option<u32>,
    label: String,
}

impl Dictionary {
    pub fn basis(&self) -> &[BasisFn] {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn rational_power_cap(&self) -> Option<u32> {
        self.rational_power_cap
    }

    pub fn state_indices(&self) -> &[usize] {
        &self.state_indices
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Index of the basis function equal to a given `BasisFn`, if present.
    pub fn index_of(&self, f: &BasisFn) -> Option<usize> {
        self.basis.iter().position(|g| g == f)
    }

    /// Evaluate every basis function at `x`, in dictionary order.
    pub fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let xs = x.as_slice();
        let mut out = DVector::zeros(self.basis.len());
        for (i, g) in self.basis.iter().enumerate() {
            out[i] = g.eval(xs)?;
        }
        Ok(out)
    }
}

/// Build the graded-lexicographic monomial dictionary of total degree `m`
/// over `n` variables, optionally with the constant function and with
/// rational terms for all `(l, k, p <= cap)`.
pub fn build_dictionary(
    n: usize,
    m: u32,
    include_constant: bool,
    rational_cap: Option<u32>,
) -> Dictionary {
    assert!(n >= 1 && m >= 1, "dictionary needs n >= 1 and m >= 1");
    let mut basis = Vec::new();
    let start_degree = if include_constant { 0 } else { 1 };
    for d in start_degree..=m {
        push_monomials_of_degree(&mut basis, n, d);
    }
    if let Some(cap) = rational_cap {
        for p in 1..=cap {
            for k in 0..n {
                for l in 0..n {
                    basis.push(BasisFn::Rational {
                        numerator: l,
                        denominator: k,
                        power: p,
                    });
                }
            }
        }
    }
    let state_indices = (0..n)
        .map(|k| {
            basis
                .iter()
                .position(|g| *g == BasisFn::coordinate(n, k))
                .expect("degree >= 1 dictionary contains all coordinates")
        })
        .collect();
    let mut label = format!("m={m}");
    if include_constant {
        label.push_str("+const");
    }
    if let Some(cap) = rational_cap {
        label.push_str(&format!(",P={cap}"));
    }
    Dictionary {
        basis,
        state_indices,
        dim: n,
        degree: m,
        rational_power_cap: rational_cap,
        label,
    }
}

/// All exponent vectors of total degree exactly `d`, descending
/// lexicographically, appended to `out`.
fn push_monomials_of_degree(out: &mut Vec<BasisFn>, n: usize, d: u32) {
    fn rec(prefix: &mut Vec<u32>, remaining: u32, slots: usize, out: &mut Vec<BasisFn>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(BasisFn::Monomial {
                exponents: prefix.clone(),
            });
            prefix.pop();
            return;
        }
        for s in (0..=remaining).rev() {
            prefix.push(s);
            rec(prefix, remaining - s, slots - 1, out);
            prefix.pop();
        }
    }
    rec(&mut Vec::with_capacity(n), d, n, out);
}

/// Build a dictionary from an explicit basis list, preserving order.
///
/// The list must be duplicate-free and contain every coordinate observable.
pub fn custom_dictionary(dim: usize, basis: Vec<BasisFn>) -> Result<Dictionary> {
    for (i, g) in basis.iter().enumerate() {
        if basis[..i].contains(g) {
            return Err(Error::DuplicateBasis(i));
        }
        match g {
            BasisFn::Monomial { exponents } if exponents.len() != dim => {
                return Err(Error::ShapeMismatch(format!(
                    "basis {i}: exponent vector has length {} for dim {dim}",
                    exponents.len()
                )));
            }
            BasisFn::Rational {
                numerator,
                denominator,
                power,
            } if *numerator >= dim || *denominator >= dim || *power == 0 => {
                return Err(Error::ShapeMismatch(format!(
                    "basis {i}: rational indices out of range for dim {dim}"
                )));
            }
            _ => {}
        }
    }
    let mut state_indices = Vec::with_capacity(dim);
    for k in 0..dim {
        match basis.iter().position(|g| *g == BasisFn::coordinate(dim, k)) {
            Some(l) => state_indices.push(l),
            None => return Err(Error::MissingStateObservable(k + 1)),
        }
    }
    let degree = basis.iter().map(|g| g.degree()).max().unwrap_or(1);
    let rational_power_cap = basis
        .iter()
        .filter_map(|g| match g {
            BasisFn::Rational { power, .. } => Some(*power),
            _ => None,
        })
        .max();
    let label = format!(
        "custom[{}]",
        basis
            .iter()
            .map(|g| g.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    Ok(Dictionary {
        basis,
        state_indices,
        dim,
        degree,
        rational_power_cap,
        label,
    })
}

/// Snapshot data lifted through a dictionary: row `i` of `x_lift` is the
/// dictionary evaluated at the pre-state of pair `i`, same for `y_lift`
/// with the post-state.
#[derive(Debug, Clone)]
pub struct LiftedData {
    pub x_lift: DMatrix<f64>,
    pub y_lift: DMatrix<f64>,
    pub t_s: f64,
    pub dictionary: Dictionary,
}

pub fn lift(snapshots: &SnapshotSet, dict: &Dictionary) -> Result<LiftedData> {
    lift_impl(snapshots, dict, false)
}

/// Sequential reference path; output is identical to [`lift`].
pub fn lift_seq(snapshots: &SnapshotSet, dict: &Dictionary) -> Result<LiftedData> {
    lift_impl(snapshots, dict, true)
}

fn lift_impl(snapshots: &SnapshotSet, dict: &Dictionary, force_seq: bool) -> Result<LiftedData> {
    let k = snapshots.len();
    let n = dict.len();
    let row = |i: usize| -> Result<(DVector<f64>, DVector<f64>)> {
        let (pre, post) = &snapshots.pairs[i];
        let tag = |e: Error| match e {
            Error::PoleHit {
                coordinate, power, ..
            } => Error::PoleHit {
                coordinate,
                power,
                pair_index: Some(i),
            },
            other => other,
        };
        Ok((
            dict.evaluate(pre).map_err(tag)?,
            dict.evaluate(post).map_err(tag)?,
        ))
    };
    let rows = if force_seq {
        exec::map_indexed_seq(k, row)
    } else {
        exec::map_indexed(k, row)
    };

    let mut x_lift = DMatrix::zeros(k, n);
    let mut y_lift = DMatrix::zeros(k, n);
    for (i, r) in rows.into_iter().enumerate() {
        let (xr, yr) = r?;
        x_lift.row_mut(i).copy_from(&xr.transpose());
        y_lift.row_mut(i).copy_from(&yr.transpose());
    }
    Ok(LiftedData {
        x_lift,
        y_lift,
        t_s: snapshots.t_s,
        dictionary: dict.clone(),
    })
}

/// Gradient matrices of dictionary-coefficient combinations at each sample
/// point: entry `(i, j)` of the matrix for point `x` is
/// `sum_l coeffs[i, l] * d g_l / d x_j (x)`.
pub fn gradient_matrices(
    dict: &Dictionary,
    coeffs: &DMatrix<f64>,
    points: &[DVector<f64>],
) -> Result<Vec<DMatrix<f64>>> {
    if coeffs.ncols() != dict.len() {
        return Err(Error::ShapeMismatch(format!(
            "coefficient matrix has {} columns for a dictionary of size {}",
            coeffs.ncols(),
            dict.len()
        )));
    }
    let n_funcs = coeffs.nrows();
    let dim = dict.dim();
    points
        .iter()
        .map(|x| {
            let xs = x.as_slice();
            let mut g = DMatrix::zeros(n_funcs, dim);
            for (l, basis_fn) in dict.basis().iter().enumerate() {
                for j in 0..dim {
                    let d = basis_fn.grad(xs, j)?;
                    if d != 0.0 {
                        for i in 0..n_funcs {
                            g[(i, j)] += coeffs[(i, l)] * d;
                        }
                    }
                }
            }
            Ok(g)
        })
        .collect()
}
