//! Benchmark vector fields, the numerical flow map, and snapshot sampling.
//!
//! Every field is a sum of polynomial terms `c * x1^s1 ... xn^sn` and
//! rational terms `c * x_l / (1 + x_k^p)`, which covers all built-in
//! benchmark systems. Systems can also be loaded from a TOML definition file
//! (see `docs/formats.md` in the repository root).

mod ode;
mod snapshots;

pub use ode::{integrate, integrate_path, Dopri5, Rhs, DEFAULT_TOL, DIVERGENCE_NORM};
pub use snapshots::{sample_snapshots, sample_snapshots_seq, SnapshotSet};

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One monomial term `coeff * prod_i x_i^exponents[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

/// One rational term `coeff * x_numerator / (1 + x_denominator^power)`.
/// Coordinate indices are 0-based in memory; the file format is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalTerm {
    pub coeff: f64,
    pub numerator: usize,
    pub denominator: usize,
    pub power: u32,
}

/// An autonomous vector field over R^n.
#[derive(Debug, Clone)]
pub struct DynamicalSystem {
    name: String,
    dim: usize,
    poly_terms: Vec<Vec<PolyTerm>>,
    rational_terms: Vec<Vec<RationalTerm>>,
    /// Exact generator in state-space form `d/dt g = A g` on the system's
    /// minimal observable set, when one exists.
    known_generator: Option<DMatrix<f64>>,
    known_principal_eigenvalues: Option<Vec<Complex<f64>>>,
}

impl DynamicalSystem {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        poly_terms: Vec<Vec<PolyTerm>>,
        rational_terms: Vec<Vec<RationalTerm>>,
    ) -> Result<Self> {
        let name = name.into();
        if poly_terms.len() != dim || rational_terms.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "system `{name}`: expected {dim} term lists"
            )));
        }
        for terms in &poly_terms {
            for t in terms {
                if t.exponents.len() != dim {
                    return Err(Error::ShapeMismatch(format!(
                        "system `{name}`: exponent vector length != {dim}"
                    )));
                }
            }
        }
        for terms in &rational_terms {
            for t in terms {
                if t.numerator >= dim || t.denominator >= dim || t.power == 0 {
                    return Err(Error::BadParams {
                        system: name.clone(),
                        reason: "rational term indices out of range or power 0".into(),
                    });
                }
            }
        }
        Ok(Self {
            name,
            dim,
            poly_terms,
            rational_terms,
            known_generator: None,
            known_principal_eigenvalues: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn poly_terms(&self) -> &[Vec<PolyTerm>] {
        &self.poly_terms
    }

    pub fn rational_terms(&self) -> &[Vec<RationalTerm>] {
        &self.rational_terms
    }

    pub fn known_generator(&self) -> Option<&DMatrix<f64>> {
        self.known_generator.as_ref()
    }

    pub fn known_principal_eigenvalues(&self) -> Option<&[Complex<f64>]> {
        self.known_principal_eigenvalues.as_deref()
    }

    pub fn with_known_generator(mut self, g: DMatrix<f64>) -> Self {
        self.known_generator = Some(g);
        self
    }

    pub fn with_known_principal_eigenvalues(mut self, e: Vec<Complex<f64>>) -> Self {
        self.known_principal_eigenvalues = Some(e);
        self
    }

    /// Evaluate the vector field at `x`.
    pub fn eval_field(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.dim);
        self.eval_into(x.as_slice(), out.as_mut_slice())?;
        Ok(out)
    }

    pub(crate) fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        for k in 0..self.dim {
            let mut acc = 0.0;
            for t in &self.poly_terms[k] {
                acc += t.coeff * monomial(x, &t.exponents);
            }
            for t in &self.rational_terms[k] {
                acc += t.coeff * x[t.numerator] / denom(x, t)?;
            }
            out[k] = acc;
        }
        Ok(())
    }

    /// Analytic Jacobian `J[i][j] = df_i/dx_j` at `x`.
    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let xs = x.as_slice();
        let mut j = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for t in &self.poly_terms[i] {
                for (col, &s) in t.exponents.iter().enumerate() {
                    if s > 0 {
                        let mut partial = t.coeff * s as f64;
                        for (q, &sq) in t.exponents.iter().enumerate() {
                            let e = if q == col { sq - 1 } else { sq };
                            partial *= xs[q].powi(e as i32);
                        }
                        j[(i, col)] += partial;
                    }
                }
            }
            for t in &self.rational_terms[i] {
                let d = denom(xs, t)?;
                // d/dx_l
                j[(i, t.numerator)] += t.coeff / d;
                // d/dx_k of the denominator factor
                let p = t.power as f64;
                j[(i, t.denominator)] +=
                    t.coeff * xs[t.numerator] * (-p * xs[t.denominator].powi(t.power as i32 - 1))
                        / (d * d);
            }
        }
        Ok(j)
    }

    /// Numerical flow map `S^t(x0)` at the default tolerance of 1e-12.
    pub fn flow(&self, x0: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        self.flow_with_tol(x0, t, DEFAULT_TOL, DEFAULT_TOL)
    }

    pub fn flow_with_tol(
        &self,
        x0: &DVector<f64>,
        t: f64,
        rtol: f64,
        atol: f64,
    ) -> Result<DVector<f64>> {
        if t < 0.0 {
            return Err(Error::BadParams {
                system: self.name.clone(),
                reason: "flow requires t >= 0".into(),
            });
        }
        let rhs = self.as_rhs();
        let y = ode::integrate(&rhs, x0.as_slice(), t, rtol, atol)?;
        Ok(DVector::from_vec(y))
    }

    /// Right-hand side closure for the integrator.
    pub fn as_rhs(&self) -> impl Fn(&[f64], &mut [f64]) -> Result<()> + '_ {
        move |x, dx| self.eval_into(x, dx)
    }
}

fn monomial(x: &[f64], exponents: &[u32]) -> f64 {
    let mut v = 1.0;
    for (xi, &s) in x.iter().zip(exponents) {
        if s > 0 {
            v *= xi.powi(s as i32);
        }
    }
    v
}

fn denom(x: &[f64], t: &RationalTerm) -> Result<f64> {
    let d = 1.0 + x[t.denominator].powi(t.power as i32);
    if d.abs() < 1e-12 {
        Err(Error::PoleHit {
            coordinate: t.denominator + 1,
            power: t.power,
            pair_index: None,
        })
    } else {
        Ok(d)
    }
}

fn mono(coeff: f64, exponents: &[u32]) -> PolyTerm {
    PolyTerm {
        coeff,
        exponents: exponents.to_vec(),
    }
}

/// Construct one of the benchmark systems by name.
///
/// Recognized names (`sysN` aliases in parentheses): `rod` with parameters
/// `a` and `omega`, `linear-spiral` (sys1), `fixed-point-cubic` (sys2),
/// `limit-cycle` (sys3), `real-eig-triangular` (sys4), `nonpoly-rational`
/// (sys5). Principal eigenvalues are attached to each.
pub fn builtin_system(name: &str, params: &HashMap<String, f64>) -> Result<DynamicalSystem> {
    let require_empty = |sys: &str| -> Result<()> {
        if params.is_empty() {
            Ok(())
        } else {
            Err(Error::BadParams {
                system: sys.into(),
                reason: format!("unexpected parameters: {:?}", params.keys().collect::<Vec<_>>()),
            })
        }
    };
    match name {
        "rod" => {
            let a = *params.get("a").ok_or_else(|| Error::BadParams {
                system: "rod".into(),
                reason: "missing parameter `a`".into(),
            })?;
            let omega = *params.get("omega").ok_or_else(|| Error::BadParams {
                system: "rod".into(),
                reason: "missing parameter `omega`".into(),
            })?;
            if params.len() > 2 {
                return Err(Error::BadParams {
                    system: "rod".into(),
                    reason: "only `a` and `omega` are accepted".into(),
                });
            }
            Ok(linear_2d("rod", a, omega))
        }
        "linear-spiral" | "sys1" => {
            require_empty("linear-spiral")?;
            Ok(linear_2d("linear-spiral", 0.1, 3.0))
        }
        "fixed-point-cubic" | "sys2" => {
            require_empty("fixed-point-cubic")?;
            let f1 = vec![
                mono(-3.0, &[0, 1]),
                mono(-1.0, &[3, 0]),
                mono(-1.0, &[1, 2]),
            ];
            let f2 = vec![mono(3.0, &[1, 0]), mono(-1.0, &[2, 1]), mono(-1.0, &[0, 3])];
            Ok(
                DynamicalSystem::new("fixed-point-cubic", 2, vec![f1, f2], vec![vec![], vec![]])?
                    .with_known_principal_eigenvalues(vec![
                        Complex::new(0.0, 3.0),
                        Complex::new(0.0, -3.0),
                    ]),
            )
        }
        "limit-cycle" | "sys3" => {
            require_empty("limit-cycle")?;
            let f1 = vec![
                mono(3.0, &[0, 1]),
                mono(1.0, &[1, 0]),
                mono(-1.0, &[3, 0]),
                mono(-1.0, &[1, 2]),
            ];
            let f2 = vec![
                mono(-3.0, &[1, 0]),
                mono(1.0, &[0, 1]),
                mono(-1.0, &[2, 1]),
                mono(-1.0, &[0, 3]),
            ];
            Ok(
                DynamicalSystem::new("limit-cycle", 2, vec![f1, f2], vec![vec![], vec![]])?
                    // Floquet exponent -2 of the r = 1 cycle plus the +/-3i rotors.
                    .with_known_principal_eigenvalues(vec![
                        Complex::new(-2.0, 0.0),
                        Complex::new(0.0, 3.0),
                        Complex::new(0.0, -3.0),
                    ]),
            )
        }
        "real-eig-triangular" | "sys4" => {
            require_empty("real-eig-triangular")?;
            let f1 = vec![mono(-1.0, &[1, 0])];
            let f2 = vec![mono(1.0, &[2, 0]), mono(-1.0, &[0, 1])];
            Ok(
                DynamicalSystem::new("real-eig-triangular", 2, vec![f1, f2], vec![vec![], vec![]])?
                    .with_known_generator(DMatrix::from_row_slice(
                        3,
                        3,
                        &[-1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -2.0],
                    ))
                    .with_known_principal_eigenvalues(vec![
                        Complex::new(-1.0, 0.0),
                        Complex::new(-2.0, 0.0),
                    ]),
            )
        }
        "nonpoly-rational" | "sys5" => {
            require_empty("nonpoly-rational")?;
            let f1_poly = vec![mono(-1.0, &[1, 0])];
            let f1_rat = vec![RationalTerm {
                coeff: 4.0,
                numerator: 1,
                denominator: 1,
                power: 2,
            }];
            let f2_poly = vec![mono(-1.0, &[0, 1])];
            let f2_rat = vec![RationalTerm {
                coeff: -4.0,
                numerator: 0,
                denominator: 1,
                power: 2,
            }];
            Ok(DynamicalSystem::new(
                "nonpoly-rational",
                2,
                vec![f1_poly, f2_poly],
                vec![f1_rat, f2_rat],
            )?
            .with_known_principal_eigenvalues(vec![
                Complex::new(-1.0, 4.0),
                Complex::new(-1.0, -4.0),
            ]))
        }
        other => Err(Error::UnknownSystem(other.into())),
    }
}

fn linear_2d(name: &str, a: f64, omega: f64) -> DynamicalSystem {
    let f1 = vec![mono(a, &[1, 0]), mono(omega, &[0, 1])];
    let f2 = vec![mono(-omega, &[1, 0]), mono(a, &[0, 1])];
    DynamicalSystem::new(name, 2, vec![f1, f2], vec![vec![], vec![]])
        .expect("static definition")
        .with_known_generator(DMatrix::from_row_slice(2, 2, &[a, omega, -omega, a]))
        .with_known_principal_eigenvalues(vec![Complex::new(a, omega), Complex::new(a, -omega)])
}

/// Serde schema for the system definition file (all coordinate indices are
/// 1-based there). See `docs/formats.md`.
#[derive(Debug, Serialize, Deserialize)]
pub struct SystemSpec {
    pub name: String,
    pub dim: usize,
    pub field: Vec<FieldComponentSpec>,
    #[serde(default)]
    pub known_principal_eigenvalues: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct FieldComponentSpec {
    #[serde(default)]
    pub poly: Vec<PolyTerm>,
    #[serde(default)]
    pub rational: Vec<RationalTermSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RationalTermSpec {
    pub coeff: f64,
    pub numerator: usize,
    pub denominator: usize,
    pub power: u32,
}

impl SystemSpec {
    pub fn into_system(self) -> Result<DynamicalSystem> {
        let mut poly = Vec::with_capacity(self.dim);
        let mut rational = Vec::with_capacity(self.dim);
        if self.field.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "system `{}`: {} field components for dim {}",
                self.name,
                self.field.len(),
                self.dim
            )));
        }
        for comp in self.field {
            poly.push(comp.poly);
            rational.push(
                comp.rational
                    .into_iter()
                    .map(|t| {
                        if t.numerator == 0 || t.denominator == 0 {
                            Err(Error::BadParams {
                                system: self.name.clone(),
                                reason: "file indices are 1-based".into(),
                            })
                        } else {
                            Ok(RationalTerm {
                                coeff: t.coeff,
                                numerator: t.numerator - 1,
                                denominator: t.denominator - 1,
                                power: t.power,
                            })
                        }
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let sys = DynamicalSystem::new(self.name, self.dim, poly, rational)?;
        Ok(match self.known_principal_eigenvalues {
            Some(eigs) => sys.with_known_principal_eigenvalues(
                eigs.into_iter().map(|[re, im]| Complex::new(re, im)).collect(),
            ),
            None => sys,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat_exp, spectrum_of};

    fn v2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    #[test]
    fn builtin_names_and_aliases() {
        let p = HashMap::new();
        for name in [
            "linear-spiral",
            "sys1",
            "fixed-point-cubic",
            "limit-cycle",
            "real-eig-triangular",
            "nonpoly-rational",
        ] {
            assert!(builtin_system(name, &p).is_ok(), "{name}");
        }
        assert!(matches!(
            builtin_system("nope", &p),
            Err(Error::UnknownSystem(_))
        ));
        assert!(matches!(
            builtin_system("rod", &p),
            Err(Error::BadParams { .. })
        ));
    }

    #[test]
    fn cubic_field_value() {
        // Hand evaluation at [1, 0]: f1 = -3*0 - 1*1 = -1, f2 = 3*1 - 0 = 3.
        let sys = builtin_system("fixed-point-cubic", &HashMap::new()).unwrap();
        let f = sys.eval_field(&v2(1.0, 0.0)).unwrap();
        assert_eq!(f[0], -1.0);
        assert_eq!(f[1], 3.0);
    }

    #[test]
    fn spiral_field_value() {
        let sys = builtin_system("linear-spiral", &HashMap::new()).unwrap();
        let f = sys.eval_field(&v2(1.0, 1.0)).unwrap();
        assert!((f[0] - 3.1).abs() < 1e-15);
        assert!((f[1] + 2.9).abs() < 1e-15);
    }

    #[test]
    fn limit_cycle_radial_term_vanishes_on_cycle() {
        let sys = builtin_system("limit-cycle", &HashMap::new()).unwrap();
        let f = sys.eval_field(&v2(1.0, 0.0)).unwrap();
        assert!(f[0].abs() < 1e-15);
        assert!((f[1] + 3.0).abs() < 1e-15);
    }

    #[test]
    fn origin_is_fixed_point_of_all_builtins() {
        for name in [
            "linear-spiral",
            "fixed-point-cubic",
            "limit-cycle",
            "real-eig-triangular",
            "nonpoly-rational",
        ] {
            let sys = builtin_system(name, &HashMap::new()).unwrap();
            let f = sys.eval_field(&v2(0.0, 0.0)).unwrap();
            assert_eq!(f.norm(), 0.0, "{name}");
        }
    }

    #[test]
    fn jacobians_at_origin() {
        let sys2 = builtin_system("fixed-point-cubic", &HashMap::new()).unwrap();
        let j = sys2.jacobian(&v2(0.0, 0.0)).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[0.0, -3.0, 3.0, 0.0]));

        let sys5 = builtin_system("nonpoly-rational", &HashMap::new()).unwrap();
        let j = sys5.jacobian(&v2(0.0, 0.0)).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[-1.0, 4.0, -4.0, -1.0]));

        let sys4 = builtin_system("real-eig-triangular", &HashMap::new()).unwrap();
        let j = sys4.jacobian(&v2(0.0, 0.0)).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]));
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let sys = builtin_system("nonpoly-rational", &HashMap::new()).unwrap();
        let x = v2(0.3, -0.7);
        let j = sys.jacobian(&x).unwrap();
        let h = 1e-6;
        for col in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[col] += h;
            xm[col] -= h;
            let fp = sys.eval_field(&xp).unwrap();
            let fm = sys.eval_field(&xm).unwrap();
            for row in 0..2 {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                assert!((j[(row, col)] - fd).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn jacobian_eigenvalues_match_known_principal_eigenvalues() {
        // At the origin fixed point; every distinct Jacobian eigenvalue must
        // appear among the recorded principal eigenvalues.
        let mut params = HashMap::new();
        params.insert("a".into(), 0.1);
        params.insert("omega".into(), 3.0);
        let systems = vec![
            builtin_system("rod", &params).unwrap(),
            builtin_system("linear-spiral", &HashMap::new()).unwrap(),
            builtin_system("fixed-point-cubic", &HashMap::new()).unwrap(),
            builtin_system("real-eig-triangular", &HashMap::new()).unwrap(),
            builtin_system("nonpoly-rational", &HashMap::new()).unwrap(),
        ];
        for sys in systems {
            let j = sys.jacobian(&v2(0.0, 0.0)).unwrap();
            let spec = spectrum_of(&j).unwrap();
            let known = sys.known_principal_eigenvalues().unwrap();
            for l in spec.eigenvalues() {
                assert!(
                    known.iter().any(|k| (k - l).norm() < 1e-12),
                    "{}: {l} not in {known:?}",
                    sys.name()
                );
            }
        }
    }

    #[test]
    fn linear_flow_matches_matrix_exponential() {
        let sys = builtin_system("linear-spiral", &HashMap::new()).unwrap();
        let a = sys.known_generator().unwrap().clone();
        let x0 = v2(0.5, 0.5);
        for t in [0.3, 1.0, 2.7] {
            let closed = mat_exp(&a, t).unwrap() * &x0;
            let numeric = sys.flow(&x0, t).unwrap();
            assert!(
                (&closed - &numeric).norm() / closed.norm() < 1e-10,
                "t = {t}"
            );
        }
    }

    #[test]
    fn limit_cycle_radius_is_invariant() {
        let sys = builtin_system("limit-cycle", &HashMap::new()).unwrap();
        let x0 = v2(0.6, -0.8); // on r = 1
        for t in [0.5, 2.0, 5.0] {
            let x = sys.flow(&x0, t).unwrap();
            assert!((x.norm() - 1.0).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn fixed_point_stays_put() {
        let sys = builtin_system("fixed-point-cubic", &HashMap::new()).unwrap();
        let x = sys.flow(&v2(0.0, 0.0), 3.0).unwrap();
        assert_eq!(x.norm(), 0.0);
    }

    #[test]
    fn flow_semigroup_property() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for name in ["linear-spiral", "fixed-point-cubic", "limit-cycle", "nonpoly-rational"] {
            let sys = builtin_system(name, &HashMap::new()).unwrap();
            for _ in 0..5 {
                let x0 = v2(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let t1 = rng.gen_range(0.05..1.0);
                let t2 = rng.gen_range(0.05..1.0);
                let two_step = sys.flow(&sys.flow(&x0, t1).unwrap(), t2).unwrap();
                let one_step = sys.flow(&x0, t1 + t2).unwrap();
                assert!(
                    (&two_step - &one_step).norm() < 1e-9,
                    "{name}: semigroup violated"
                );
            }
        }
    }

    #[test]
    fn halving_tolerance_reduces_flow_error() {
        let sys = builtin_system("linear-spiral", &HashMap::new()).unwrap();
        let a = sys.known_generator().unwrap().clone();
        let x0 = v2(0.5, 0.5);
        let t = 3.0;
        let exact = mat_exp(&a, t).unwrap() * &x0;
        let mut prev = f64::INFINITY;
        let mut tol = 1e-5;
        for _ in 0..6 {
            let approx = sys.flow_with_tol(&x0, t, tol, tol).unwrap();
            let err = (&approx - &exact).norm();
            assert!(err < prev, "tol {tol}: error {err} did not drop below {prev}");
            prev = err;
            tol *= 0.5;
        }
    }

    #[test]
    fn divergence_error_on_unstable_horizon() {
        let sys = builtin_system("linear-spiral", &HashMap::new()).unwrap();
        // |x| grows like e^{0.1 t}: at t = 200 the norm passes 1e6.
        let r = sys.flow(&v2(1.0, 0.0), 200.0);
        assert!(matches!(r, Err(Error::Divergence { .. })));
    }

    #[test]
    fn pole_hit_is_reported() {
        let spec = SystemSpec {
            name: "pole".into(),
            dim: 1,
            field: vec![FieldComponentSpec {
                poly: vec![],
                rational: vec![RationalTermSpec {
                    coeff: 1.0,
                    numerator: 1,
                    denominator: 1,
                    power: 1,
                }],
            }],
            known_principal_eigenvalues: None,
        };
        let sys = spec.into_system().unwrap();
        let r = sys.eval_field(&DVector::from_vec(vec![-1.0]));
        assert!(matches!(r, Err(Error::PoleHit { .. })));
    }
}
