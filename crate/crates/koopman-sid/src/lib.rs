//! Identification of continuous-time dynamical systems from equidistantly
//! sampled data, built on Koopman-operator lifting and the principal matrix
//! logarithm.
//!
//! The pipeline mirrors the standard lifted-regression route: snapshot pairs
//! are lifted through an observable dictionary, the Koopman matrix is
//! estimated by least squares, and the generator is recovered as
//! `Log(U) / T_s`. The [`sampling`] module quantifies when that recovery is
//! unique: the critical sampling period `pi / max|Im sigma(L)|`, explicit
//! construction of generator aliases beyond it, and strip-membership checks.
//!
//! Crate layout:
//! - [`linalg`] dense kernels (eig, expm, principal log, min-norm lstsq)
//! - [`dynamics`] benchmark vector fields, adaptive integration, sampling
//! - [`observables`] dictionaries and data lifting
//! - [`koopman`] the identification pipeline and coefficient recovery
//! - [`sampling`] critical periods, aliasing space, alias certificates
//! - [`metrics`] NRMSE, DFT, and spectral error
//!
//! The `parallel` feature (on by default) runs trajectory sampling, lifting,
//! and sweeps on a rayon pool; outputs are identical to the sequential path.

pub mod dynamics;
pub mod error;
pub mod koopman;
pub mod linalg;
pub mod metrics;
pub mod observables;
pub mod sampling;

pub(crate) mod exec;

pub use error::{Error, Result};
