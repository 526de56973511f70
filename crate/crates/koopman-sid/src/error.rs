use thiserror::Error;

/// Errors produced across the identification pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("non-finite entry encountered in {0}")]
    NonFinite(&'static str),
    #[error("matrix is singular (eigenvalue of magnitude {0:.3e})")]
    Singular(f64),
    #[error("eigenvalue {re:.6e}{im:+.6e}i lies on the principal-branch cut (-inf, 0]")]
    BranchCut { re: f64, im: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("denominator 1 + x_{coordinate}^{power} vanished at the evaluation point{}", pair_index.map(|i| format!(" (pair {i})")).unwrap_or_default())]
    PoleHit {
        coordinate: usize,
        power: u32,
        pair_index: Option<usize>,
    },
    #[error("trajectory {trajectory} diverged: |x| = {norm:.3e} exceeded 1e6 at t = {t:.3}")]
    Divergence {
        trajectory: usize,
        t: f64,
        norm: f64,
    },
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("bad parameters for system `{system}`: {reason}")]
    BadParams { system: String, reason: String },
    #[error("dictionary is missing the coordinate observable x_{0}")]
    MissingStateObservable(usize),
    #[error("duplicate basis function at index {0}")]
    DuplicateBasis(usize),
    #[error("dictionary is not invariant: L g_{basis_index} leaves the span (residual {residual:.3e})")]
    NotInvariant { basis_index: usize, residual: f64 },
    #[error("all true coefficients are zero; NRMSE undefined")]
    AllZeroTruth,
    #[error("eigenvector matrix is ill-conditioned (cond = {0:.3e}); matrix treated as defective")]
    Defective(f64),
    #[error("shift requested on a real eigenvalue; no real alias exists along that direction")]
    RealEigenvalue,
    #[error("{0} failed to converge")]
    NoConvergence(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
