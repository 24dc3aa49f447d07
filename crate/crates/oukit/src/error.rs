//! Crate-wide error type.

use num_complex::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not (numerically) diagonalizable: cond(Y) = {cond:.3e} exceeds 1e8")]
    NotDiagonalizable { cond: f64 },

    #[error("A and B are not simultaneously diagonalizable: relative off-diagonal mass of Y^-1 B Y is {offdiag:.3e}")]
    NotSimultaneous { offdiag: f64 },

    #[error("diffusion matrix is not elliptic: eigenvalue {eigenvalue} has non-positive real part")]
    NonEllipticA { eigenvalue: Complex64 },

    #[error("drift matrix is not skew-symmetric: |S + S^T| = {deviation:.3e}")]
    NotSkew { deviation: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("linear algebra backend failure: {0}")]
    Linalg(String),

    #[error("branch cut hit / non-finite value of the scalar function at eigenvalue {eigenvalue}")]
    BranchCutHit { eigenvalue: Complex64 },

    #[error("gamma function pole at {0}")]
    PoleHit(Complex64),

    #[error("hypergeometric denominator parameter {0} is a non-positive integer")]
    ParameterPole(f64),

    #[error("operation is defined for scalar systems (N = 1) only, got N = {0}")]
    SystemNotScalar(usize),

    #[error("quadrature did not converge in {context}: refinement difference {difference:.3e} exceeds {tolerance:.3e}")]
    QuadratureNotConverged {
        context: &'static str,
        difference: f64,
        tolerance: f64,
    },

    #[error("time integral does not converge: b0 = {0:.6} <= 0")]
    NonDecayingB(f64),

    #[error("evaluation point is closer than two stencil widths to the grid boundary")]
    TooCloseToBoundary,

    #[error("resolvent estimate hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("spectral margin too small: Re(lambda) - omega = {0:.3e} < 1e-3")]
    SpectralMarginTooSmall(f64),

    #[error("grid is empty or degenerate")]
    EmptyGrid,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
