use thiserror::Error;

/// Errors produced by cone construction, classification and bound checking.
#[derive(Debug, Error)]
pub enum Error {
    #[error("flavor dimension {0} out of range (1..=8)")]
    BadFlavorDim(usize),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("matrix is not symmetric: max asymmetry {max_asym:.3e}")]
    NotSymmetric { max_asym: f64 },
    #[error("tensor violates the required index symmetries: max residual {residual:.3e}")]
    NotCrossingSymmetric { residual: f64 },
    #[error("zero covector is not a valid ray direction")]
    ZeroCovector,
    #[error("covectors are linearly dependent")]
    DependentCovectors,
    #[error("third-kind ray parameters invalid: g^2 - (1 - d^2 + d h) = {margin:.6e} must be > 0")]
    InvalidRayParams { margin: f64 },
    #[error("matrix is singular (|det| = {det:.3e})")]
    SingularMatrix { det: f64 },
    #[error("first Bianchi identity violated: residual {residual:.3e} exceeds {tol:.1e}")]
    BianchiViolation { residual: f64, tol: f64 },
    #[error("tensor is not in the cone: min eigenvalue {min_eig:.6e}")]
    NotInCone { min_eig: f64 },
    #[error("zero tensor does not generate a ray")]
    ZeroTensor,
    #[error("operation requires 3 flavors, got {0}")]
    RequiresThreeFlavors(usize),
    #[error("tensor is not invariant under the requested sector: equation {index} residual {residual:.3e}")]
    NotInvariant { index: usize, residual: f64 },
    #[error("bad coefficient input: {0}")]
    BadInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
