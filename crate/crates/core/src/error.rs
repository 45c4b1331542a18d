use thiserror::Error;

/// Everything that can go wrong between branch-point input and a finished report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("surface needs at least one band")]
    EmptySurface,
    #[error("cuts {0} and {1} overlap")]
    OverlappingCuts(usize, usize),
    #[error("band {0} has non-positive height {1}")]
    NonPositiveBandHeight(usize, f64),
    #[error("band endpoints are not strictly interlaced at position {0}")]
    OrderingViolation(usize),
    #[error("branch point {0} is repeated")]
    DuplicateBranchPoint(usize),
    #[error("point {0} lies on branch cut {1}")]
    OnBranchCut(String, usize),
    #[error("root finding for the divisor polynomial failed: {0}")]
    RootFindingFailure(String),
    #[error("quadrature did not converge ({0})")]
    QuadratureNonConvergence(String),
    #[error("integration path crosses cut {0}")]
    PathCrossesCut(usize),
    #[error("A-period matrix is singular (condition estimate {0:e})")]
    SingularAMatrix(f64),
    #[error("normalization system for second-kind differentials is singular")]
    SingularNormalizationSystem,
    #[error("Abel map tail towards infinity did not converge")]
    TailNotConverged,
    #[error("genus-0 surface has no periods")]
    GenusZero,
    #[error("theta truncation needs {0} lattice points, above the cap")]
    TruncationOverflow(usize),
    #[error("theta denominator vanished (|Θ|/scale = {0:e})")]
    ThetaZeroDenominator(f64),
    #[error("L(∞) is singular")]
    SingularLInfinity,
    #[error("far-field fit for Y₁ did not converge (spread {0:e})")]
    FitNonConvergence(f64),
    #[error("operation requires {0} mode")]
    WrongMode(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
