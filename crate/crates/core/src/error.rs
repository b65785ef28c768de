use thiserror::Error;

/// Errors raised by the geometry engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("point {point:?} lies outside the chart domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("geodesic left the chart domain at {point:?}")]
    LeftChartDomain { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("finite-difference curvature failed symmetry checks (residual {residual:e})")]
    NumericalBreakdown { residual: f64 },

    #[error("shooting did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("points are (nearly) antipodal; the logarithm is undefined at the cut locus")]
    CutLocus,

    #[error("degenerate simplex: smallest relative singular value {0:e}")]
    DegenerateSimplex(f64),

    #[error("degenerate differential at barycentric point {0:?}")]
    DegenerateAt(Vec<f64>),

    #[error("invalid integrand indices r={r}, f={f}, n={n}")]
    IndexError { r: usize, f: usize, n: usize },

    #[error("intrinsic integrand requested in odd dimension {0}")]
    OddDimension(usize),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("model has positive sectional curvature; the budget only applies to nonpositive curvature")]
    PositiveCurvatureModel,

    #[error("no budget supplied for simplex `{0}`")]
    MissingBudget(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
