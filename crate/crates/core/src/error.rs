use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("cannot parse rational from {0:?} (expected \"p/q\" or integer)")]
    BadRational(String),
    #[error("a K3 orbifold carries at most 24 A1 points, got {0}")]
    TooManySingularPoints(u32),
    #[error("ample self-intersection must be positive, got {0}")]
    NonPositiveSelfIntersection(String),
    #[error("cannot blow up {k_blown} points on a surface with {num_a1} A1 points")]
    BlowupCount { k_blown: u32, num_a1: u32 },
    #[error("divisor dimensions {d1} and {d2} do not match lattice dimension {lattice}")]
    DimensionMismatch { lattice: usize, d1: usize, d2: usize },
    #[error("construction needs at least {need} blown-up points, lattice has {have}")]
    NeedsBlowups { need: u32, have: u32 },
    #[error("weight/degree lists must be non-empty")]
    EmptyWeightData,
    #[error("weights and degrees must be positive")]
    NonPositiveWeightData,
    #[error("rank too small: b2_orb = {b2_orb} < {min}")]
    RankTooSmall { b2_orb: u32, min: u32 },
    #[error("degree-0 required for the integrability check")]
    DegreeZeroRequired,
    #[error("anti-self-dual self-intersections must be <= 0, got {0}")]
    PositiveAsdSelfIntersection(String),
}

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid size must be even and >= 8, got {0}")]
    BadGridSize(usize),
    #[error("grids do not match: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("bidegree ({0},{1}) out of range for a 2-fold base")]
    BadBidegree(i32, i32),
    #[error("{op} cannot raise bidegree ({p},{q})")]
    DegreeOverflow { op: &'static str, p: u8, q: u8 },
    #[error("wedge of degrees ({0},{1}) and ({2},{3}) exceeds the base dimension")]
    WedgeOverflow(u8, u8, u8, u8),
    #[error("expected a ({0},{1})-form, got ({2},{3})")]
    WrongBidegree(u8, u8, u8, u8),
    #[error("matrix field is singular or not positive-definite at grid point {index} (leading minor {minor})")]
    NotPositiveDefinite { index: usize, minor: usize },
    #[error("matrix sizes do not match: {0} vs {1}")]
    MatrixSizeMismatch(usize, usize),
    #[error("curvature data is not closed: |dW| = {0:.3e} exceeds tolerance {1:.3e}")]
    NotClosed(f64, f64),
    #[error("form is not primitive: |trace| = {0:.3e} exceeds tolerance {1:.3e}")]
    NotPrimitive(f64, f64),
    #[error("form is not anti-self-dual: |*W + W| = {0:.3e} exceeds tolerance {1:.3e}")]
    NotAntiSelfDual(f64, f64),
    #[error("field is not real: max imaginary part {0:.3e}")]
    NotReal(f64),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("source term has nonzero mean {0:.3e} (relative); convention is broken")]
    NonzeroMean(f64),
    #[error("Newton did not converge in {max} iterations; final residual {residual:.3e} at t = {t}")]
    NewtonStalled { max: usize, residual: f64, t: f64 },
    #[error("left admissible set Upsilon at t = {t}: {which}")]
    LeftUpsilon { t: f64, which: String },
    #[error("comparison form not positive at t = {t}")]
    ComparisonNotPositive { t: f64 },
    #[error("initial constant iterate violates Upsilon: {0}")]
    BadInitialSet(String),
    #[error("linear solve stalled: residual {0:.3e} after {1} iterations")]
    LinearStalled(f64, usize),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("config error: {0}")]
    Config(String),
    #[error("integrability violated: analytic mean(mu') = {analytic:.6e}, lattice lhs - rhs = {lattice}")]
    IntegrabilityViolated { analytic: f64, lattice: String },
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    /// CLI exit code: 2 for residual/feasibility failures, 1 for usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::IntegrabilityViolated { .. }
            | PipelineError::VerificationFailed(_)
            | PipelineError::Solver(_) => 2,
            _ => 1,
        }
    }
}
