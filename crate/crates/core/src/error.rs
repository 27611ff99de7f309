use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },
    #[error("critical point is not a saddle (Hessian determinant {g})")]
    NotASaddle { g: f64 },
    #[error("quadrature error estimate {estimate:e} exceeds {tolerance:e}")]
    QuadratureFailure { estimate: f64, tolerance: f64 },
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("extrapolation diverged: {0}")]
    FitDiverged(String),
    #[error("point is within the separatrix tolerance (|E| = {energy:e})")]
    NearSeparatrix { energy: f64 },
    #[error("level set is empty")]
    EmptyLevelSet,
    #[error("assumption B violated: {0}")]
    AssumptionBViolated(String),
    #[error("slow trajectory does not close (error {0:e})")]
    OpenTrajectory(f64),
    #[error("finite differences inconsistent: {0}")]
    DifferentiationFailure(String),
    #[error("pseudo-phase {eta} left the window ({lo}, {hi})")]
    EtaWindowViolation { eta: f64, lo: f64, hi: f64 },
    #[error("capture test value {value} is within tolerance of a boundary")]
    CaptureBoundary { value: f64 },
    #[error("level-curve tracing stalled at eta = {0}")]
    TracingStalled(f64),
    #[error("no stable segment on the level curve")]
    EmptySegment,
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),
    #[error("coefficient table has a gap near I = {0}")]
    CoefficientInterpolationGap(f64),
    #[error("model is not separable; splitting integrator unavailable")]
    SeparabilityUnsupported,
    #[error("event refinement failed near t = {0}")]
    EventRefinementFailure(f64),
    #[error("pseudo-phase {0} outside (0, 1)")]
    OutOfUnitInterval(f64),
    #[error("action {0} left the admissible interval")]
    EscapeFromXi(f64),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
}

pub type Result<T> = std::result::Result<T, Error>;
