use thiserror::Error;

pub type Result<T> = std::result::Result<T, WaveError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaveError {
    #[error("branch hint u = {hint} is not classically allowed (E - V = {gap:e})")]
    NoOrbit { hint: f64, gap: f64 },
    #[error("degenerate turning point near u = {u} (|V'| = {slope:e})")]
    DegenerateTurningPoint { u: f64, slope: f64 },
    #[error("no turning point found on the {side} side within the scan window")]
    NoBracket { side: &'static str },
    #[error("quadrature did not converge with {nodes} nodes (last delta {delta:e})")]
    QuadratureNoConvergence { nodes: usize, delta: f64 },
    #[error("finite-difference stencil in {parameter} lost the orbit: {detail}")]
    StencilCrossesSeparatrix { parameter: &'static str, detail: String },
    #[error("profile does not close after one period (mismatch {mismatch:e}, tolerance {tolerance:e})")]
    ClosureFailure { mismatch: f64, tolerance: f64 },
    #[error("ODE integration failed: {detail}")]
    IntegrationFailure { detail: String },
    #[error("contour integral not resolved at radius {radius:e} (delta {delta:e})")]
    ContourNotResolved { radius: f64, delta: f64 },
    #[error("sign of D(mu, 1) did not stabilize up to mu = {last_mu}")]
    NoStabilization { last_mu: f64 },
    #[error("orientation index {jac3:e} is within tolerance {tolerance:e} of zero")]
    DegenerateJacobian { jac3: f64, tolerance: f64 },
    #[error("branches {first} and {second} collide at kappa = {kappa:e}")]
    BranchCollision { kappa: f64, first: usize, second: usize },
    #[error("Newton iteration diverged on branch {branch} at kappa = {kappa:e}")]
    NewtonDivergence { kappa: f64, branch: usize },
    #[error("Picard-Fuchs system is singular (determinant {det:e})")]
    SingularSystem { det: f64 },
    #[error("invalid input: {detail}")]
    InvalidInput { detail: String },
}

impl WaveError {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            WaveError::NoOrbit { .. } => "NoOrbit",
            WaveError::DegenerateTurningPoint { .. } => "DegenerateTurningPoint",
            WaveError::NoBracket { .. } => "NoBracket",
            WaveError::QuadratureNoConvergence { .. } => "QuadratureNoConvergence",
            WaveError::StencilCrossesSeparatrix { .. } => "StencilCrossesSeparatrix",
            WaveError::ClosureFailure { .. } => "ClosureFailure",
            WaveError::IntegrationFailure { .. } => "IntegrationFailure",
            WaveError::ContourNotResolved { .. } => "ContourNotResolved",
            WaveError::NoStabilization { .. } => "NoStabilization",
            WaveError::DegenerateJacobian { .. } => "DegenerateJacobian",
            WaveError::BranchCollision { .. } => "BranchCollision",
            WaveError::NewtonDivergence { .. } => "NewtonDivergence",
            WaveError::SingularSystem { .. } => "SingularSystem",
            WaveError::InvalidInput { .. } => "InvalidInput",
        }
    }

    /// True for failures of an iterative method, as opposed to inputs outside
    /// the domain of the problem.
    pub fn is_nonconvergence(&self) -> bool {
        matches!(
            self,
            WaveError::QuadratureNoConvergence { .. }
                | WaveError::ClosureFailure { .. }
                | WaveError::IntegrationFailure { .. }
                | WaveError::ContourNotResolved { .. }
                | WaveError::NoStabilization { .. }
                | WaveError::NewtonDivergence { .. }
        )
    }

    pub(crate) fn invalid(detail: impl Into<String>) -> Self {
        WaveError::InvalidInput { detail: detail.into() }
    }
}
