use thiserror::Error;

/// Errors raised by the library.
///
/// Every variant maps to a stable name (see [`Error::name`]) that the command
/// line front end reports when a numerical failure aborts a run.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not strictly hyperbolic: {0}")]
    NotStrictlyHyperbolic(String),
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian in linear solve")]
    SingularJacobian,
    #[error("ODE step produced non-finite values at s = {0}")]
    StepFailure(f64),
    #[error("quadrature tolerance not met (estimate {estimate:e}, requested {requested:e})")]
    ToleranceNotMet { estimate: f64, requested: f64 },
    #[error("x-flux Jacobian is not invertible at the background state")]
    NotInvertible,
    #[error("entropy pair mismatch: residual {0:e}")]
    EntropyPairMismatch(f64),
    #[error("family {family} is neither genuinely nonlinear nor linearly degenerate (indicator range [{min:e}, {max:e}])")]
    MixedNonlinearity { family: usize, min: f64, max: f64 },
    #[error("entropy Hessian form degenerate for family {family}: {value:e}")]
    DegenerateForm { family: usize, value: f64 },
    #[error("non-physical state: {0}")]
    NonPhysical(String),
    #[error("state is not supersonic: {0}")]
    Subsonic(String),
    #[error("wave curve left the admissible ball at parameter {0}")]
    LeftBall(f64),
    #[error("family {0} is not genuinely nonlinear")]
    NotGnl(usize),
    #[error("family {0} is not linearly degenerate")]
    NotLd(usize),
    #[error("states do not form a Rankine-Hugoniot jump (residual {0:e})")]
    NotAJump(f64),
    #[error("state left the admissible ball: {0}")]
    OutOfBall(String),
    #[error("sector intervals overlap between families {0} and {1}")]
    SectorsOverlap(usize, usize),
    #[error("xi = {0} is not a resonance point of the profile")]
    NotResonant(f64),
    #[error("wave kind incompatible with family: {0}")]
    IncompatibleKind(String),
    #[error("wave strength on the inadmissible side: {0}")]
    InadmissibleStrength(String),
    #[error("profile does not fit inside the sector: {0}")]
    DoesNotFit(String),
    #[error("consecutive simple waves without an intervening shock")]
    ConsecutiveSimpleWaves,
    #[error("mutation not applicable: {0}")]
    InapplicableMutation(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("backward Riemann problems are not solved directly; use the generator")]
    BackwardRiemann,
}

impl Error {
    /// Stable variant name used in diagnostics and CLI exit messages.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotStrictlyHyperbolic(_) => "NotStrictlyHyperbolic",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::SingularJacobian => "SingularJacobian",
            Error::StepFailure(_) => "StepFailure",
            Error::ToleranceNotMet { .. } => "ToleranceNotMet",
            Error::NotInvertible => "NotInvertible",
            Error::EntropyPairMismatch(_) => "EntropyPairMismatch",
            Error::MixedNonlinearity { .. } => "MixedNonlinearity",
            Error::DegenerateForm { .. } => "DegenerateForm",
            Error::NonPhysical(_) => "NonPhysical",
            Error::Subsonic(_) => "Subsonic",
            Error::LeftBall(_) => "LeftBall",
            Error::NotGnl(_) => "NotGNL",
            Error::NotLd(_) => "NotLD",
            Error::NotAJump(_) => "NotAJump",
            Error::OutOfBall(_) => "OutOfBall",
            Error::SectorsOverlap(..) => "SectorsOverlap",
            Error::NotResonant(_) => "NotResonant",
            Error::IncompatibleKind(_) => "IncompatibleKind",
            Error::InadmissibleStrength(_) => "InadmissibleStrength",
            Error::DoesNotFit(_) => "DoesNotFit",
            Error::ConsecutiveSimpleWaves => "ConsecutiveSimpleWaves",
            Error::InapplicableMutation(_) => "InapplicableMutation",
            Error::InvalidProfile(_) => "InvalidProfile",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::BackwardRiemann => "BackwardRiemann",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
