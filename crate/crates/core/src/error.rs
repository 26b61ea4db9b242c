use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("system not admissible: {0}")]
    Inadmissible(String),
    #[error("gcd(m, n) = {0}, expected 1")]
    NotCoprime(u32),
    #[error("coefficient overflow: {0}")]
    Overflow(String),
    #[error("root solver did not converge after {iterations} iterations (residual {residual:e})")]
    RootNonConvergence { iterations: usize, residual: f64 },
    #[error("step collapse at t = {t}: roots closer than resolution")]
    StepCollapse { t: f64 },
    #[error("residual blow-up at t = {t}: |Q| = {residual:e}")]
    ResidualBlowup { t: f64, residual: f64 },
    #[error("ambiguous root matching for label {label}")]
    AmbiguousMatching { label: usize },
    #[error("branch ambiguity: {0}")]
    BranchAmbiguity(String),
    #[error("quadrature did not converge (estimated error {0:e})")]
    QuadratureNonconvergence(f64),
    #[error("pole coincides with a branch point")]
    PoleOnBranchPoint,
    #[error("continuity break at t = {t}: {reason}")]
    ContinuityBreak { t: f64, reason: String },
    #[error("symbolic chain and continuation disagree by {0:e}")]
    ChainMismatch(f64),
    #[error("value {value} is not within tolerance of any rational p/{denominator}")]
    SnapFailure { value: f64, denominator: i64 },
    #[error("lattice gap: {0}")]
    LatticeGap(String),
    #[error("degenerate request: {0}")]
    Degenerate(String),
    #[error("sequence did not converge: {0}")]
    NonConvergentSequence(String),
}

impl Error {
    /// Numerical failures map to a distinct process exit code in the CLI.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidInput(_) | Error::Inadmissible(_) | Error::NotCoprime(_) | Error::Degenerate(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::Inadmissible(_) => "Inadmissible",
            Error::NotCoprime(_) => "NotCoprime",
            Error::Overflow(_) => "Overflow",
            Error::RootNonConvergence { .. } => "RootNonConvergence",
            Error::StepCollapse { .. } => "StepCollapse",
            Error::ResidualBlowup { .. } => "ResidualBlowup",
            Error::AmbiguousMatching { .. } => "AmbiguousMatching",
            Error::BranchAmbiguity(_) => "BranchAmbiguity",
            Error::QuadratureNonconvergence(_) => "QuadratureNonconvergence",
            Error::PoleOnBranchPoint => "PoleOnBranchPoint",
            Error::ContinuityBreak { .. } => "ContinuityBreak",
            Error::ChainMismatch(_) => "ChainMismatch",
            Error::SnapFailure { .. } => "SnapFailure",
            Error::LatticeGap(_) => "LatticeGap",
            Error::Degenerate(_) => "Degenerate",
            Error::NonConvergentSequence(_) => "NonConvergentSequence",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
