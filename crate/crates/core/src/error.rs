use thiserror::Error;

/// Errors raised by the modeling and optimization pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DsaError {
    #[error("invalid element {index}: {reason}")]
    InvalidElement { index: usize, reason: String },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("frequency must be positive, got {0} Hz")]
    NonPositiveFrequency(f64),

    #[error("ill-conditioned network ({context}): condition estimate {condition:.3e}")]
    IllConditioned { context: String, condition: f64 },

    #[error("passivity violation: Re{{Z_A}} eigenvalue {eigenvalue:.3e} below floor {floor:.3e}")]
    PassivityViolation { eigenvalue: f64, floor: f64 },

    #[error("singular SIM layer {layer}")]
    SingularLayer { layer: usize },

    #[error("degenerate radiator: radiated power {0:.3e} W is not positive")]
    DegenerateRadiator(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("coincident points: element {element} and observation point {point}")]
    CoincidentPoint { element: usize, point: usize },

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite objective at initial point")]
    NonFiniteObjective,

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, DsaError>;
