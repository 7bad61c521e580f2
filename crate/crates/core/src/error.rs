use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coefficient {name}: {reason}")]
    InvalidCoefficient { name: &'static str, reason: String },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("efficiency undefined at zero mechanical power (tau = {tau}, omega = {omega})")]
    UndefinedOperatingPoint { tau: f64, omega: f64 },

    #[error("optimal-torque radicand is negative ({beta}) at omega = {omega}")]
    NegativeBeta { omega: f64, beta: f64 },

    #[error("OOL efficiency has no interior maximum on (0, {omega_max}] rad/s")]
    NoInteriorMaximum { omega_max: f64 },

    #[error("singular linear system")]
    SingularSystem,

    #[error("infeasible design points: {0}")]
    InfeasibleDesignPoints(String),

    #[error("no feasible second design point in the reference map")]
    NoFeasibleCandidate,

    #[error("closed-form ratio degenerate: {0}")]
    ClosedFormDegenerate(String),

    #[error("no positive root of the ratio quartic")]
    NoPositiveRoot,

    #[error("operating point outside the machine envelope: {0}")]
    EnvelopeViolation(String),

    #[error("numeric validation failed: {0}")]
    NumericValidation(String),

    #[error("{0}")]
    EmptyInput(&'static str),

    #[error("zero traction energy over the cycle")]
    ZeroTractionEnergy,

    #[error("malformed {what}: {reason}")]
    Parse { what: &'static str, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Parse {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
