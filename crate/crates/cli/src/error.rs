use rindler_core::kinematics::KinematicsError;
use rindler_core::protocols::ProtocolError;
use rindler_core::quantum::QuantumError;
use rindler_core::schwarzschild::SchwarzschildError;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{message}")]
    Validation { invariant: String, message: String },
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn parse(message: impl Into<String>) -> Self {
        CliError::Parse(message.into())
    }

    pub fn validation(invariant: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation { invariant: invariant.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Validation { .. } => 3,
            CliError::Solver(_) => 4,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Parse(_) => "parse",
            CliError::Validation { .. } => "validation",
            CliError::Solver(_) => "solver",
        }
    }

    pub fn invariant(&self) -> Option<&str> {
        match self {
            CliError::Validation { invariant, .. } => Some(invariant),
            _ => None,
        }
    }

    /// `{code, invariant, message}`.
    pub fn to_json(&self) -> Value {
        json!({
            "code": self.code(),
            "invariant": self.invariant(),
            "message": self.to_string(),
        })
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<KinematicsError> for CliError {
    fn from(e: KinematicsError) -> Self {
        match &e {
            KinematicsError::NonPositive { name, .. } => CliError::validation(format!("{name}>0"), e.to_string()),
            KinematicsError::NonFinite { name, .. } => CliError::validation(format!("{name} finite"), e.to_string()),
            KinematicsError::BeforeEmission { .. } | KinematicsError::Numerics(_) => CliError::Solver(e.to_string()),
        }
    }
}

impl From<QuantumError> for CliError {
    fn from(e: QuantumError) -> Self {
        match &e {
            QuantumError::NotUnitary(_) => CliError::validation("unitary", e.to_string()),
            QuantumError::NotUnitDirection { .. } => CliError::validation("unit measurement directions", e.to_string()),
            QuantumError::ZeroVector => CliError::validation("nonzero state", e.to_string()),
            QuantumError::BadDensity(_) => CliError::validation("density matrix", e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Invariant { invariant, message } => {
                CliError::validation(invariant, format!("invariant `{invariant}` violated: {message}"))
            }
            ProtocolError::Kinematics(k) => k.into(),
            ProtocolError::Quantum(q) => q.into(),
        }
    }
}

impl From<SchwarzschildError> for CliError {
    fn from(e: SchwarzschildError) -> Self {
        let invariant = match &e {
            SchwarzschildError::InvalidRadius(_) => "rs>0",
            SchwarzschildError::OutOfRange { .. } => "r in range",
            SchwarzschildError::InvalidTolerance(_) => "tol>0",
            SchwarzschildError::RatioAboveThreshold { .. } => "rs/r0<threshold",
            SchwarzschildError::Degenerate { .. } => "r1 away from peak",
            SchwarzschildError::AboveMaximum { .. } => "tau(r1)<=tau_max",
            SchwarzschildError::NoPartner { .. } | SchwarzschildError::Residual { .. } | SchwarzschildError::Numerics(_) => {
                return CliError::Solver(e.to_string())
            }
        };
        CliError::validation(invariant, e.to_string())
    }
}
