use std::fmt;

use lookahead_abr::Error;

/// A failed run, classified by process exit code.
#[derive(Debug)]
pub enum Failure {
    /// No feasible session for the given inputs.
    Infeasible(String),
    Io(String),
    /// Bad flags, config or input values.
    Config(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Infeasible(_) => 2,
            Failure::Io(_) => 3,
            Failure::Config(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Infeasible(m) => write!(f, "infeasible: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
            Failure::Config(m) => write!(f, "configuration error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::NoFeasibleSession
            | Error::PartInfeasible { .. }
            | Error::InfeasiblePlan { .. } => Failure::Infeasible(message),
            Error::Io { .. } => Failure::Io(message),
            Error::Csv(ref c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => Failure::Io(message),
            _ => Failure::Config(message),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}
