use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid capacity trace: {0}")]
    InvalidTrace(String),

    #[error("invalid video spec: {0}")]
    InvalidSpec(String),

    #[error("invalid quality plan: {0}")]
    InvalidPlan(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    /// The plan stalls or does not finish inside the window.
    #[error("infeasible plan at alpha = {alpha} bps: {reason}")]
    InfeasiblePlan { alpha: f64, reason: String },

    /// Not even the lowest level streamed greedily fits the window.
    #[error("no feasible session: the lowest quality level cannot be streamed without stalling")]
    NoFeasibleSession,

    #[error("part {part} of the stall partition is infeasible")]
    PartInfeasible { part: usize },

    #[error("search space of {nodes} nodes exceeds the budget of {budget}")]
    BudgetExceeded { nodes: f64, budget: u64 },

    #[error("relative error undefined: reference value is zero")]
    UndefinedRelativeError,

    #[error("slotting mismatch: {0}")]
    MismatchedSlotting(String),

    #[error("log has zero travelled distance; slot it directly in time instead")]
    StationaryLog,

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("line {line}: timestamp {timestamp} is not after the previous one")]
    NonMonotoneTimestamp { line: u64, timestamp: f64 },

    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
