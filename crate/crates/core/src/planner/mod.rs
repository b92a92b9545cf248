//! Threshold and quality planning over a known capacity window.

mod ascending;
mod oracle;
mod robustness;
mod search;
mod stalls;
mod thresholds;

pub use ascending::{ascending_levels, LevelAssignment};
pub use oracle::{tree_oracle, OracleResult, DEFAULT_ORACLE_BUDGET};
pub use robustness::{evaluate_robustness, robustness_error, RobustnessReport, RobustnessRow};
pub use search::{
    plan_session, sweep_thresholds, Candidate, PlanResult, ThresholdMode, ThresholdSweep,
};
pub use stalls::{
    detect_stall_segments, plan_with_stalls, scan_stall_positions, PartPlan, StallPolicy,
    StallScanRow, StalledPlan,
};
pub use thresholds::{invest_threshold, optimal_threshold_candidates};
