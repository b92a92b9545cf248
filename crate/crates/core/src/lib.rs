//! Look-ahead adaptive bitrate planning.
//!
//! Given the capacity a client will see over a window and a video encoded at
//! several quality levels, pick a transmission threshold and a non-decreasing
//! per-segment quality plan that trade radio utilization against viewing
//! quality without letting playback stall.

pub mod error;
pub mod model;
pub mod planner;
pub mod sim;
pub mod traces;

pub use error::{Error, Result};
pub use model::{
    compute_cost, compute_quality, compute_utilization, make_threshold_schedule, CapacityTrace,
    Level, QualityPlan, SessionOutcome, StallEvent, ThresholdSchedule, TradeoffParam, VideoSpec,
};
pub use planner::{plan_session, sweep_thresholds, ThresholdMode};
pub use sim::{SessionSim, SimConfig};
