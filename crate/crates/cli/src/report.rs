//! Output records. Every payload is a pure function of config and seed;
//! bench runtimes are the only measured values.

use lookahead_abr::planner::PlanResult;
use lookahead_abr::{SessionOutcome, StallEvent, ThresholdMode};
use serde::Serialize;

use crate::failure::Failure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scores {
    pub alpha_th_bps: f64,
    pub utilization: f64,
    pub quality: f64,
    pub cost: f64,
}

impl Scores {
    pub fn of(alpha_th: f64, outcome: &SessionOutcome) -> Self {
        Self {
            alpha_th_bps: alpha_th,
            utilization: outcome.utilization,
            quality: outcome.quality,
            cost: outcome.cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub schema_version: u32,
    pub a: f64,
    pub threshold_mode: ThresholdMode,
    pub slot_duration_s: f64,
    pub trace_slots: usize,
    #[serde(flatten)]
    pub scores: Scores,
    /// Level of each segment.
    pub levels: Vec<usize>,
    pub stall_segments: Vec<usize>,
    pub stall_events: Vec<StallEvent>,
    pub startup_slot: usize,
    pub session_length_s: f64,
    /// Frames received by the end of each slot.
    pub arrived_frames: Vec<f64>,
    /// Frames played by the end of each slot.
    pub watched_frames: Vec<f64>,
    pub bits_per_slot: Vec<f64>,
    pub candidates_evaluated: usize,
    /// Greedy transmission at the smallest capacity, when it is feasible.
    pub benchmark: Option<Scores>,
}

impl PlanReport {
    pub fn from_result(
        result: &PlanResult,
        a: f64,
        mode: ThresholdMode,
        slot_duration_s: f64,
        stall_segments: Vec<usize>,
        benchmark: Option<Scores>,
    ) -> Self {
        let o = &result.outcome;
        Self {
            schema_version: SCHEMA_VERSION,
            a,
            threshold_mode: mode,
            slot_duration_s,
            trace_slots: o.bits_used_per_slot.len(),
            scores: Scores::of(result.alpha_th, o),
            levels: result.plan.levels().to_vec(),
            stall_segments,
            stall_events: o.stall_events.clone(),
            startup_slot: o.startup_slot,
            session_length_s: o.session_length,
            arrived_frames: o.arrived_frames.clone(),
            watched_frames: o.watched_frames.clone(),
            bits_per_slot: o.bits_used_per_slot.clone(),
            candidates_evaluated: result.candidates_evaluated,
            benchmark,
        }
    }

    /// Structural checks run before anything is written.
    pub fn validate(&self, n_segments: usize) -> Result<(), Failure> {
        let fail = |m: &str| Err(Failure::Config(format!("report failed schema check: {m}")));
        if self.levels.len() != n_segments {
            return fail("one level per segment");
        }
        if self.arrived_frames.len() != self.watched_frames.len() {
            return fail("arrived and watched trajectories differ in length");
        }
        if self.bits_per_slot.len() != self.trace_slots {
            return fail("one bit count per slot");
        }
        let mut numbers = vec![
            self.scores.alpha_th_bps,
            self.scores.utilization,
            self.scores.quality,
            self.scores.cost,
            self.session_length_s,
        ];
        numbers.extend(&self.arrived_frames);
        numbers.extend(&self.watched_frames);
        numbers.extend(&self.bits_per_slot);
        if numbers.iter().any(|x| !x.is_finite()) {
            return fail("non-finite value");
        }
        if self
            .arrived_frames
            .iter()
            .zip(&self.watched_frames)
            .any(|(u, l)| l > u)
        {
            return fail("playback ahead of arrivals");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub a: f64,
    pub alpha_th_bps: f64,
    pub utilization: f64,
    pub quality: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub slot: usize,
    pub arrived_frames: f64,
    pub watched_frames: f64,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StallRow {
    pub stall_segment: usize,
    pub stall_slot: Option<usize>,
    pub cost_before: f64,
    pub cost_after: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessCsvRow {
    pub realization: usize,
    pub source: String,
    pub utilization: f64,
    pub quality: f64,
    pub error_utilization: Option<f64>,
    pub error_quality: Option<f64>,
    pub flagged: bool,
    pub stalls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    /// `period` or `quantum`.
    pub sweep: &'static str,
    pub value: f64,
    /// Traces where both the run and its baseline were feasible.
    pub traces: usize,
    pub mean_runtime_s: Option<f64>,
    pub accuracy_utilization: Option<f64>,
    pub accuracy_quality: Option<f64>,
    pub accuracy_cost: Option<f64>,
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}
