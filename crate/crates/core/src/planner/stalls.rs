//! Planning with deliberate re-buffering.
//!
//! The video is cut into `K + 1` parts at stall points. Playback up to a cut
//! is exactly what the plan without that cut would have done. Transmission
//! then stops, and the rest of the video is planned as a new session that
//! starts at the slot where playback of the earlier part ends: it fills a
//! fresh start-up cache and resumes once the cache is full. The wait for
//! that cache is the stall. Adding a cut never changes the parts before it.
//! When the rest of the video cannot play through from a part's start, that
//! part is planned on its own instead.

use std::ops::Range;

use serde::Serialize;

use super::search::{plan_session, sweep_thresholds, PlanResult, ThresholdMode};
use crate::error::{Error, Result};
use crate::model::{
    compute_cost, compute_quality, compute_utilization, CapacityTrace, QualityPlan, SessionOutcome,
    StallEvent, TradeoffParam, VideoSpec,
};
use crate::sim::{SessionSim, SimConfig};

/// Segment indices where playback is cut, strictly increasing in `1..N`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct StallPolicy {
    stall_segments: Vec<usize>,
}

impl StallPolicy {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(stall_segments: Vec<usize>, n_segments: usize) -> Result<Self> {
        if stall_segments.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "stall segments must be strictly increasing".into(),
            ));
        }
        if let Some(&bad) = stall_segments.iter().find(|&&s| s == 0 || s >= n_segments) {
            return Err(Error::InvalidArgument(format!(
                "stall segment {bad} outside 1..{n_segments}"
            )));
        }
        Ok(Self { stall_segments })
    }

    pub fn k(&self) -> usize {
        self.stall_segments.len()
    }

    pub fn stall_segments(&self) -> &[usize] {
        &self.stall_segments
    }

    fn parts(&self, n_segments: usize) -> Vec<Range<usize>> {
        let mut bounds = vec![0];
        bounds.extend(&self.stall_segments);
        bounds.push(n_segments);
        bounds.windows(2).map(|w| w[0]..w[1]).collect()
    }
}

/// Segments at which the first `k` stalls happen when the lowest level is
/// streamed at full capacity. Each stall cuts before the segment that ran
/// dry.
pub fn detect_stall_segments(
    trace: &CapacityTrace,
    spec: &VideoSpec,
    config: &SimConfig,
    k: usize,
) -> Result<Vec<usize>> {
    let sim = SessionSim::with_config(trace, spec, *config);
    let tx = sim.transmit(0.0, &QualityPlan::uniform(spec.n_segments(), 0))?;
    let traj = sim.trajectory(&tx);
    let s = spec.frames_per_segment() as f64;
    let mut cuts: Vec<usize> = Vec::new();
    for event in traj.stall_events.iter().take(k) {
        let frame = traj.watched[event.checkpoint];
        let seg = ((frame / s) + 1e-9).floor() as usize;
        let seg = seg.clamp(1, spec.n_segments() - 1);
        if cuts.last().is_none_or(|&last| seg > last) {
            cuts.push(seg);
        }
    }
    Ok(cuts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartPlan {
    pub segments: Range<usize>,
    /// First slot of the trace the part may use.
    pub start_slot: usize,
    pub result: PlanResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StalledPlan {
    pub parts: Vec<PartPlan>,
    /// Concatenated per-segment levels.
    pub plan: QualityPlan,
    /// Whole-session trajectories and scores, stalls included.
    pub outcome: SessionOutcome,
}

pub fn plan_with_stalls(
    trace: &CapacityTrace,
    spec: &VideoSpec,
    config: &SimConfig,
    a: TradeoffParam,
    policy: &StallPolicy,
    mode: ThresholdMode,
) -> Result<StalledPlan> {
    let dt = trace.slot_duration();
    let n = spec.n_segments();
    let mut parts = Vec::with_capacity(policy.k() + 1);
    let mut start_slot = 0usize;
    for (index, segments) in policy.parts(n).into_iter().enumerate() {
        if start_slot >= trace.len() {
            return Err(Error::PartInfeasible { part: index });
        }
        let part_trace = trace.tail(start_slot);
        let rest_spec = spec.part(segments.start..n)?;
        let rest = SessionSim::with_config(&part_trace, &rest_spec, *config);
        let planned = match plan_session(&rest, a, mode) {
            Ok(r) => r,
            // the rest cannot play through, so plan this part on its own
            Err(Error::NoFeasibleSession) if segments.end < n => {
                let part_spec = spec.part(segments.clone())?;
                let alone = SessionSim::with_config(&part_trace, &part_spec, *config);
                match plan_session(&alone, a, mode) {
                    Ok(r) => r,
                    Err(Error::NoFeasibleSession) => {
                        return Err(Error::PartInfeasible { part: index })
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(Error::NoFeasibleSession) => return Err(Error::PartInfeasible { part: index }),
            Err(e) => return Err(e),
        };
        let result = if segments.end == n {
            planned
        } else {
            // the kept prefix plays exactly as it did inside the longer plan
            let part_spec = spec.part(segments.clone())?;
            let prefix = QualityPlan::new(planned.plan.levels()[..segments.len()].to_vec());
            let sim = SessionSim::with_config(&part_trace, &part_spec, *config);
            PlanResult {
                outcome: sim.evaluate(planned.alpha_th, &prefix, a)?,
                alpha_th: planned.alpha_th,
                plan: prefix,
                candidates_evaluated: planned.candidates_evaluated,
            }
        };
        let end = start_slot as f64 * dt + result.outcome.session_length;
        parts.push(PartPlan {
            segments,
            start_slot,
            result,
        });
        start_slot = (end / dt - 1e-9).ceil() as usize;
    }
    let plan = QualityPlan::new(
        parts
            .iter()
            .flat_map(|p| p.result.plan.levels().iter().copied())
            .collect(),
    );
    let outcome = combine(trace, spec, a, &parts, &plan)?;
    Ok(StalledPlan {
        parts,
        plan,
        outcome,
    })
}

fn combine(
    trace: &CapacityTrace,
    spec: &VideoSpec,
    a: TradeoffParam,
    parts: &[PartPlan],
    plan: &QualityPlan,
) -> Result<SessionOutcome> {
    let dt = trace.slot_duration();
    let h = parts[0].result.outcome.checkpoint_interval;
    let per_slot = (dt / h).round() as usize;

    let mut bits = vec![0.0; trace.len()];
    let mut arrived = Vec::new();
    let mut watched = Vec::new();
    let mut stall_events = Vec::new();
    let mut frames_before = 0.0;
    let mut previous_end: Option<f64> = None;
    let mut session_length = 0.0;
    for part in parts {
        let o = &part.result.outcome;
        let offset = part.start_slot * per_slot;
        for (k, b) in o.bits_used_per_slot.iter().enumerate() {
            bits[part.start_slot + k] += b;
        }
        // hold the previous part's final values until this part starts
        let hold_u = arrived.last().copied().unwrap_or(0.0);
        let hold_l = watched.last().copied().unwrap_or(0.0);
        arrived.resize(offset, hold_u);
        watched.resize(offset, hold_l);
        arrived.extend(o.arrived_frames.iter().map(|u| u + frames_before));
        watched.extend(o.watched_frames.iter().map(|l| l + frames_before));

        let start_time = part.start_slot as f64 * dt;
        let playback_start = start_time + o.startup_slot as f64 * o.checkpoint_interval;
        if let Some(prev_end) = previous_end {
            stall_events.push(StallEvent {
                checkpoint: (prev_end / h - 1e-9).ceil() as usize,
                duration: playback_start - prev_end,
            });
        }
        let end = start_time + o.session_length;
        previous_end = Some(end);
        session_length = end;
        frames_before += part_frames(spec, &part.segments);
    }

    let utilization = compute_utilization(trace, &bits, session_length)?;
    let quality = compute_quality(spec, plan)?;
    Ok(SessionOutcome {
        arrived_frames: arrived,
        watched_frames: watched,
        checkpoint_interval: h,
        startup_slot: parts[0].result.outcome.startup_slot,
        stall_events,
        bits_used_per_slot: bits,
        completed: true,
        session_length,
        utilization,
        quality,
        cost: compute_cost(utilization, quality, a),
    })
}

fn part_frames(spec: &VideoSpec, segments: &Range<usize>) -> f64 {
    (segments.len() as u64 * spec.frames_per_segment() as u64) as f64
}

/// One row of a single-stall position scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StallScanRow {
    pub stall_segment: usize,
    /// Slot where the resumed part starts transmitting, if both parts work.
    pub stall_slot: Option<usize>,
    pub cost_before: f64,
    pub cost_after: Option<f64>,
}

/// Forces one stall before each of `positions` (all segments `1..N` when
/// `None`) and reports the resulting cost next to the stall-free one. A
/// position whose parts cannot be planned yields `cost_after = None`.
pub fn scan_stall_positions(
    trace: &CapacityTrace,
    spec: &VideoSpec,
    config: &SimConfig,
    a: TradeoffParam,
    mode: ThresholdMode,
    positions: Option<&[usize]>,
) -> Result<Vec<StallScanRow>> {
    let sim = SessionSim::with_config(trace, spec, *config);
    let before = sweep_thresholds(&sim, mode)?.select(a).outcome.cost;
    let all: Vec<usize> = (1..spec.n_segments()).collect();
    let positions = positions.unwrap_or(&all);
    positions
        .iter()
        .map(|&seg| {
            let policy = StallPolicy::new(vec![seg], spec.n_segments())?;
            let row = match plan_with_stalls(trace, spec, config, a, &policy, mode) {
                Ok(p) => StallScanRow {
                    stall_segment: seg,
                    stall_slot: Some(p.parts[1].start_slot),
                    cost_before: before,
                    cost_after: Some(p.outcome.cost),
                },
                Err(Error::PartInfeasible { .. }) => StallScanRow {
                    stall_segment: seg,
                    stall_slot: None,
                    cost_before: before,
                    cost_after: None,
                },
                Err(e) => return Err(e),
            };
            Ok(row)
        })
        .collect()
}
