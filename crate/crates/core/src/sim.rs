//! Deterministic playback-session simulator.
//!
//! Frames go out strictly in video order. A slot carries bits at its
//! scheduled rate (or at full capacity while the start-up cache is still
//! filling), a frame that does not fit carries its remaining bits into the
//! next slot, and a slot never mixes two quality levels: it stops as soon as
//! the next frame belongs to a segment at another level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    compute_cost, compute_utilization, make_threshold_schedule, CapacityTrace, QualityPlan,
    SessionOutcome, StallEvent, ThresholdSchedule, TradeoffParam, VideoSpec,
};

/// Bit-level slack when deciding whether a frame completes inside a slot.
const EPS_BITS: f64 = 1e-6;
/// Frame-count slack in buffer comparisons.
const EPS_FRAMES: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Fill the start-up cache at full capacity, ignoring the threshold.
    pub prefetch_greedy: bool,
    /// Buffer checkpoints per slot; 1 checks at slot boundaries only.
    pub checkpoints_per_slot: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            prefetch_greedy: true,
            checkpoints_per_slot: 1,
        }
    }
}

/// When a frame's last bit arrived, in seconds from the start of the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameArrival {
    pub slot: usize,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transmission {
    pub bits_used_per_slot: Vec<f64>,
    pub arrivals: Vec<FrameArrival>,
    /// All frames arrived inside the window.
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub arrived: Vec<f64>,
    pub watched: Vec<f64>,
    pub checkpoint_interval: f64,
    pub startup: Option<usize>,
    pub stall_events: Vec<StallEvent>,
    /// Seconds from session start until the last frame is watched, when
    /// playback finishes; otherwise the time of the last checkpoint.
    pub elapsed: f64,
    pub finished: bool,
}

/// Resumable frame-by-frame transmitter. Cloning it forks the session state,
/// which the planners use to share work between trial plans.
///
/// Inside a slot the bits spent after `k` completed frames are always
/// recomputed as `k·f - p0` (`p0`: bits of the first frame sent in earlier
/// slots), so delivering frames one at a time or in batches gives identical
/// results.
#[derive(Debug, Clone)]
pub(crate) struct Transmitter<'a> {
    capacities: &'a [f64],
    rates: &'a [f64],
    slot_duration: f64,
    frame_bits: &'a [f64],
    prefetch_frames: u64,
    prefetch_greedy: bool,
    slot: usize,
    open: bool,
    rate: f64,
    budget: f64,
    slot_level: Option<usize>,
    carried: f64,
    completed_in_slot: u64,
    partial: f64,
    delivered: u64,
    bits_used: Option<Vec<f64>>,
}

impl<'a> Transmitter<'a> {
    pub(crate) fn new(
        trace: &'a CapacityTrace,
        schedule: &'a ThresholdSchedule,
        frame_bits: &'a [f64],
        prefetch_frames: u64,
        config: &SimConfig,
        record_bits: bool,
    ) -> Self {
        Self {
            capacities: trace.capacities(),
            rates: schedule.rates(),
            slot_duration: trace.slot_duration(),
            frame_bits,
            prefetch_frames,
            prefetch_greedy: config.prefetch_greedy,
            slot: 0,
            open: false,
            rate: 0.0,
            budget: 0.0,
            slot_level: None,
            carried: 0.0,
            completed_in_slot: 0,
            partial: 0.0,
            delivered: 0,
            bits_used: record_bits.then(|| vec![0.0; trace.len()]),
        }
    }

    fn spent(&self, completed: u64) -> f64 {
        match self.slot_level {
            Some(level) if completed > 0 => {
                completed as f64 * self.frame_bits[level] - self.carried
            }
            _ => 0.0,
        }
    }

    fn fits(&self, completed: u64, level: usize) -> bool {
        completed as f64 * self.frame_bits[level] - self.carried <= self.budget + EPS_BITS
    }

    fn open_slot(&mut self) -> bool {
        if self.slot >= self.capacities.len() {
            return false;
        }
        let greedy = self.prefetch_greedy && self.delivered < self.prefetch_frames;
        self.rate = if greedy {
            self.capacities[self.slot]
        } else {
            self.rates[self.slot]
        };
        self.budget = self.rate * self.slot_duration;
        self.slot_level = None;
        self.carried = self.partial;
        self.completed_in_slot = 0;
        self.open = true;
        true
    }

    fn close_slot(&mut self, used: f64) {
        if let Some(bits) = self.bits_used.as_mut() {
            bits[self.slot] = used.clamp(0.0, self.budget);
        }
        self.open = false;
        self.slot += 1;
    }

    /// Delivers up to `max` frames at `level` that all complete in one slot,
    /// and returns that slot and how many were delivered. `None` when the
    /// window runs out before the next frame completes.
    pub(crate) fn advance_batch(&mut self, level: usize, max: u64) -> Option<(usize, u64)> {
        loop {
            if !self.open && !self.open_slot() {
                return None;
            }
            if matches!(self.slot_level, Some(l) if l != level) {
                // frame boundary: nothing is carried across a level change
                self.close_slot(self.spent(self.completed_in_slot));
                continue;
            }
            let k = self.completed_in_slot;
            if self.fits(k + 1, level) {
                let f = self.frame_bits[level];
                let estimate = ((self.budget + EPS_BITS + self.carried) / f).floor() as u64;
                let mut last = estimate.clamp(k + 1, k + max);
                while last > k + 1 && !self.fits(last, level) {
                    last -= 1;
                }
                while last < k + max && self.fits(last + 1, level) {
                    last += 1;
                }
                let n = last - k;
                self.slot_level = Some(level);
                self.completed_in_slot = last;
                self.partial = 0.0;
                self.delivered += n;
                return Some((self.slot, n));
            }
            // the next frame spills into the following slot
            self.slot_level = Some(level);
            let left = (self.budget - self.spent(k)).max(0.0);
            self.partial = if k == 0 { self.carried + left } else { left };
            self.close_slot(self.budget);
        }
    }

    /// Sends the next frame at `level`. Returns `None` when the window runs
    /// out first.
    #[cfg(test)]
    pub(crate) fn push_frame(&mut self, level: usize) -> Option<FrameArrival> {
        let (slot, _) = self.advance_batch(level, 1)?;
        Some(FrameArrival {
            slot,
            time: self.completion_time(self.completed_in_slot),
        })
    }

    /// Time at which the `completed`-th frame of the open slot finished.
    fn completion_time(&self, completed: u64) -> f64 {
        let used = self.spent(completed).min(self.budget);
        self.slot as f64 * self.slot_duration + used / self.rate
    }

    pub(crate) fn delivered(&self) -> u64 {
        self.delivered
    }

    pub(crate) fn finish(mut self) -> Vec<f64> {
        if self.open {
            self.close_slot(self.spent(self.completed_in_slot));
        }
        self.bits_used.unwrap_or_default()
    }
}

/// Playback deadlines of a session that never pauses. A frame is late when
/// the trajectory would count it as arrived only after playback needs it, so
/// checking frames one by one as they arrive gives the same verdict as a full
/// trajectory, and stops at the first late frame.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Deadlines {
    per_slot: usize,
    inv_interval: f64,
    inv_frames_per_checkpoint: f64,
    prefetch: u64,
}

impl Deadlines {
    pub(crate) fn new(spec: &VideoSpec, slot_duration: f64, config: &SimConfig) -> Self {
        let per_slot = config.checkpoints_per_slot.max(1) as usize;
        let interval = slot_duration / per_slot as f64;
        Self {
            per_slot,
            inv_interval: 1.0 / interval,
            inv_frames_per_checkpoint: 1.0 / (spec.frame_rate() * interval),
            prefetch: spec.prefetch_frames(),
        }
    }

    /// First checkpoint at which the trajectory counts this frame as arrived.
    fn arrival_checkpoint(&self, a: FrameArrival) -> usize {
        let by_slot = (a.slot + 1) * self.per_slot;
        let by_time = (a.time * self.inv_interval - 1e-9).ceil().max(1.0) as usize;
        by_slot.min(by_time)
    }

    /// Frame `index`, counted at checkpoint `at`, misses playback that
    /// started at `startup`: it is due at `startup + floor(index / λh) + 1`.
    fn is_late(&self, startup: usize, index: u64, at: usize) -> bool {
        at > startup + 1
            && (at - startup - 1) as f64 > index as f64 * self.inv_frames_per_checkpoint + 1e-9
    }
}

/// A transmitter that tracks start-up and fails on the first late frame.
#[derive(Debug, Clone)]
pub(crate) struct CheckedTransmitter<'a> {
    tx: Transmitter<'a>,
    startup: Option<usize>,
}

impl<'a> CheckedTransmitter<'a> {
    pub(crate) fn new(tx: Transmitter<'a>) -> Self {
        Self { tx, startup: None }
    }

    /// Arrival of the frame that was the `nth` completion of the open slot.
    fn arrival(&self, slot: usize, nth: u64) -> FrameArrival {
        FrameArrival {
            slot,
            time: self.tx.completion_time(nth),
        }
    }

    /// False when a frame of the segment is late or never arrives.
    pub(crate) fn push_segment(&mut self, level: usize, frames: u32, rules: &Deadlines) -> bool {
        let mut remaining = frames as u64;
        while remaining > 0 {
            let first = self.tx.delivered();
            let Some((slot, n)) = self.tx.advance_batch(level, remaining) else {
                return false;
            };
            remaining -= n;
            // completion number within the slot of frame `first`
            let base = self.tx.completed_in_slot - n + 1;
            let mut from = first;
            if self.startup.is_none() {
                let cache_frame = rules.prefetch - 1;
                if cache_frame >= first + n {
                    continue;
                }
                let at = rules.arrival_checkpoint(self.arrival(slot, base + cache_frame - first));
                self.startup = Some(at);
                from = cache_frame + 1;
                if from >= first + n {
                    continue;
                }
            }
            let s = self.startup.unwrap_or_default();
            // lateness by the slot bound only shrinks with the frame index,
            // so the earliest frame of the batch decides unless it is late
            if !rules.is_late(s, from, (slot + 1) * rules.per_slot) {
                continue;
            }
            for index in from..first + n {
                let at = rules.arrival_checkpoint(self.arrival(slot, base + index - first));
                if rules.is_late(s, index, at) {
                    return false;
                }
            }
        }
        true
    }
}

/// Per-level frame cost `b_j / λ` in bits.
pub(crate) fn frame_bits(spec: &VideoSpec) -> Vec<f64> {
    (0..spec.n_levels()).map(|j| spec.frame_bits(j)).collect()
}

pub fn transmit_video(
    trace: &CapacityTrace,
    schedule: &ThresholdSchedule,
    spec: &VideoSpec,
    plan: &QualityPlan,
    config: &SimConfig,
) -> Result<Transmission> {
    spec.check_plan(plan)?;
    if schedule.rates().len() != trace.len() {
        return Err(Error::InvalidSchedule(format!(
            "schedule covers {} slots, trace has {}",
            schedule.rates().len(),
            trace.len()
        )));
    }
    let bits = frame_bits(spec);
    let mut tx = Transmitter::new(trace, schedule, &bits, spec.prefetch_frames(), config, true);
    let mut arrivals = Vec::with_capacity(spec.total_frames() as usize);
    let mut completed = true;
    'segments: for &level in plan.levels() {
        let mut remaining = spec.frames_per_segment() as u64;
        while remaining > 0 {
            let Some((slot, n)) = tx.advance_batch(level, remaining) else {
                completed = false;
                break 'segments;
            };
            remaining -= n;
            let last = tx.completed_in_slot;
            arrivals.extend((last + 1 - n..=last).map(|nth| FrameArrival {
                slot,
                time: tx.completion_time(nth),
            }));
        }
    }
    Ok(Transmission {
        bits_used_per_slot: tx.finish(),
        arrivals,
        completed,
    })
}

/// Buffer evolution at the checkpoints. Playback starts at the first
/// checkpoint holding `Q0` frames and then advances `λ` frames per second.
/// When it would overtake the arrivals it plays what is buffered and
/// freezes; it resumes once `min(Q0, remaining)` frames are buffered again.
pub fn playback_trajectory(
    arrivals: &[FrameArrival],
    spec: &VideoSpec,
    slot_duration: f64,
    n_slots: usize,
    config: &SimConfig,
) -> Trajectory {
    let per_slot = config.checkpoints_per_slot.max(1) as usize;
    let h = slot_duration / per_slot as f64;
    let lambda = spec.frame_rate();
    let step = lambda * h;
    let total = spec.total_frames() as f64;
    let q0 = spec.prefetch_frames() as f64;
    let all_arrived = arrivals.len() as u64 == spec.total_frames();
    let window_end = n_slots * per_slot;

    let mut arrived = vec![0.0];
    let mut watched = vec![0.0];
    let mut stall_events = Vec::new();
    let mut startup = None;
    let mut stalled: Option<(usize, f64)> = None;
    let mut next = 0usize;
    let mut watched_now = 0.0;
    let mut stall_time = 0.0;
    let mut j = 0usize;
    loop {
        j += 1;
        let t = j as f64 * h;
        while next < arrivals.len() {
            let a = arrivals[next];
            if (a.slot + 1) * per_slot <= j || a.time <= t + 1e-9 * h {
                next += 1;
            } else {
                break;
            }
        }
        let u = next as f64;
        match (startup, stalled) {
            (None, _) => {
                if u + EPS_FRAMES >= q0 {
                    startup = Some(j);
                }
            }
            (Some(_), None) => {
                let target = (watched_now + step).min(total);
                if target <= u + EPS_FRAMES {
                    watched_now = target;
                } else {
                    let emptied_at = (j - 1) as f64 * h + (u - watched_now) / lambda;
                    watched_now = u;
                    stalled = Some((j, emptied_at));
                }
            }
            (Some(_), Some((at, emptied_at))) => {
                let need = q0.min(total - watched_now);
                if u - watched_now + EPS_FRAMES >= need {
                    stall_events.push(StallEvent {
                        checkpoint: at,
                        duration: t - emptied_at,
                    });
                    stall_time += t - emptied_at;
                    stalled = None;
                }
            }
        }
        arrived.push(u);
        watched.push(watched_now);

        if watched_now + EPS_FRAMES >= total {
            let start = startup.unwrap_or(j) as f64 * h;
            return Trajectory {
                arrived,
                watched,
                checkpoint_interval: h,
                startup,
                stall_events,
                elapsed: start + total / lambda + stall_time,
                finished: true,
            };
        }
        if !all_arrived && j >= window_end {
            if let Some((at, emptied_at)) = stalled {
                stall_events.push(StallEvent {
                    checkpoint: at,
                    duration: t - emptied_at,
                });
            }
            return Trajectory {
                arrived,
                watched,
                checkpoint_interval: h,
                startup,
                stall_events,
                elapsed: t,
                finished: false,
            };
        }
    }
}

/// A trace and a video bound together with simulator settings.
#[derive(Debug, Clone)]
pub struct SessionSim<'a> {
    trace: &'a CapacityTrace,
    spec: &'a VideoSpec,
    config: SimConfig,
}

impl<'a> SessionSim<'a> {
    pub fn new(trace: &'a CapacityTrace, spec: &'a VideoSpec) -> Self {
        Self::with_config(trace, spec, SimConfig::default())
    }

    pub fn with_config(trace: &'a CapacityTrace, spec: &'a VideoSpec, config: SimConfig) -> Self {
        Self {
            trace,
            spec,
            config,
        }
    }

    pub fn trace(&self) -> &'a CapacityTrace {
        self.trace
    }

    pub fn spec(&self) -> &'a VideoSpec {
        self.spec
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn transmit(&self, alpha: f64, plan: &QualityPlan) -> Result<Transmission> {
        let schedule = make_threshold_schedule(self.trace, alpha)?;
        transmit_video(self.trace, &schedule, self.spec, plan, &self.config)
    }

    pub fn trajectory(&self, tx: &Transmission) -> Trajectory {
        playback_trajectory(
            &tx.arrivals,
            self.spec,
            self.trace.slot_duration(),
            self.trace.len(),
            &self.config,
        )
    }

    /// True when the plan stalls or does not finish inside the window.
    pub fn exist_violation(&self, alpha: f64, plan: &QualityPlan) -> Result<bool> {
        self.spec.check_plan(plan)?;
        let schedule = make_threshold_schedule(self.trace, alpha)?;
        let bits = frame_bits(self.spec);
        let mut run = self.checked_transmitter(&schedule, &bits);
        let rules = self.deadlines();
        let frames = self.spec.frames_per_segment();
        Ok(!plan
            .levels()
            .iter()
            .all(|&level| run.push_segment(level, frames, &rules)))
    }

    pub(crate) fn deadlines(&self) -> Deadlines {
        Deadlines::new(self.spec, self.trace.slot_duration(), &self.config)
    }

    pub(crate) fn checked_transmitter<'s>(
        &'s self,
        schedule: &'s ThresholdSchedule,
        frame_bits: &'s [f64],
    ) -> CheckedTransmitter<'s> {
        CheckedTransmitter::new(Transmitter::new(
            self.trace,
            schedule,
            frame_bits,
            self.spec.prefetch_frames(),
            &self.config,
            false,
        ))
    }

    /// Runs the session and scores it, stalls included. Quality counts
    /// delivered frames only, so an unfinished session scores lower.
    pub fn simulate(
        &self,
        alpha: f64,
        plan: &QualityPlan,
        a: TradeoffParam,
    ) -> Result<SessionOutcome> {
        let tx = self.transmit(alpha, plan)?;
        let traj = self.trajectory(&tx);
        let quality = delivered_quality(self.spec, plan, tx.arrivals.len() as u64);
        let utilization = compute_utilization(self.trace, &tx.bits_used_per_slot, traj.elapsed)?;
        Ok(SessionOutcome {
            arrived_frames: traj.arrived,
            watched_frames: traj.watched,
            checkpoint_interval: traj.checkpoint_interval,
            startup_slot: traj.startup.unwrap_or(0),
            stall_events: traj.stall_events,
            bits_used_per_slot: tx.bits_used_per_slot,
            completed: tx.completed && traj.finished,
            session_length: traj.elapsed,
            utilization,
            quality,
            cost: compute_cost(utilization, quality, a),
        })
    }

    /// Scores a plan that must play without stalling.
    pub fn evaluate(
        &self,
        alpha: f64,
        plan: &QualityPlan,
        a: TradeoffParam,
    ) -> Result<SessionOutcome> {
        let outcome = self.simulate(alpha, plan, a)?;
        if !outcome.completed {
            return Err(Error::InfeasiblePlan {
                alpha,
                reason: "video does not finish inside the window".into(),
            });
        }
        if let Some(first) = outcome.stall_events.first() {
            return Err(Error::InfeasiblePlan {
                alpha,
                reason: format!(
                    "{} stall(s), first at checkpoint {}",
                    outcome.stall_events.len(),
                    first.checkpoint
                ),
            });
        }
        Ok(outcome)
    }
}

/// Weighted quality of the first `delivered` frames, normalised by the full
/// video length.
pub(crate) fn delivered_quality(spec: &VideoSpec, plan: &QualityPlan, delivered: u64) -> f64 {
    let s = spec.frames_per_segment() as u64;
    let mut left = delivered;
    let mut weighted = 0.0;
    for &level in plan.levels() {
        if left == 0 {
            break;
        }
        let n = left.min(s);
        weighted += n as f64 * spec.levels()[level].weight;
        left -= n;
    }
    weighted / spec.total_frames() as f64
}

/// `l(k)` of an uninterrupted playback that starts at `startup`.
pub fn nominal_watched(
    spec: &VideoSpec,
    startup: usize,
    checkpoint_interval: f64,
    k: usize,
) -> f64 {
    if k <= startup {
        return 0.0;
    }
    (spec.frame_rate() * checkpoint_interval * (k - startup) as f64).min(spec.total_frames() as f64)
}
