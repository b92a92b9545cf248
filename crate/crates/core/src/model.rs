//! Domain types and the closed-form utilization, quality and cost terms.
//!
//! Time is discrete: a [`CapacityTrace`] holds one average capacity per slot
//! and every integral over the session becomes a sum over slots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slotted future capacity window `c(t)`, in bits per second per slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityTrace {
    slot_duration: f64,
    capacities: Vec<f64>,
    origin_time: f64,
}

impl CapacityTrace {
    pub fn new(slot_duration: f64, capacities: Vec<f64>) -> Result<Self> {
        if !(slot_duration.is_finite() && slot_duration > 0.0) {
            return Err(Error::InvalidTrace(format!(
                "slot duration must be positive, got {slot_duration}"
            )));
        }
        if let Some((k, c)) = capacities
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.is_finite() && **c >= 0.0))
        {
            return Err(Error::InvalidTrace(format!(
                "slot {k} has capacity {c}; capacities must be finite and non-negative"
            )));
        }
        Ok(Self {
            slot_duration,
            capacities,
            origin_time: 0.0,
        })
    }

    pub fn with_origin(mut self, origin_time: f64) -> Self {
        self.origin_time = origin_time;
        self
    }

    pub fn slot_duration(&self) -> f64 {
        self.slot_duration
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    pub fn origin_time(&self) -> f64 {
        self.origin_time
    }

    pub fn len(&self) -> usize {
        self.capacities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.capacities.is_empty()
    }

    /// Window length `T_w` in seconds.
    pub fn window_duration(&self) -> f64 {
        self.slot_duration * self.capacities.len() as f64
    }

    /// Bits the slot can carry at full capacity.
    pub fn slot_volume(&self, slot: usize) -> f64 {
        self.capacities[slot] * self.slot_duration
    }

    pub fn total_volume(&self) -> f64 {
        self.capacities.iter().map(|c| c * self.slot_duration).sum()
    }

    pub fn min_capacity(&self) -> Option<f64> {
        self.capacities.iter().copied().reduce(f64::min)
    }

    pub fn max_capacity(&self) -> Option<f64> {
        self.capacities.iter().copied().reduce(f64::max)
    }

    pub fn mean_capacity(&self) -> Option<f64> {
        if self.is_empty() {
            None
        } else {
            Some(self.capacities.iter().sum::<f64>() / self.len() as f64)
        }
    }

    /// Slots from `start` onwards, with the origin moved accordingly.
    pub fn tail(&self, start: usize) -> CapacityTrace {
        let start = start.min(self.len());
        CapacityTrace {
            slot_duration: self.slot_duration,
            capacities: self.capacities[start..].to_vec(),
            origin_time: self.origin_time + start as f64 * self.slot_duration,
        }
    }

    /// Re-slots the trace with `factor` original slots per new slot, averaging
    /// capacity over each group. A trailing short group is averaged over the
    /// slots it has.
    pub fn coarsen(&self, factor: usize) -> Result<CapacityTrace> {
        if factor == 0 {
            return Err(Error::InvalidArgument(
                "coarsening factor must be >= 1".into(),
            ));
        }
        let capacities = self
            .capacities
            .chunks(factor)
            .map(|group| group.iter().sum::<f64>() / group.len() as f64)
            .collect();
        Ok(CapacityTrace {
            slot_duration: self.slot_duration * factor as f64,
            capacities,
            origin_time: self.origin_time,
        })
    }
}

/// One encoding level of the video.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub bitrate_bps: f64,
    pub weight: f64,
}

/// `N` segments of `S` frames each, encoded at `L` levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VideoSpecFields")]
pub struct VideoSpec {
    n_segments: usize,
    frames_per_segment: u32,
    frame_rate: f64,
    levels: Vec<Level>,
    prefetch_frames: u64,
}

#[derive(Deserialize)]
struct VideoSpecFields {
    n_segments: usize,
    frames_per_segment: u32,
    frame_rate: f64,
    levels: Vec<Level>,
    prefetch_frames: u64,
}

impl TryFrom<VideoSpecFields> for VideoSpec {
    type Error = Error;

    fn try_from(f: VideoSpecFields) -> Result<Self> {
        VideoSpec::new(
            f.n_segments,
            f.frames_per_segment,
            f.frame_rate,
            f.levels,
            f.prefetch_frames,
        )
    }
}

impl VideoSpec {
    pub fn new(
        n_segments: usize,
        frames_per_segment: u32,
        frame_rate: f64,
        levels: Vec<Level>,
        prefetch_frames: u64,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if n_segments == 0 || frames_per_segment == 0 {
            return bad("need at least one segment of at least one frame".into());
        }
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return bad(format!("frame rate must be positive, got {frame_rate}"));
        }
        if levels.is_empty() {
            return bad("need at least one quality level".into());
        }
        for (j, lv) in levels.iter().enumerate() {
            if !(lv.bitrate_bps.is_finite() && lv.bitrate_bps > 0.0) {
                return bad(format!("level {j}: bitrate must be positive"));
            }
            if !(lv.weight > 0.0 && lv.weight <= 1.0) {
                return bad(format!("level {j}: weight {} outside (0, 1]", lv.weight));
            }
        }
        for (j, pair) in levels.windows(2).enumerate() {
            if pair[0].bitrate_bps >= pair[1].bitrate_bps || pair[0].weight >= pair[1].weight {
                return bad(format!(
                    "levels {j} and {} are not strictly increasing in bitrate and weight",
                    j + 1
                ));
            }
        }
        let total = n_segments as u64 * frames_per_segment as u64;
        if prefetch_frames == 0 || prefetch_frames > total {
            return bad(format!(
                "prefetch must be between 1 and {total} frames, got {prefetch_frames}"
            ));
        }
        Ok(Self {
            n_segments,
            frames_per_segment,
            frame_rate,
            levels,
            prefetch_frames,
        })
    }

    /// Simulation defaults: 180 one-second segments at 30 fps, a 4 s start-up
    /// cache and five levels from 0.4 to 4.5 Mbps.
    pub fn reference() -> Self {
        let bitrates = [0.4e6, 0.75e6, 1.0e6, 2.5e6, 4.5e6];
        let weights = [0.09, 0.17, 0.22, 0.55, 1.0];
        let levels = bitrates
            .iter()
            .zip(weights)
            .map(|(&bitrate_bps, weight)| Level {
                bitrate_bps,
                weight,
            })
            .collect();
        Self::new(180, 30, 30.0, levels, 120).expect("reference spec is valid")
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    pub fn frames_per_segment(&self) -> u32 {
        self.frames_per_segment
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn prefetch_frames(&self) -> u64 {
        self.prefetch_frames
    }

    pub fn total_frames(&self) -> u64 {
        self.n_segments as u64 * self.frames_per_segment as u64
    }

    /// Bits needed to deliver one frame at `level` (`b_j / λ`).
    pub fn frame_bits(&self, level: usize) -> f64 {
        self.levels[level].bitrate_bps / self.frame_rate
    }

    /// Segments covered by the start-up cache; these are always sent at the
    /// lowest level.
    pub fn cache_segments(&self) -> usize {
        let s = self.frames_per_segment as u64;
        (self.prefetch_frames.div_ceil(s) as usize).min(self.n_segments)
    }

    /// Size of the whole video at the top level, `S_L`.
    pub fn top_level_size_bits(&self) -> f64 {
        self.frame_bits(self.n_levels() - 1) * self.total_frames() as f64
    }

    /// Playback length of the video in seconds.
    pub fn playback_duration(&self) -> f64 {
        self.total_frames() as f64 / self.frame_rate
    }

    /// The same video restricted to `segments`, with the prefetch capped to
    /// the part's length.
    pub fn part(&self, segments: std::ops::Range<usize>) -> Result<VideoSpec> {
        if segments.start >= segments.end || segments.end > self.n_segments {
            return Err(Error::InvalidArgument(format!(
                "segment range {segments:?} is empty or out of 0..{}",
                self.n_segments
            )));
        }
        let n = segments.end - segments.start;
        let q0 = self
            .prefetch_frames
            .min(n as u64 * self.frames_per_segment as u64);
        VideoSpec::new(
            n,
            self.frames_per_segment,
            self.frame_rate,
            self.levels.clone(),
            q0,
        )
    }

    /// Checks length and level range of a plan against this video.
    pub fn check_plan(&self, plan: &QualityPlan) -> Result<()> {
        if plan.len() != self.n_segments {
            return Err(Error::InvalidPlan(format!(
                "plan has {} segments, video has {}",
                plan.len(),
                self.n_segments
            )));
        }
        if let Some((i, l)) = plan
            .levels()
            .iter()
            .enumerate()
            .find(|(_, l)| **l >= self.n_levels())
        {
            return Err(Error::InvalidPlan(format!(
                "segment {i} uses level {l}, only {} levels exist",
                self.n_levels()
            )));
        }
        Ok(())
    }
}

/// `w_j = b_j / b_L`; reproduces the reference weight table up to rounding.
pub fn weights_relative_to_top(bitrates: &[f64]) -> Vec<f64> {
    let top = bitrates.last().copied().unwrap_or(1.0);
    bitrates.iter().map(|b| b / top).collect()
}

/// `w_j = b_j / Σ b`.
pub fn weights_relative_to_sum(bitrates: &[f64]) -> Vec<f64> {
    let sum: f64 = bitrates.iter().sum();
    bitrates.iter().map(|b| b / sum).collect()
}

/// Per-segment quality assignment. Levels are zero-based indices into
/// [`VideoSpec::levels`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QualityPlan {
    levels: Vec<usize>,
}

impl QualityPlan {
    pub fn new(levels: Vec<usize>) -> Self {
        Self { levels }
    }

    pub fn uniform(n_segments: usize, level: usize) -> Self {
        Self {
            levels: vec![level; n_segments],
        }
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn levels_mut(&mut self) -> &mut [usize] {
        &mut self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Lowest level on the first `cache` segments and non-decreasing after.
    pub fn is_ascending_after_cache(&self, cache: usize) -> bool {
        let cache = cache.min(self.levels.len());
        self.levels[..cache].iter().all(|&l| l == 0)
            && self.levels[cache..].windows(2).all(|w| w[0] <= w[1])
    }

    /// Number of segments at each level.
    pub fn level_counts(&self, n_levels: usize) -> Vec<usize> {
        let mut counts = vec![0; n_levels];
        for &l in &self.levels {
            counts[l] += 1;
        }
        counts
    }

    /// Index of the first segment at `level`, if any.
    pub fn first_segment_at(&self, level: usize) -> Option<usize> {
        self.levels.iter().position(|&l| l == level)
    }
}

/// Definition-1 threshold schedule: send at full capacity when `c_k >= α`,
/// stay idle otherwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdSchedule {
    alpha: f64,
    rates: Vec<f64>,
}

impl ThresholdSchedule {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn is_active(&self, slot: usize) -> bool {
        self.rates[slot] > 0.0
    }

    pub fn active_slots(&self) -> Vec<bool> {
        self.rates.iter().map(|&r| r > 0.0).collect()
    }
}

pub fn make_threshold_schedule(trace: &CapacityTrace, alpha: f64) -> Result<ThresholdSchedule> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "threshold must be non-negative, got {alpha}"
        )));
    }
    let rates = trace
        .capacities()
        .iter()
        .map(|&c| if c >= alpha { c } else { 0.0 })
        .collect();
    Ok(ThresholdSchedule { alpha, rates })
}

/// Non-negative trade-off weight `a` between utilization and quality.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct TradeoffParam(f64);

impl TradeoffParam {
    pub fn new(a: f64) -> Result<Self> {
        if a.is_finite() && a >= 0.0 {
            Ok(Self(a))
        } else {
            Err(Error::InvalidArgument(format!(
                "trade-off parameter must be finite and >= 0, got {a}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StallEvent {
    /// Checkpoint at which playback froze.
    pub checkpoint: usize,
    /// Seconds until playback resumed (or until the trajectory ended).
    pub duration: f64,
}

/// Everything observed about one simulated session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionOutcome {
    /// `u(k)`: frames arrived by checkpoint `k` (index 0 is the session start).
    pub arrived_frames: Vec<f64>,
    /// `l(k)`: frames watched by checkpoint `k`.
    pub watched_frames: Vec<f64>,
    /// Seconds between consecutive checkpoints.
    pub checkpoint_interval: f64,
    pub startup_slot: usize,
    pub stall_events: Vec<StallEvent>,
    pub bits_used_per_slot: Vec<f64>,
    pub completed: bool,
    /// Session length `T` in seconds: start-up, playback and stall time.
    pub session_length: f64,
    pub utilization: f64,
    pub quality: f64,
    pub cost: f64,
}

impl SessionOutcome {
    pub fn is_feasible(&self) -> bool {
        self.completed && self.stall_events.is_empty()
    }
}

/// Time-averaged share of capacity used over a session of `session_length`
/// seconds.
pub fn compute_utilization(
    trace: &CapacityTrace,
    bits_used_per_slot: &[f64],
    session_length: f64,
) -> Result<f64> {
    if session_length.is_nan() || session_length <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "session length must be positive, got {session_length}"
        )));
    }
    if bits_used_per_slot.len() > trace.len() {
        return Err(Error::InvalidSchedule(format!(
            "{} slots of usage for a {}-slot trace",
            bits_used_per_slot.len(),
            trace.len()
        )));
    }
    let mut used_time = 0.0;
    for (k, &bits) in bits_used_per_slot.iter().enumerate() {
        if bits.is_nan() || bits < 0.0 {
            return Err(Error::InvalidSchedule(format!("slot {k} uses {bits} bits")));
        }
        if bits == 0.0 {
            continue;
        }
        let volume = trace.slot_volume(k);
        if volume == 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "slot {k} carries {bits} bits but has zero capacity"
            )));
        }
        if bits > volume * (1.0 + 1e-9) {
            return Err(Error::InvalidSchedule(format!(
                "slot {k} carries {bits} bits, capacity is {volume}"
            )));
        }
        used_time += bits / volume * trace.slot_duration();
    }
    Ok(used_time / session_length)
}

/// Weighted share of frames at each level. Because a frame at level `j`
/// costs `b_j / λ` bits, this equals the bit-weighted form normalised by the
/// top-level size.
pub fn compute_quality(spec: &VideoSpec, plan: &QualityPlan) -> Result<f64> {
    spec.check_plan(plan)?;
    let counts = plan.level_counts(spec.n_levels());
    let weighted: f64 = counts
        .iter()
        .zip(spec.levels())
        .map(|(&n, lv)| n as f64 * lv.weight)
        .sum();
    Ok(weighted / spec.n_segments() as f64)
}

pub fn compute_cost(utilization: f64, quality: f64, a: TradeoffParam) -> f64 {
    utilization - a.value() * quality
}
