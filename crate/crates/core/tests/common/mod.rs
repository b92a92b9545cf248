//! Instance generators and a straight-line reference simulator shared by
//! the integration tests.

#![allow(dead_code)]

use lookahead_abr::traces::{generate_synthetic, SyntheticTraceConfig};
use lookahead_abr::{CapacityTrace, Level, QualityPlan, VideoSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn levels_from_bitrates(bitrates: &[f64]) -> Vec<Level> {
    let top = *bitrates.last().unwrap();
    bitrates
        .iter()
        .map(|&b| Level {
            bitrate_bps: b,
            weight: b / top,
        })
        .collect()
}

/// A random session small enough for exhaustive checks: 3-8 one-second
/// segments of 2 frames, 1-3 levels, one segment of cache, 12 slots.
pub fn small_instance(seed: u64) -> (VideoSpec, CapacityTrace) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=8);
    let l = rng.gen_range(1..=3);
    let mut bitrates = vec![1.0e6];
    for _ in 1..l {
        let last = *bitrates.last().unwrap();
        bitrates.push(last * rng.gen_range(1.3..2.5));
    }
    let top = *bitrates.last().unwrap();
    let spec = VideoSpec::new(n, 2, 2.0, levels_from_bitrates(&bitrates), 2).unwrap();
    let capacities = (0..12).map(|_| rng.gen_range(0.5..1.3) * top).collect();
    (spec, CapacityTrace::new(1.0, capacities).unwrap())
}

/// Anything goes within small bounds: odd frame rates, half-second slots,
/// idle slots, caches of any size.
pub fn wild_instance(seed: u64) -> (VideoSpec, CapacityTrace) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=8);
    let s = rng.gen_range(1..=4u32);
    let fps = [1.0, 2.0, 3.0, 4.0][rng.gen_range(0..4)];
    let l = rng.gen_range(1..=4);
    let mut bitrates = vec![rng.gen_range(0.5..2.0)];
    for _ in 1..l {
        let last = *bitrates.last().unwrap();
        bitrates.push(last * rng.gen_range(1.1..3.0));
    }
    let total = n as u64 * s as u64;
    let q0 = rng.gen_range(1..=total);
    let spec = VideoSpec::new(n, s, fps, levels_from_bitrates(&bitrates), q0).unwrap();
    let dt = [0.5, 1.0][rng.gen_range(0..2)];
    let playback = total as f64 / fps;
    let slots = (playback / dt).ceil() as usize + rng.gen_range(1..=10);
    let top = *bitrates.last().unwrap();
    let capacities = (0..slots)
        .map(|_| {
            if rng.gen_bool(0.15) {
                0.0
            } else {
                rng.gen_range(0.2..1.5) * top
            }
        })
        .collect();
    (spec, CapacityTrace::new(dt, capacities).unwrap())
}

/// The simulation defaults with a seeded 2 Mbps synthetic trace.
pub fn table_one_instance(seed: u64) -> (VideoSpec, CapacityTrace) {
    let trace = generate_synthetic(&SyntheticTraceConfig::reference(seed)).unwrap();
    (VideoSpec::reference(), trace)
}

pub fn random_plan(spec: &VideoSpec, seed: u64) -> QualityPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    QualityPlan::new(
        (0..spec.n_segments())
            .map(|_| rng.gen_range(0..spec.n_levels()))
            .collect(),
    )
}

pub struct ReferenceRun {
    /// Slot in which each delivered frame completed.
    pub arrival_slot: Vec<usize>,
    pub bits_per_slot: Vec<f64>,
    pub completed: bool,
}

/// Frame-by-frame transmission written as plainly as possible: a slot sends
/// at full capacity while fewer than `Q0` frames are in, otherwise at
/// capacity if it reaches `alpha`; it never mixes levels and carries an
/// unfinished frame into the next slot.
pub fn reference_transmit(
    trace: &CapacityTrace,
    spec: &VideoSpec,
    plan: &QualityPlan,
    alpha: f64,
) -> ReferenceRun {
    let frame_levels: Vec<usize> = plan
        .levels()
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l, spec.frames_per_segment() as usize))
        .collect();
    let mut arrival_slot = Vec::new();
    let mut bits_per_slot = vec![0.0; trace.len()];
    let mut next = 0usize;
    let mut sent_of_next = 0.0;
    for (k, &c) in trace.capacities().iter().enumerate() {
        if next == frame_levels.len() {
            break;
        }
        let greedy = (next as u64) < spec.prefetch_frames();
        let rate = if greedy || c >= alpha { c } else { 0.0 };
        let mut budget = rate * trace.slot_duration();
        let slot_level = frame_levels[next];
        while next < frame_levels.len() && frame_levels[next] == slot_level && budget > 1e-6 {
            let need = spec.frame_bits(slot_level) - sent_of_next;
            if need <= budget + 1e-6 {
                budget -= need;
                bits_per_slot[k] += need;
                sent_of_next = 0.0;
                arrival_slot.push(k);
                next += 1;
            } else {
                sent_of_next += budget;
                bits_per_slot[k] += budget;
                budget = 0.0;
            }
        }
    }
    ReferenceRun {
        completed: next == frame_levels.len(),
        arrival_slot,
        bits_per_slot,
    }
}

/// True when the session does not finish or playback would overtake the
/// arrivals at some slot boundary.
pub fn reference_violation(
    trace: &CapacityTrace,
    spec: &VideoSpec,
    plan: &QualityPlan,
    alpha: f64,
) -> bool {
    let run = reference_transmit(trace, spec, plan, alpha);
    if !run.completed {
        return true;
    }
    let arrived_by =
        |boundary: usize| run.arrival_slot.iter().filter(|&&s| s < boundary).count() as f64;
    let q0 = spec.prefetch_frames() as f64;
    let total = spec.total_frames() as f64;
    let per_slot = spec.frame_rate() * trace.slot_duration();
    let startup = (1..=trace.len())
        .find(|&b| arrived_by(b) >= q0)
        .expect("a completed session fills its cache");
    let mut boundary = startup;
    loop {
        boundary += 1;
        let due = (per_slot * (boundary - startup) as f64).min(total);
        if due > arrived_by(boundary) + 1e-9 {
            return true;
        }
        if due >= total {
            return false;
        }
    }
}
