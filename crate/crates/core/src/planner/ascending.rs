//! Heuristic ascending quality assignment for a fixed threshold.
//!
//! Everything starts at the lowest level. Each higher level is then pushed as
//! far towards the start of the video as the buffer constraint allows, by
//! binary-searching the earliest segment from which the rest of the video
//! can be raised. Cache segments always stay at the lowest level.

use crate::error::Result;
use crate::model::{make_threshold_schedule, QualityPlan};
use crate::sim::{frame_bits, CheckedTransmitter, SessionSim};

#[derive(Debug, Clone, PartialEq)]
pub struct LevelAssignment {
    pub feasible: bool,
    pub plan: QualityPlan,
    /// Number of simulator runs spent.
    pub checks: usize,
}

pub fn ascending_levels(sim: &SessionSim<'_>, alpha: f64) -> Result<LevelAssignment> {
    let spec = sim.spec();
    let n = spec.n_segments();
    let cache = spec.cache_segments();
    let frames = spec.frames_per_segment();
    let schedule = make_threshold_schedule(sim.trace(), alpha)?;
    let bits = frame_bits(spec);
    let rules = sim.deadlines();

    // states[i] is the session after the first i segments of `plan`, so a
    // trial that only changes segments from `mid` on resumes at states[mid]
    let mut plan = QualityPlan::uniform(n, 0);
    let mut states: Vec<CheckedTransmitter<'_>> = Vec::with_capacity(n + 1);
    states.push(sim.checked_transmitter(&schedule, &bits));
    let mut checks = 1;
    let replay = |states: &mut Vec<CheckedTransmitter<'_>>, plan: &QualityPlan, from: usize| {
        states.truncate(from + 1);
        for &level in &plan.levels()[from..] {
            let mut next = states[states.len() - 1].clone();
            if !next.push_segment(level, frames, &rules) {
                return false;
            }
            states.push(next);
        }
        true
    };
    if !replay(&mut states, &plan, 0) {
        return Ok(LevelAssignment {
            feasible: false,
            plan,
            checks,
        });
    }

    for level in 1..spec.n_levels() {
        let Some(first_prev) = plan.first_segment_at(level - 1) else {
            break;
        };
        // `hi == n` is the current plan, already known to be feasible.
        let mut lo = first_prev.max(cache);
        let mut hi = n;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            checks += 1;
            let mut trial = states[mid].clone();
            if (mid..n).all(|_| trial.push_segment(level, frames, &rules)) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if hi == n {
            break;
        }
        plan.levels_mut()[hi..].fill(level);
        let ok = replay(&mut states, &plan, hi);
        debug_assert!(ok, "a plan that passed its trial must replay");
    }

    Ok(LevelAssignment {
        feasible: true,
        plan,
        checks,
    })
}
