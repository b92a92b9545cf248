//! Threshold candidates for the outer search.

use crate::error::{Error, Result};
use crate::model::CapacityTrace;

/// Every distinct capacity value, ascending. The smallest one is the
/// benchmark threshold (full greedy transmission).
pub fn optimal_threshold_candidates(trace: &CapacityTrace) -> Vec<f64> {
    let mut values = trace.capacities().to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}

/// Variable-step threshold: sort the slots by capacity, accumulate their
/// volumes and return the capacity of the last slot whose running volume
/// stays within `step * quantum_bits`. When even the smallest slot exceeds
/// the budget the smallest capacity is returned.
pub fn invest_threshold(trace: &CapacityTrace, step: usize, quantum_bits: f64) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::InvalidArgument("empty capacity trace".into()));
    }
    if step == 0 {
        return Err(Error::InvalidArgument("step index starts at 1".into()));
    }
    if !(quantum_bits.is_finite() && quantum_bits > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "data quantum must be positive, got {quantum_bits}"
        )));
    }
    let mut sorted = trace.capacities().to_vec();
    sorted.sort_by(f64::total_cmp);
    let budget = step as f64 * quantum_bits;
    let dt = trace.slot_duration();
    let mut cumulative = 0.0;
    let mut chosen = sorted[0];
    for &c in &sorted {
        cumulative += c * dt;
        if cumulative <= budget * (1.0 + 1e-12) {
            chosen = c;
        } else {
            break;
        }
    }
    Ok(chosen)
}
