//! Spatial logs to time-slotted traces at a fixed driving speed.

use super::ingest::RawBandwidthLog;
use crate::error::{Error, Result};
use crate::model::CapacityTrace;

const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Great-circle distance in metres.
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Grid step equal to the distance covered in one slot.
pub fn temporal_mapping(
    log: &RawBandwidthLog,
    speed_kmph: f64,
    slot_duration: f64,
) -> Result<CapacityTrace> {
    temporal_mapping_with_grid(log, speed_kmph, slot_duration, None)
}

/// Bits received between two samples are spread evenly over the road
/// travelled between them, binned on a uniform distance grid, and the grid
/// is swept at `speed_kmph` into slots. Bits of the first sample sit at the
/// start of the route.
pub fn temporal_mapping_with_grid(
    log: &RawBandwidthLog,
    speed_kmph: f64,
    slot_duration: f64,
    grid_step_m: Option<f64>,
) -> Result<CapacityTrace> {
    if !(speed_kmph.is_finite() && speed_kmph > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "speed must be positive, got {speed_kmph}"
        )));
    }
    if !(slot_duration.is_finite() && slot_duration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "slot duration must be positive, got {slot_duration}"
        )));
    }
    if log.samples.is_empty() {
        return Err(Error::InvalidTrace("bandwidth log has no samples".into()));
    }
    let mut coords = Vec::with_capacity(log.samples.len());
    for s in &log.samples {
        match (s.latitude, s.longitude) {
            (Some(lat), Some(lon)) => coords.push((lat, lon)),
            _ => {
                return Err(Error::InvalidArgument(
                    "spatial mapping needs latitude and longitude on every sample".into(),
                ))
            }
        }
    }
    let speed = speed_kmph / 3.6;
    let step = grid_step_m.unwrap_or(speed * slot_duration);
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "grid step must be positive, got {step}"
        )));
    }

    let mut distance = vec![0.0; coords.len()];
    for i in 1..coords.len() {
        let (a, b) = (coords[i - 1], coords[i]);
        distance[i] = distance[i - 1] + haversine_m(a.0, a.1, b.0, b.1);
    }
    let route = *distance.last().unwrap();
    if route <= 0.0 {
        return Err(Error::StationaryLog);
    }

    let n_cells = cell_count(route, step);
    let mut cells = vec![0.0; n_cells];
    cells[0] += log.samples[0].bytes_received as f64 * 8.0;
    for i in 1..coords.len() {
        let bits = log.samples[i].bytes_received as f64 * 8.0;
        spread(&mut cells, step, distance[i - 1], distance[i], bits);
    }

    // cell c covers [c·step, (c+1)·step) in metres, i.e. a time span of
    // step/speed seconds
    let cell_time = step / speed;
    let n_slots = cell_count(route / speed, slot_duration);
    let mut slots = vec![0.0; n_slots];
    for (c, &bits) in cells.iter().enumerate() {
        spread(
            &mut slots,
            slot_duration,
            c as f64 * cell_time,
            (c + 1) as f64 * cell_time,
            bits,
        );
    }
    let capacities = slots.into_iter().map(|b| b / slot_duration).collect();
    CapacityTrace::new(slot_duration, capacities)
}

/// Slots the log by its own timestamps, for logs recorded standing still.
pub fn time_slotting(log: &RawBandwidthLog, slot_duration: f64) -> Result<CapacityTrace> {
    if !(slot_duration.is_finite() && slot_duration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "slot duration must be positive, got {slot_duration}"
        )));
    }
    let Some(first) = log.samples.first() else {
        return Err(Error::InvalidTrace("bandwidth log has no samples".into()));
    };
    let t0 = first.timestamp_ms / 1000.0;
    let span = log.samples.last().unwrap().timestamp_ms / 1000.0 - t0;
    let mut slots = vec![0.0; cell_count(span, slot_duration)];
    slots[0] += first.bytes_received as f64 * 8.0;
    for w in log.samples.windows(2) {
        let from = w[0].timestamp_ms / 1000.0 - t0;
        let to = w[1].timestamp_ms / 1000.0 - t0;
        spread(
            &mut slots,
            slot_duration,
            from,
            to,
            w[1].bytes_received as f64 * 8.0,
        );
    }
    let capacities = slots.into_iter().map(|b| b / slot_duration).collect();
    CapacityTrace::new(slot_duration, capacities)
}

fn cell_count(length: f64, step: f64) -> usize {
    ((length / step) - 1e-9).ceil().max(1.0) as usize
}

/// Adds `amount`, uniform over `[from, to)`, to bins of width `width`.
/// Mass past the last bin lands in it.
fn spread(bins: &mut [f64], width: f64, from: f64, to: f64, amount: f64) {
    let last = bins.len() - 1;
    let index = |x: f64| ((x / width).floor().max(0.0) as usize).min(last);
    if to - from <= 0.0 {
        bins[index(from)] += amount;
        return;
    }
    let density = amount / (to - from);
    let (first, final_bin) = (index(from), index(to));
    for (b, bin) in bins.iter_mut().enumerate().take(final_bin + 1).skip(first) {
        let lo = if b == first { from } else { b as f64 * width };
        let hi = if b == final_bin {
            to
        } else {
            (b + 1) as f64 * width
        };
        *bin += density * (hi - lo).max(0.0);
    }
}
