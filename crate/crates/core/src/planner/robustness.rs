//! Sensitivity of a plan to capacity prediction error.

use serde::Serialize;

use super::search::{plan_session, PlanResult, ThresholdMode};
use crate::error::{Error, Result};
use crate::model::{CapacityTrace, TradeoffParam, VideoSpec};
use crate::sim::{SessionSim, SimConfig};

/// `|(real - reference) / reference|`.
pub fn robustness_error(real: f64, reference: f64) -> Result<f64> {
    if reference == 0.0 || !reference.is_finite() || !real.is_finite() {
        return Err(Error::UndefinedRelativeError);
    }
    Ok(((real - reference) / reference).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub realization: usize,
    pub utilization: f64,
    pub quality: f64,
    pub error_utilization: Option<f64>,
    pub error_quality: Option<f64>,
    /// The reference plan stalled or did not finish on this realization.
    pub flagged: bool,
    pub stalls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub reference: PlanResult,
    pub rows: Vec<RobustnessRow>,
    pub mean_error_utilization: Option<f64>,
    pub mean_error_quality: Option<f64>,
}

/// Plans on `reference` (normally the mean of the realizations), replays the
/// chosen threshold and levels on every realization, and compares `σ` and `ρ`.
pub fn evaluate_robustness(
    reference: &CapacityTrace,
    realizations: &[CapacityTrace],
    spec: &VideoSpec,
    config: &SimConfig,
    a: TradeoffParam,
    mode: ThresholdMode,
) -> Result<RobustnessReport> {
    let sim = SessionSim::with_config(reference, spec, *config);
    let planned = plan_session(&sim, a, mode)?;
    let mut rows = Vec::with_capacity(realizations.len());
    for (index, trace) in realizations.iter().enumerate() {
        if trace.slot_duration() != reference.slot_duration() {
            return Err(Error::MismatchedSlotting(format!(
                "realization {index} uses {} s slots, reference uses {} s",
                trace.slot_duration(),
                reference.slot_duration()
            )));
        }
        let real = SessionSim::with_config(trace, spec, *config).simulate(
            planned.alpha_th,
            &planned.plan,
            a,
        )?;
        rows.push(RobustnessRow {
            realization: index,
            utilization: real.utilization,
            quality: real.quality,
            error_utilization: robustness_error(real.utilization, planned.outcome.utilization).ok(),
            error_quality: robustness_error(real.quality, planned.outcome.quality).ok(),
            flagged: !real.is_feasible(),
            stalls: real.stall_events.len(),
        });
    }
    let mean = |f: fn(&RobustnessRow) -> Option<f64>| {
        let values: Vec<f64> = rows.iter().filter_map(f).collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    };
    Ok(RobustnessReport {
        mean_error_utilization: mean(|r| r.error_utilization),
        mean_error_quality: mean(|r| r.error_quality),
        reference: planned,
        rows,
    })
}
