//! Experiment configuration: a JSON file with defaults for every run,
//! overridden field by field from the command line.

use std::path::{Path, PathBuf};

use lookahead_abr::traces::{generate_synthetic, load_trace, SyntheticTraceConfig};
use lookahead_abr::{CapacityTrace, ThresholdMode, VideoSpec};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    Synthetic(SyntheticTraceConfig),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub video: VideoSpec,
    pub trace: TraceSource,
    /// Slot duration the planner works on. Traces with shorter slots are
    /// coarsened to it.
    pub slot_duration_s: f64,
    pub a: Vec<f64>,
    pub threshold: ThresholdMode,
    /// Data quantum used when `--mode invest` is given without `--quantum`.
    pub quantum_bits: f64,
    pub sampling_periods_s: Vec<f64>,
    pub quanta_bits: Vec<f64>,
    /// Seeded realizations drawn by `robustness`.
    pub realizations: usize,
    /// Seeded traces averaged over by `bench`.
    pub bench_traces: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            video: VideoSpec::reference(),
            trace: TraceSource::Synthetic(SyntheticTraceConfig::reference(0)),
            slot_duration_s: 1.0,
            a: vec![4.5],
            threshold: ThresholdMode::Optimal,
            quantum_bits: 2e6,
            sampling_periods_s: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            quanta_bits: vec![1e6, 2e6, 3e6, 4e6, 5e6],
            realizations: 20,
            bench_traces: 100,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if let Some(bad) = self.a.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Failure::Config(format!(
                "a must be finite and >= 0, got {bad}"
            )));
        }
        if !(self.slot_duration_s.is_finite() && self.slot_duration_s > 0.0) {
            return Err(Failure::Config(format!(
                "slot duration must be positive, got {}",
                self.slot_duration_s
            )));
        }
        if let TraceSource::File(path) = &self.trace {
            if !path.is_file() {
                return Err(Failure::Io(format!(
                    "trace file {} does not exist",
                    path.display()
                )));
            }
        }
        if let ThresholdMode::Invest { quantum_bits } = self.threshold {
            positive("quantum", quantum_bits)?;
        }
        for &p in &self.sampling_periods_s {
            positive("sampling period", p)?;
        }
        for &q in &self.quanta_bits {
            positive("quantum", q)?;
        }
        Ok(())
    }

    /// The configured trace before any re-slotting.
    pub fn raw_trace(&self) -> Result<CapacityTrace, Failure> {
        match &self.trace {
            TraceSource::Synthetic(c) => Ok(generate_synthetic(c)?),
            TraceSource::File(path) => Ok(load_trace(path)?),
        }
    }

    /// Synthetic realization `index`: the configured generator with its seed
    /// shifted by `index`. File sources have no realizations.
    pub fn synthetic_realization(&self, index: usize) -> Result<CapacityTrace, Failure> {
        match &self.trace {
            TraceSource::Synthetic(c) => {
                let mut c = *c;
                c.seed = c.seed.wrapping_add(index as u64);
                Ok(generate_synthetic(&c)?)
            }
            TraceSource::File(_) => Err(Failure::Config(
                "seeded realizations need a synthetic trace source".into(),
            )),
        }
    }

    pub fn trace(&self) -> Result<CapacityTrace, Failure> {
        reslot(&self.raw_trace()?, self.slot_duration_s)
    }
}

fn positive(what: &str, x: f64) -> Result<(), Failure> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Failure::Config(format!("{what} must be positive, got {x}")))
    }
}

/// Coarsens `trace` to slots of `slot_duration` seconds, which must be a
/// whole multiple of the trace's own slot duration.
pub fn reslot(trace: &CapacityTrace, slot_duration: f64) -> Result<CapacityTrace, Failure> {
    let ratio = slot_duration / trace.slot_duration();
    let factor = ratio.round();
    if factor < 1.0 || (ratio - factor).abs() > 1e-9 * ratio {
        return Err(Failure::Config(format!(
            "slot duration {slot_duration} s is not a whole multiple of the trace's {} s slots",
            trace.slot_duration()
        )));
    }
    if factor == 1.0 {
        return Ok(trace.clone());
    }
    Ok(trace.coarsen(factor as usize)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let c = ExperimentConfig::default();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), c);
        c.validate().unwrap();
    }

    #[test]
    fn default_video_is_the_reference_table() {
        let v = ExperimentConfig::default().video;
        assert_eq!(v.n_segments(), 180);
        assert_eq!(v.prefetch_frames(), 120);
        let weights: Vec<f64> = v.levels().iter().map(|l| l.weight).collect();
        assert_eq!(weights, [0.09, 0.17, 0.22, 0.55, 1.0]);
    }

    #[test]
    fn negative_weight_is_rejected() {
        let c = ExperimentConfig {
            a: vec![1.0, -0.5],
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Failure::Config(_))));
    }

    #[test]
    fn reslot_needs_whole_multiples() {
        let t = CapacityTrace::new(1.0, vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        assert_eq!(reslot(&t, 2.0).unwrap().capacities(), &[2.0, 6.0]);
        assert_eq!(reslot(&t, 1.0).unwrap(), t);
        assert!(reslot(&t, 1.5).is_err());
        assert!(reslot(&t, 0.5).is_err());
    }
}
