//! Seeded synthetic capacity traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CapacityTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTraceConfig {
    pub mean_bps: f64,
    pub window_slots: usize,
    pub slot_duration: f64,
    pub seed: u64,
    /// Half-width of the uniform draw as a fraction of the mean.
    pub spread_fraction: f64,
}

impl SyntheticTraceConfig {
    /// 190 one-second slots around 2 Mbps.
    pub fn reference(seed: u64) -> Self {
        Self {
            mean_bps: 2e6,
            window_slots: 190,
            slot_duration: 1.0,
            seed,
            spread_fraction: 0.5,
        }
    }
}

/// Capacities drawn i.i.d. uniform on `mean * [1 - spread, 1 + spread]`.
pub fn generate_synthetic(config: &SyntheticTraceConfig) -> Result<CapacityTrace> {
    if !(config.mean_bps.is_finite() && config.mean_bps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mean throughput must be positive, got {}",
            config.mean_bps
        )));
    }
    if !(0.0..1.0).contains(&config.spread_fraction) {
        return Err(Error::InvalidArgument(format!(
            "spread must lie in [0, 1), got {}",
            config.spread_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lo = config.mean_bps * (1.0 - config.spread_fraction);
    let hi = config.mean_bps * (1.0 + config.spread_fraction);
    let capacities = (0..config.window_slots)
        .map(|_| {
            if config.spread_fraction == 0.0 {
                config.mean_bps
            } else {
                rng.gen_range(lo..=hi)
            }
        })
        .collect();
    CapacityTrace::new(config.slot_duration, capacities)
}
