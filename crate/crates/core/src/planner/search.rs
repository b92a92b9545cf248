//! Outer threshold search: walk thresholds upward, assign ascending levels at
//! each one, and keep the cheapest feasible pair.

use serde::{Deserialize, Serialize};

use super::ascending::ascending_levels;
use super::thresholds::{invest_threshold, optimal_threshold_candidates};
use crate::error::{Error, Result};
use crate::model::{compute_cost, QualityPlan, SessionOutcome, TradeoffParam};
use crate::sim::SessionSim;

/// How thresholds are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Every distinct capacity value, ascending.
    Optimal,
    /// Variable steps that give up `quantum_bits` of capacity each.
    Invest { quantum_bits: f64 },
}

/// One feasible threshold with its ascending plan, scored without a
/// trade-off weight (the cost field is `σ`).
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub alpha: f64,
    pub plan: QualityPlan,
    pub outcome: SessionOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanResult {
    pub alpha_th: f64,
    pub plan: QualityPlan,
    pub outcome: SessionOutcome,
    pub candidates_evaluated: usize,
}

/// All feasible candidates of one threshold walk. Selecting for different
/// trade-off weights reuses the walk.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweep {
    pub candidates: Vec<Candidate>,
    /// Thresholds for which a level assignment was attempted, including the
    /// infeasible one that ended the walk.
    pub evaluated: usize,
}

impl ThresholdSweep {
    /// Minimises `σ - aρ`; on equal cost the smaller threshold wins.
    pub fn select(&self, a: TradeoffParam) -> PlanResult {
        let mut best: Option<(&Candidate, f64)> = None;
        for c in &self.candidates {
            let cost = compute_cost(c.outcome.utilization, c.outcome.quality, a);
            let better = match best {
                None => true,
                Some((b, b_cost)) => {
                    cost < b_cost || (cost == b_cost && (c.alpha, &c.plan) < (b.alpha, &b.plan))
                }
            };
            if better {
                best = Some((c, cost));
            }
        }
        let (c, cost) = best.expect("a sweep always holds the benchmark candidate");
        let mut outcome = c.outcome.clone();
        outcome.cost = cost;
        PlanResult {
            alpha_th: c.alpha,
            plan: c.plan.clone(),
            outcome,
            candidates_evaluated: self.evaluated,
        }
    }

    /// The lowest-threshold candidate: greedy transmission at `c_min`.
    pub fn benchmark(&self, a: TradeoffParam) -> PlanResult {
        let c = &self.candidates[0];
        let mut outcome = c.outcome.clone();
        outcome.cost = compute_cost(outcome.utilization, outcome.quality, a);
        PlanResult {
            alpha_th: c.alpha,
            plan: c.plan.clone(),
            outcome,
            candidates_evaluated: 1,
        }
    }
}

pub fn sweep_thresholds(sim: &SessionSim<'_>, mode: ThresholdMode) -> Result<ThresholdSweep> {
    let trace = sim.trace();
    let spec = sim.spec();
    let Some(c_min) = trace.min_capacity() else {
        return Err(Error::InvalidArgument("empty capacity trace".into()));
    };
    if sim.exist_violation(c_min, &QualityPlan::uniform(spec.n_segments(), 0))? {
        return Err(Error::NoFeasibleSession);
    }
    let zero = TradeoffParam::new(0.0)?;
    let mut sweep = ThresholdSweep {
        candidates: Vec::new(),
        evaluated: 0,
    };
    let mut attempt = |alpha: f64| -> Result<bool> {
        sweep.evaluated += 1;
        let assignment = ascending_levels(sim, alpha)?;
        if !assignment.feasible {
            return Ok(false);
        }
        let outcome = sim.evaluate(alpha, &assignment.plan, zero)?;
        sweep.candidates.push(Candidate {
            alpha,
            plan: assignment.plan,
            outcome,
        });
        Ok(true)
    };

    match mode {
        ThresholdMode::Optimal => {
            for alpha in optimal_threshold_candidates(trace) {
                if !attempt(alpha)? {
                    break;
                }
            }
        }
        ThresholdMode::Invest { quantum_bits } => {
            if !(quantum_bits.is_finite() && quantum_bits > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "data quantum must be positive, got {quantum_bits}"
                )));
            }
            let total = trace.total_volume();
            let mut last = c_min;
            if attempt(c_min)? {
                let mut step = 1usize;
                loop {
                    step += 1;
                    let alpha = invest_threshold(trace, step, quantum_bits)?;
                    // repeated thresholds are skipped, not re-run
                    if alpha > last {
                        if !attempt(alpha)? {
                            break;
                        }
                        last = alpha;
                    }
                    if step as f64 * quantum_bits >= total {
                        break;
                    }
                }
            }
        }
    }
    if sweep.candidates.is_empty() {
        return Err(Error::NoFeasibleSession);
    }
    Ok(sweep)
}

/// Threshold and ascending plan minimising `σ - aρ` without stalls.
pub fn plan_session(
    sim: &SessionSim<'_>,
    a: TradeoffParam,
    mode: ThresholdMode,
) -> Result<PlanResult> {
    Ok(sweep_thresholds(sim, mode)?.select(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CapacityTrace, Level, VideoSpec};

    fn spec() -> VideoSpec {
        let levels = [(1.0, 0.25), (2.0, 0.5), (4.0, 1.0)]
            .iter()
            .map(|&(b, w)| Level {
                bitrate_bps: b,
                weight: w,
            })
            .collect();
        VideoSpec::new(8, 2, 2.0, levels, 2).unwrap()
    }

    fn trace() -> CapacityTrace {
        CapacityTrace::new(
            1.0,
            vec![
                3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 6.0, 5.5, 3.5, 8.0, 9.5, 7.0, 2.5,
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_weight_takes_the_largest_feasible_threshold_or_cheaper() {
        let (t, s) = (trace(), spec());
        let sim = SessionSim::new(&t, &s);
        let sweep = sweep_thresholds(&sim, ThresholdMode::Optimal).unwrap();
        let r = sweep.select(TradeoffParam::new(0.0).unwrap());
        let min_sigma = sweep
            .candidates
            .iter()
            .map(|c| c.outcome.utilization)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.outcome.utilization, min_sigma);
        assert!(
            r.outcome.cost
                <= sweep
                    .benchmark(TradeoffParam::new(0.0).unwrap())
                    .outcome
                    .cost
        );
    }

    #[test]
    fn candidates_ascend_and_stop_at_first_infeasible() {
        let (t, s) = (trace(), spec());
        let sim = SessionSim::new(&t, &s);
        let sweep = sweep_thresholds(&sim, ThresholdMode::Optimal).unwrap();
        assert!(sweep.candidates.windows(2).all(|w| w[0].alpha < w[1].alpha));
        assert_eq!(sweep.candidates[0].alpha, 1.0);
        assert!(sweep.evaluated >= sweep.candidates.len());
    }

    #[test]
    fn infeasible_base_case_is_reported() {
        let s = spec();
        let t = CapacityTrace::new(1.0, vec![0.5; 10]).unwrap();
        let sim = SessionSim::new(&t, &s);
        assert!(matches!(
            plan_session(
                &sim,
                TradeoffParam::new(1.0).unwrap(),
                ThresholdMode::Optimal
            ),
            Err(Error::NoFeasibleSession)
        ));
    }

    #[test]
    fn invest_candidates_are_a_subset_of_optimal() {
        let (t, s) = (trace(), spec());
        let sim = SessionSim::new(&t, &s);
        let opt = sweep_thresholds(&sim, ThresholdMode::Optimal).unwrap();
        let inv = sweep_thresholds(&sim, ThresholdMode::Invest { quantum_bits: 6.0 }).unwrap();
        for c in &inv.candidates {
            assert!(opt
                .candidates
                .iter()
                .any(|o| o.alpha == c.alpha && o.plan == c.plan));
        }
        let a = TradeoffParam::new(1.0).unwrap();
        assert!(inv.select(a).outcome.cost >= opt.select(a).outcome.cost);
    }
}
