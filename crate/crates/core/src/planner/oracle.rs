//! Exhaustive search over ascending plans.
//!
//! Depth-first over segments, each child at a level no lower than its
//! parent. A branch is cut as soon as one of its frames misses its playback
//! deadline: a frame's arrival depends only on the frames before it, so a
//! prefix that fails can never be completed into a feasible plan.

use crate::error::{Error, Result};
use crate::model::{
    compute_quality, make_threshold_schedule, QualityPlan, SessionOutcome, TradeoffParam,
};
use crate::sim::{frame_bits, CheckedTransmitter, Deadlines, SessionSim};

pub const DEFAULT_ORACLE_BUDGET: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub plan: QualityPlan,
    pub outcome: SessionOutcome,
    pub nodes_visited: u64,
}

struct Search<'s, 'a> {
    sim: &'s SessionSim<'a>,
    alpha: f64,
    a: TradeoffParam,
    rules: Deadlines,
    levels: Vec<usize>,
    best: Option<(f64, SessionOutcome, QualityPlan)>,
    nodes: u64,
}

impl Search<'_, '_> {
    fn visit(&mut self, branch: CheckedTransmitter<'_>, min_level: usize) -> Result<()> {
        let spec = self.sim.spec();
        if self.levels.len() == spec.n_segments() {
            return self.leaf();
        }
        for level in min_level..spec.n_levels() {
            self.nodes += 1;
            let mut child = branch.clone();
            if child.push_segment(level, spec.frames_per_segment(), &self.rules) {
                self.levels.push(level);
                self.visit(child, level)?;
                self.levels.pop();
            }
        }
        Ok(())
    }

    fn leaf(&mut self) -> Result<()> {
        let plan = QualityPlan::new(self.levels.clone());
        let rho = compute_quality(self.sim.spec(), &plan)?;
        let replace = match &self.best {
            None => true,
            Some((best_rho, best, _)) => {
                if rho > best_rho + 1e-12 {
                    true
                } else if rho >= best_rho - 1e-12 {
                    let outcome = self.sim.evaluate(self.alpha, &plan, self.a)?;
                    outcome.utilization < best.utilization
                } else {
                    false
                }
            }
        };
        if replace {
            let outcome = self.sim.evaluate(self.alpha, &plan, self.a)?;
            self.best = Some((rho, outcome, plan));
        }
        Ok(())
    }
}

/// Best ascending plan at threshold `alpha`: highest quality, then lowest
/// utilization, then lexicographically smallest. `Ok(None)` when no
/// ascending plan plays without stalling.
pub fn tree_oracle(
    sim: &SessionSim<'_>,
    alpha: f64,
    a: TradeoffParam,
    budget: u64,
) -> Result<Option<OracleResult>> {
    let spec = sim.spec();
    let cache = spec.cache_segments();
    let free = (spec.n_segments() - cache) as f64;
    let nodes = (spec.n_levels() as f64 + 1.0).powf(free);
    if nodes > budget as f64 {
        return Err(Error::BudgetExceeded { nodes, budget });
    }

    let schedule = make_threshold_schedule(sim.trace(), alpha)?;
    let bits = frame_bits(spec);
    let rules = sim.deadlines();
    let mut root = sim.checked_transmitter(&schedule, &bits);
    for _ in 0..cache {
        if !root.push_segment(0, spec.frames_per_segment(), &rules) {
            return Ok(None);
        }
    }

    let mut search = Search {
        sim,
        alpha,
        a,
        rules,
        levels: vec![0; cache],
        best: None,
        nodes: 0,
    };
    search.visit(root, 0)?;
    let nodes_visited = search.nodes;
    Ok(search.best.map(|(_, outcome, plan)| OracleResult {
        plan,
        outcome,
        nodes_visited,
    }))
}
