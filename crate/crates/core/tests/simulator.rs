mod common;

use common::{reference_violation, table_one_instance};
use lookahead_abr::{QualityPlan, SessionSim, TradeoffParam};

#[test]
fn lowest_level_fits_a_table_one_window() {
    let (spec, trace) = table_one_instance(7);
    let sim = SessionSim::new(&trace, &spec);
    let plan = QualityPlan::uniform(spec.n_segments(), 0);
    let c_min = trace.min_capacity().unwrap();
    let tx = sim.transmit(c_min, &plan).unwrap();
    assert!(tx.completed);
    let video = 180.0 * 0.4e6;
    let sent: f64 = tx.bits_used_per_slot.iter().sum();
    assert!((sent - video).abs() < 1e-3);
    assert!(video <= trace.total_volume());
    assert!(!sim.exist_violation(c_min, &plan).unwrap());
}

#[test]
fn top_level_verdict_matches_reference_on_table_one() {
    for seed in 0..10 {
        let (spec, trace) = table_one_instance(seed);
        let sim = SessionSim::new(&trace, &spec);
        let c_min = trace.min_capacity().unwrap();
        for plan in [
            QualityPlan::uniform(spec.n_segments(), spec.n_levels() - 1),
            QualityPlan::uniform(spec.n_segments(), 2),
            QualityPlan::uniform(spec.n_segments(), 0),
        ] {
            assert_eq!(
                sim.exist_violation(c_min, &plan).unwrap(),
                reference_violation(&trace, &spec, &plan, c_min),
                "seed {seed}, plan level {}",
                plan.levels()[0]
            );
        }
    }
}

#[test]
fn threshold_extremes() {
    let (spec, trace) = table_one_instance(3);
    let sim = SessionSim::new(&trace, &spec);
    let plan = QualityPlan::uniform(spec.n_segments(), 0);
    assert!(!sim.exist_violation(0.0, &plan).unwrap());
    let above = trace.max_capacity().unwrap() * 1.01;
    assert!(sim.exist_violation(above, &plan).unwrap());
    assert!(!sim.transmit(above, &plan).unwrap().completed);
}

#[test]
fn raising_the_threshold_cannot_raise_utilization_for_a_fixed_plan() {
    let (spec, trace) = table_one_instance(11);
    let sim = SessionSim::new(&trace, &spec);
    let plan = QualityPlan::uniform(spec.n_segments(), 1);
    let a = TradeoffParam::new(1.0).unwrap();
    let c_min = trace.min_capacity().unwrap();
    let base = sim.evaluate(c_min, &plan, a).unwrap();
    let mut checked = 0;
    for alpha in lookahead_abr::planner::optimal_threshold_candidates(&trace) {
        if let Ok(out) = sim.evaluate(alpha, &plan, a) {
            assert!(out.utilization <= base.utilization + 1e-12, "alpha {alpha}");
            assert_eq!(out.quality, base.quality);
            checked += 1;
        }
    }
    assert!(checked > 1);
}

#[test]
fn saturating_top_level_uses_the_whole_link() {
    // every slot carries exactly one top-level segment
    let spec = lookahead_abr::VideoSpec::reference();
    let top = spec.levels()[spec.n_levels() - 1].bitrate_bps;
    let trace = lookahead_abr::CapacityTrace::new(1.0, vec![top; 184]).unwrap();
    let sim = SessionSim::new(&trace, &spec);
    let plan = QualityPlan::uniform(spec.n_segments(), spec.n_levels() - 1);
    let out = sim
        .evaluate(0.0, &plan, TradeoffParam::new(4.5).unwrap())
        .unwrap();
    assert_eq!(out.quality, 1.0);
    assert_eq!(out.startup_slot, 4);
    // busy for 180 of the 184 seconds of the session
    assert!((out.utilization - 180.0 / 184.0).abs() < 1e-9);
    assert_eq!(out.cost, out.utilization - 4.5);
}

#[test]
fn outcomes_are_bit_identical_across_runs() {
    let (spec, trace) = table_one_instance(5);
    let sim = SessionSim::new(&trace, &spec);
    let plan = common::random_plan(&spec, 99);
    let a = TradeoffParam::new(2.0).unwrap();
    let alpha = trace.capacities()[17];
    assert_eq!(
        sim.simulate(alpha, &plan, a).unwrap(),
        sim.simulate(alpha, &plan, a).unwrap()
    );
}
