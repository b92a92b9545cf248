use std::path::{Path, PathBuf};
use std::time::Instant;

use lookahead_abr::planner::{evaluate_robustness, plan_with_stalls, PlanResult, StallPolicy};
use lookahead_abr::traces::{
    ingest_csv, load_trace, mean_trace, temporal_mapping, time_slotting, write_trace, ColumnMap,
};
use lookahead_abr::{
    sweep_thresholds, CapacityTrace, Error, SessionSim, SimConfig, ThresholdMode, TradeoffParam,
};
use rayon::prelude::*;

use crate::config::{reslot, ExperimentConfig};
use crate::failure::Failure;
use crate::report::{
    to_csv, BenchRow, PlanReport, RobustnessCsvRow, Scores, StallRow, SweepRow, TrajectoryRow,
};
use crate::LogFormat;

/// Writes to `out`, else into the configured output directory under
/// `default_name`, else to standard output. Nothing is written on error
/// because callers only get here with the full payload.
fn emit(
    config: &ExperimentConfig,
    out: Option<&Path>,
    default_name: &str,
    bytes: &[u8],
) -> Result<(), Failure> {
    let path = match (out, &config.output_dir) {
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(dir)) => Some(dir.join(default_name)),
        (None, None) => None,
    };
    match path {
        Some(p) => write_file(&p, bytes),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| Failure::Io(format!("standard output: {e}")))
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn single_a(config: &ExperimentConfig, command: &str) -> Result<TradeoffParam, Failure> {
    match config.a.as_slice() {
        [a] => Ok(TradeoffParam::new(*a)?),
        [] => Err(Failure::Config(format!("{command} needs a value of --a"))),
        _ => Err(Failure::Config(format!(
            "{command} takes a single --a, got {}",
            config.a.len()
        ))),
    }
}

pub fn plan(
    config: &ExperimentConfig,
    stall_at: &[usize],
    out: Option<&Path>,
) -> Result<(), Failure> {
    let a = single_a(config, "plan")?;
    let trace = config.trace()?;
    let spec = &config.video;
    let sim = SessionSim::new(&trace, spec);
    let sweep = match sweep_thresholds(&sim, config.threshold) {
        Ok(s) => Some(s),
        Err(Error::NoFeasibleSession) if !stall_at.is_empty() => None,
        Err(e) => return Err(e.into()),
    };
    let benchmark = sweep.as_ref().map(|s| {
        let b = s.benchmark(a);
        Scores::of(b.alpha_th, &b.outcome)
    });
    let result: PlanResult = if stall_at.is_empty() {
        sweep.expect("checked above").select(a)
    } else {
        let policy = StallPolicy::new(stall_at.to_vec(), spec.n_segments())?;
        let stalled = plan_with_stalls(
            &trace,
            spec,
            &SimConfig::default(),
            a,
            &policy,
            config.threshold,
        )?;
        PlanResult {
            alpha_th: stalled.parts[0].result.alpha_th,
            plan: stalled.plan,
            outcome: stalled.outcome,
            candidates_evaluated: stalled
                .parts
                .iter()
                .map(|p| p.result.candidates_evaluated)
                .sum(),
        }
    };
    let report = PlanReport::from_result(
        &result,
        a.value(),
        config.threshold,
        trace.slot_duration(),
        stall_at.to_vec(),
        benchmark,
    );
    report.validate(spec.n_segments())?;
    let mut json =
        serde_json::to_vec_pretty(&report).map_err(|e| Failure::Config(e.to_string()))?;
    json.push(b'\n');
    emit(config, out, "plan.json", &json)
}

pub fn sweep_a(
    config: &ExperimentConfig,
    trajectory_dir: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    if config.a.is_empty() {
        return Err(Failure::Config(
            "sweep-a needs at least one value of --a".into(),
        ));
    }
    let weights = config
        .a
        .iter()
        .map(|&a| TradeoffParam::new(a))
        .collect::<Result<Vec<_>, _>>()?;
    let trace = config.trace()?;
    let sim = SessionSim::new(&trace, &config.video);
    let sweep = sweep_thresholds(&sim, config.threshold)?;
    let results: Vec<PlanResult> = weights.iter().map(|&a| sweep.select(a)).collect();
    let rows: Vec<SweepRow> = results
        .iter()
        .zip(&config.a)
        .map(|(r, &a)| SweepRow {
            a,
            alpha_th_bps: r.alpha_th,
            utilization: r.outcome.utilization,
            quality: r.outcome.quality,
            cost: r.outcome.cost,
        })
        .collect();
    let csv = to_csv(&rows)?;
    if let Some(dir) = trajectory_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
        for (r, &a) in results.iter().zip(&config.a) {
            let o = &r.outcome;
            let rows: Vec<TrajectoryRow> = (0..o.arrived_frames.len())
                .map(|k| TrajectoryRow {
                    slot: k,
                    arrived_frames: o.arrived_frames[k],
                    watched_frames: o.watched_frames[k],
                    bits: o.bits_used_per_slot.get(k).copied().unwrap_or(0.0),
                })
                .collect();
            write_file(&dir.join(format!("trajectory_a{a}.csv")), &to_csv(&rows)?)?;
        }
    }
    emit(config, out, "sweep_a.csv", &csv)
}

pub fn stall_scan(
    config: &ExperimentConfig,
    positions: &[usize],
    out: Option<&Path>,
) -> Result<(), Failure> {
    let a = single_a(config, "stall-scan")?;
    let trace = config.trace()?;
    let spec = &config.video;
    let before = sweep_thresholds(&SessionSim::new(&trace, spec), config.threshold)?
        .select(a)
        .outcome
        .cost;
    let all: Vec<usize> = (1..spec.n_segments()).collect();
    let positions = if positions.is_empty() {
        &all
    } else {
        positions
    };
    let rows = positions
        .par_iter()
        .map(|&seg| {
            let policy = StallPolicy::new(vec![seg], spec.n_segments())?;
            match plan_with_stalls(
                &trace,
                spec,
                &SimConfig::default(),
                a,
                &policy,
                config.threshold,
            ) {
                Ok(p) => Ok(StallRow {
                    stall_segment: seg,
                    stall_slot: Some(p.parts[1].start_slot),
                    cost_before: before,
                    cost_after: Some(p.outcome.cost),
                }),
                Err(Error::PartInfeasible { .. }) => Ok(StallRow {
                    stall_segment: seg,
                    stall_slot: None,
                    cost_before: before,
                    cost_after: None,
                }),
                Err(e) => Err(Failure::from(e)),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    emit(config, out, "stall_scan.csv", &to_csv(&rows)?)
}

pub enum Realizations {
    Synthetic(usize),
    TraceDir(PathBuf),
    LogDir {
        dir: PathBuf,
        format: LogFormat,
        speed_kmph: f64,
    },
}

fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| Failure::Io(format!("cannot read {}: {e}", dir.display())))?
            .path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Failure::Config(format!("{} holds no files", dir.display())));
    }
    Ok(files)
}

fn column_map(format: LogFormat) -> ColumnMap {
    match format {
        LogFormat::Hsdpa => ColumnMap::hsdpa(),
        LogFormat::Named => ColumnMap::named(),
    }
}

fn truncate(trace: &CapacityTrace, slots: usize) -> Result<CapacityTrace, Failure> {
    Ok(
        CapacityTrace::new(trace.slot_duration(), trace.capacities()[..slots].to_vec())?
            .with_origin(trace.origin_time()),
    )
}

pub fn robustness(
    config: &ExperimentConfig,
    source: &Realizations,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let a = single_a(config, "robustness")?;
    let dt = config.slot_duration_s;
    let (names, traces): (Vec<String>, Vec<CapacityTrace>) = match source {
        Realizations::Synthetic(0) => {
            return Err(Failure::Config("need at least one realization".into()))
        }
        Realizations::Synthetic(m) => (0..*m)
            .into_par_iter()
            .map(|i| {
                Ok((
                    format!("synthetic:{i}"),
                    reslot(&config.synthetic_realization(i)?, dt)?,
                ))
            })
            .collect::<Result<Vec<_>, Failure>>()?
            .into_iter()
            .unzip(),
        Realizations::TraceDir(dir) => sorted_files(dir)?
            .par_iter()
            .map(|p| Ok((p.display().to_string(), reslot(&load_trace(p)?, dt)?)))
            .collect::<Result<Vec<_>, Failure>>()?
            .into_iter()
            .unzip(),
        Realizations::LogDir {
            dir,
            format,
            speed_kmph,
        } => sorted_files(dir)?
            .par_iter()
            .map(|p| {
                let log = ingest_csv(p, &column_map(*format))?;
                Ok((
                    p.display().to_string(),
                    temporal_mapping(&log, *speed_kmph, dt)?,
                ))
            })
            .collect::<Result<Vec<_>, Failure>>()?
            .into_iter()
            .unzip(),
    };
    // realizations of unequal length are compared over their common window
    let common = traces.iter().map(CapacityTrace::len).min().unwrap_or(0);
    let traces = traces
        .iter()
        .map(|t| truncate(t, common))
        .collect::<Result<Vec<_>, _>>()?;
    let reference = mean_trace(&traces)?;
    let report = evaluate_robustness(
        &reference,
        &traces,
        &config.video,
        &SimConfig::default(),
        a,
        config.threshold,
    )?;
    let rows: Vec<RobustnessCsvRow> = report
        .rows
        .into_iter()
        .zip(names)
        .map(|(r, source)| RobustnessCsvRow {
            realization: r.realization,
            source,
            utilization: r.utilization,
            quality: r.quality,
            error_utilization: r.error_utilization,
            error_quality: r.error_quality,
            flagged: r.flagged,
            stalls: r.stalls,
        })
        .collect();
    emit(config, out, "robustness.csv", &to_csv(&rows)?)
}

/// Runtime in seconds, then `σ`, `ρ` and cost of the chosen plan.
type Timed = (f64, f64, f64, f64);
/// `None` when the trace admits no feasible session.
type Run = Option<Timed>;

fn timed_plan(
    trace: &CapacityTrace,
    config: &ExperimentConfig,
    a: TradeoffParam,
    mode: ThresholdMode,
) -> Result<Run, Failure> {
    let sim = SessionSim::new(trace, &config.video);
    let start = Instant::now();
    let result = sweep_thresholds(&sim, mode).map(|s| s.select(a));
    let elapsed = start.elapsed().as_secs_f64();
    match result {
        Ok(r) => Ok(Some((
            elapsed,
            r.outcome.utilization,
            r.outcome.quality,
            r.outcome.cost,
        ))),
        Err(Error::NoFeasibleSession) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn summarize(sweep: &'static str, value: f64, cells: &[(Run, Run)]) -> BenchRow {
    let pairs: Vec<_> = cells
        .iter()
        .filter_map(|(run, base)| Some(((*run)?, (*base)?)))
        .collect();
    let n = pairs.len();
    let mean = |f: &dyn Fn(&(Timed, Timed)) -> f64| {
        (n > 0).then(|| pairs.iter().map(f).sum::<f64>() / n as f64)
    };
    BenchRow {
        sweep,
        value,
        traces: n,
        mean_runtime_s: mean(&|(r, _)| r.0),
        accuracy_utilization: mean(&|(r, b)| r.1 / b.1),
        accuracy_quality: mean(&|(r, b)| r.2 / b.2),
        accuracy_cost: mean(&|(r, b)| r.3 / b.3),
    }
}

pub fn bench(
    config: &ExperimentConfig,
    periods: &[f64],
    quanta: &[f64],
    traces: usize,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let a = single_a(config, "bench")?;
    if traces == 0 {
        return Err(Failure::Config("bench needs at least one trace".into()));
    }
    if let Some(bad) = periods
        .iter()
        .chain(quanta)
        .find(|x| !(x.is_finite() && **x > 0.0))
    {
        return Err(Failure::Config(format!(
            "periods and quanta must be positive, got {bad}"
        )));
    }
    let raw: Vec<CapacityTrace> = match config.trace {
        crate::config::TraceSource::File(_) => vec![config.raw_trace()?],
        crate::config::TraceSource::Synthetic(_) => (0..traces)
            .map(|i| config.synthetic_realization(i))
            .collect::<Result<_, _>>()?,
    };
    // per trace: the baseline run, then one run per period, then per quantum
    let per_trace = raw
        .par_iter()
        .map(|t| {
            let base_trace = reslot(t, config.slot_duration_s)?;
            let baseline = timed_plan(&base_trace, config, a, config.threshold)?;
            let optimal = if config.threshold == ThresholdMode::Optimal {
                baseline
            } else {
                timed_plan(&base_trace, config, a, ThresholdMode::Optimal)?
            };
            let mut by_period = Vec::with_capacity(periods.len());
            for &p in periods {
                let run = if p == config.slot_duration_s {
                    baseline
                } else {
                    timed_plan(&reslot(t, p)?, config, a, config.threshold)?
                };
                by_period.push((run, baseline));
            }
            let mut by_quantum = Vec::with_capacity(quanta.len());
            for &q in quanta {
                let run = timed_plan(
                    &base_trace,
                    config,
                    a,
                    ThresholdMode::Invest { quantum_bits: q },
                )?;
                by_quantum.push((run, optimal));
            }
            Ok((by_period, by_quantum))
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    let mut rows = Vec::new();
    for (i, &p) in periods.iter().enumerate() {
        let cells: Vec<_> = per_trace.iter().map(|(bp, _)| bp[i]).collect();
        rows.push(summarize("period", p, &cells));
    }
    for (i, &q) in quanta.iter().enumerate() {
        let cells: Vec<_> = per_trace.iter().map(|(_, bq)| bq[i]).collect();
        rows.push(summarize("quantum", q, &cells));
    }
    emit(config, out, "bench.csv", &to_csv(&rows)?)
}

pub fn map_log(
    log: &Path,
    format: LogFormat,
    speed_kmph: f64,
    by_time: bool,
    slot_duration: f64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let raw = ingest_csv(log, &column_map(format))?;
    let trace = if by_time {
        time_slotting(&raw, slot_duration)?
    } else {
        temporal_mapping(&raw, speed_kmph, slot_duration)?
    };
    let mut bytes = Vec::new();
    write_trace(&trace, &mut bytes)?;
    match out {
        Some(p) => write_file(p, &bytes),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| Failure::Io(format!("standard output: {e}")))
        }
    }
}

pub fn init_config(config: &ExperimentConfig, out: Option<&Path>) -> Result<(), Failure> {
    let mut json = serde_json::to_vec_pretty(config).map_err(|e| Failure::Config(e.to_string()))?;
    json.push(b'\n');
    emit(config, out, "config.json", &json)
}
