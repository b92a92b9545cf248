mod commands;
mod config;
mod failure;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lookahead_abr::traces::SyntheticTraceConfig;
use lookahead_abr::{ThresholdMode, VideoSpec};

use config::{ExperimentConfig, TraceSource};
use failure::Failure;

/// Plans threshold schedules and quality levels over a known capacity
/// window and runs the comparison studies.
///
/// Exit codes: 0 success, 2 infeasible session, 3 I/O error, 4 bad
/// configuration or usage.
#[derive(Parser, Debug)]
#[command(name = "lookahead-abr", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Every flag can also be set through a `LOOKAHEAD_ABR_*` variable.
#[derive(Args, Debug)]
struct Common {
    /// Experiment config (JSON); flags override its fields.
    #[arg(long, global = true, env = "LOOKAHEAD_ABR_CONFIG")]
    config: Option<PathBuf>,
    /// Video description (JSON).
    #[arg(long, global = true, env = "LOOKAHEAD_ABR_VIDEO")]
    video: Option<PathBuf>,
    /// Capacity trace file (`slot_index,capacity_bps` CSV).
    #[arg(
        long,
        global = true,
        env = "LOOKAHEAD_ABR_TRACE",
        conflicts_with = "synthetic_seed"
    )]
    trace: Option<PathBuf>,
    /// Use a seeded synthetic trace.
    #[arg(long, global = true, env = "LOOKAHEAD_ABR_SYNTHETIC_SEED")]
    synthetic_seed: Option<u64>,
    /// Quality weight `a`; repeat or comma-separate for several.
    #[arg(
        long = "a",
        global = true,
        env = "LOOKAHEAD_ABR_A",
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    a: Vec<f64>,
    #[arg(long, global = true, env = "LOOKAHEAD_ABR_MODE", value_enum)]
    mode: Option<ModeArg>,
    /// Data quantum in bits for `--mode invest`.
    #[arg(long, global = true, env = "LOOKAHEAD_ABR_QUANTUM")]
    quantum: Option<f64>,
    /// Slot duration in seconds; finer traces are averaged up to it.
    #[arg(long, global = true, env = "LOOKAHEAD_ABR_SLOT")]
    slot: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, env = "LOOKAHEAD_ABR_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "LOOKAHEAD_ABR_JOBS")]
    jobs: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Optimal,
    Invest,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum LogFormat {
    /// Space-separated, headerless drive logs.
    Hsdpa,
    /// Headed CSV with timestamp_ms, latitude, longitude and bytes columns.
    Named,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plan one session and write a JSON report.
    Plan {
        /// Force re-buffering before these segments.
        #[arg(long = "stall-at", value_delimiter = ',')]
        stall_at: Vec<usize>,
    },
    /// Chosen threshold and scores for each `a` (CSV).
    SweepA {
        /// Also write per-slot buffer trajectories, one CSV per `a`.
        #[arg(long)]
        trajectory_dir: Option<PathBuf>,
    },
    /// Cost with a single forced stall at each position (CSV).
    StallScan {
        /// Segments to cut before; all admissible positions when absent.
        #[arg(long, value_delimiter = ',')]
        positions: Vec<usize>,
    },
    /// Plan on the mean trace, replay on every realization (CSV).
    Robustness {
        /// Directory of capacity trace files.
        #[arg(long, conflicts_with = "log_dir")]
        realization_dir: Option<PathBuf>,
        /// Directory of raw drive logs, mapped at `--speed-kmph`.
        #[arg(long)]
        log_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "hsdpa")]
        log_format: LogFormat,
        #[arg(long, default_value_t = 50.0)]
        speed_kmph: f64,
        /// Number of seeded synthetic realizations.
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Runtime and accuracy against sampling period and data quantum (CSV).
    Bench {
        /// Sampling periods in seconds.
        #[arg(long, value_delimiter = ',')]
        periods: Vec<f64>,
        /// Data quanta in bits.
        #[arg(long, value_delimiter = ',')]
        quanta: Vec<f64>,
        /// Seeded traces to average over.
        #[arg(long)]
        traces: Option<usize>,
    },
    /// Convert a raw bandwidth log into a capacity trace file.
    MapLog {
        log: PathBuf,
        #[arg(long, value_enum, default_value = "hsdpa")]
        log_format: LogFormat,
        #[arg(long, default_value_t = 50.0)]
        speed_kmph: f64,
        /// Slot by timestamps instead of by distance.
        #[arg(long)]
        by_time: bool,
    },
    /// Write the effective configuration (defaults plus flags) as JSON.
    InitConfig,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("lookahead-abr: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let config = effective_config(&cli.common)?;
    let out = cli.common.out.as_deref();
    match cli.command {
        Command::Plan { stall_at } => commands::plan(&config, &stall_at, out),
        Command::SweepA { trajectory_dir } => {
            commands::sweep_a(&config, trajectory_dir.as_deref(), out)
        }
        Command::StallScan { positions } => commands::stall_scan(&config, &positions, out),
        Command::Robustness {
            realization_dir,
            log_dir,
            log_format,
            speed_kmph,
            realizations,
        } => {
            let source = match (realization_dir, log_dir) {
                (Some(dir), _) => commands::Realizations::TraceDir(dir),
                (None, Some(dir)) => commands::Realizations::LogDir {
                    dir,
                    format: log_format,
                    speed_kmph,
                },
                (None, None) => {
                    commands::Realizations::Synthetic(realizations.unwrap_or(config.realizations))
                }
            };
            commands::robustness(&config, &source, out)
        }
        Command::Bench {
            periods,
            quanta,
            traces,
        } => {
            let (periods, quanta) = if periods.is_empty() && quanta.is_empty() {
                (
                    config.sampling_periods_s.clone(),
                    config.quanta_bits.clone(),
                )
            } else {
                (periods, quanta)
            };
            let traces = traces.unwrap_or(config.bench_traces);
            commands::bench(&config, &periods, &quanta, traces, out)
        }
        Command::MapLog {
            log,
            log_format,
            speed_kmph,
            by_time,
        } => commands::map_log(
            &log,
            log_format,
            speed_kmph,
            by_time,
            config.slot_duration_s,
            out,
        ),
        Command::InitConfig => commands::init_config(&config, out),
    }
}

fn effective_config(flags: &Common) -> Result<ExperimentConfig, Failure> {
    let mut config = match &flags.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(path) = &flags.video {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
        config.video = serde_json::from_str::<VideoSpec>(&text)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = &flags.trace {
        config.trace = TraceSource::File(path.clone());
    }
    if let Some(seed) = flags.synthetic_seed {
        config.trace = match config.trace {
            TraceSource::Synthetic(mut c) => {
                c.seed = seed;
                TraceSource::Synthetic(c)
            }
            TraceSource::File(_) => TraceSource::Synthetic(SyntheticTraceConfig::reference(seed)),
        };
    }
    if !flags.a.is_empty() {
        config.a = flags.a.clone();
    }
    if let Some(q) = flags.quantum {
        config.quantum_bits = q;
    }
    let configured_quantum = match config.threshold {
        ThresholdMode::Invest { quantum_bits } => Some(quantum_bits),
        ThresholdMode::Optimal => None,
    };
    let quantum_bits = flags
        .quantum
        .or(configured_quantum)
        .unwrap_or(config.quantum_bits);
    config.threshold = match (flags.mode, configured_quantum) {
        (Some(ModeArg::Optimal), _) | (None, None) => ThresholdMode::Optimal,
        (Some(ModeArg::Invest), _) | (None, Some(_)) => ThresholdMode::Invest { quantum_bits },
    };
    if let Some(slot) = flags.slot {
        config.slot_duration_s = slot;
    }
    if flags.out.is_none() {
        if let Some(dir) = &config.output_dir {
            if !dir.is_dir() {
                return Err(Failure::Io(format!(
                    "output directory {} does not exist",
                    dir.display()
                )));
            }
        }
    }
    config.validate()?;
    Ok(config)
}
