use std::io::{ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ocdm_bench::config::ExperimentConfig;
use ocdm_bench::ingest::ingest;
use ocdm_bench::scaling::scaling_probe;
use ocdm_bench::{run_experiment, BenchError, Result};
use ocdm_core::data::{input_codes, load_alarm_log, WindowSpec};
use ocdm_core::StrategyKind;

#[derive(Parser)]
#[command(name = "bench", version, about = "Continual multi-label rehearsal experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run strategies on a stream and write the result bundle.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated strategy names; overrides the config.
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip model training and scoring.
        #[arg(long)]
        memory_only: bool,
        /// Extra `key=value` config overrides.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Total KL evaluations against the number of tasks, memory-only.
    Scale {
        #[arg(long, value_delimiter = ',', default_value = "ocdm,bat_ocdm")]
        strategy: Vec<StrategyKind>,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        tasks: Vec<usize>,
        /// Training samples per task.
        #[arg(long, default_value_t = 200)]
        d: usize,
        /// Memory size.
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        batch_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Window an alarm log into a sample CSV.
    Ingest {
        #[arg(long)]
        log: PathBuf,
        /// Input window length in minutes.
        #[arg(long, default_value_t = 1720)]
        d_in: u64,
        /// Output window length in minutes.
        #[arg(long, default_value_t = 480)]
        d_out: u64,
        /// Anchor stride in minutes; defaults to the output length.
        #[arg(long)]
        stride: Option<u64>,
        /// Codes to predict; defaults to every code in the log.
        #[arg(long, value_delimiter = ',')]
        targets: Vec<u32>,
        #[arg(long)]
        drop_empty: bool,
        #[arg(long)]
        out: PathBuf,
        /// Also split each machine in time and write its tail here.
        #[arg(long)]
        test_out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Run { config, strategy, seed, out, memory_only, overrides } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => ExperimentConfig::default(),
            };
            cfg.apply_overrides(&overrides)?;
            if let Some(s) = strategy {
                cfg.set("strategy", &s)?;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.out = out;
            }
            cfg.memory_only |= memory_only;
            for m in run_experiment(&cfg)? {
                let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
                writeln!(stdout, "{:<12} S_T {}  F_T {}  evals {}", m.strategy, fmt(m.s_t), fmt(m.f_t), m.total_evals)?;
            }
            writeln!(stdout, "results in {}", cfg.out.display())?;
        }
        Command::Scale { strategy, tasks, d, m, batch_size, seed } => {
            writeln!(stdout, "strategy,tasks,total_evals,evals_per_log_tasks,seconds")?;
            for kind in strategy {
                let report = scaling_probe(kind, &tasks, d, m, batch_size, seed)?;
                for r in &report.rows {
                    let per_log = r.total_evals as f64 / ((r.tasks as f64).ln() + 1.0);
                    writeln!(stdout, "{},{},{},{:.1},{:.6}", kind, r.tasks, r.total_evals, per_log, r.seconds)?;
                }
                let (a, r2) = report.linear_fit();
                eprintln!(
                    "{kind}: count ~ {a:.1} * T (R^2 {r2:.5}); max/min of count/(ln T + 1) = {:.4}",
                    report.log_normalized_spread()
                );
            }
        }
        Command::Ingest { log, d_in, d_out, stride, targets, drop_empty, out, test_out, test_fraction } => {
            let mut spec = WindowSpec::new(d_in, d_out, targets);
            if let Some(stride) = stride {
                spec.stride_minutes = stride;
            }
            spec.drop_empty_inputs = drop_empty;
            if spec.target_codes.is_empty() {
                spec.target_codes = input_codes(&load_alarm_log(&log)?, &spec);
            }
            let summary = ingest(&log, &spec, &out, test_out.as_deref().map(|p| (p, test_fraction)))?;
            writeln!(
                stdout,
                "{} machines, {} train and {} test samples",
                summary.machines, summary.train, summary.test
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(BenchError::Io(e)) if e.kind() == ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
