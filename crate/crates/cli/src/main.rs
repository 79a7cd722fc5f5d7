//! `uag`: run, sweep and replay uniform attachment graph experiments.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use uag_core::experiment::{
    self, CheckMode, ExperimentConfig, Manifest, MatchingMode, RunOptions, SummaryStats, SweepAxis, SweepParam, Table,
    Task, RECORDS_FILE,
};
use uag_core::thresholds::{Which, DEFAULT_TOLERANCE};

#[derive(Parser, Debug)]
#[command(name = "uag", version, about = "Uniform attachment graph experiments")]
struct Cli {
    /// Base seed; trial i uses stream i of this seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory receiving records.csv, timings.csv, summary.json and manifest.json.
    #[arg(long, global = true, default_value = "uag-out")]
    out_dir: PathBuf,
    /// What to print on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    #[command(flatten)]
    Task(TaskCommand),
    /// Repeat a task over a list of n or k values.
    Sweep {
        #[arg(long, value_enum)]
        param: ParamArg,
        /// Comma-separated axis values, or an inclusive range `lo..hi`.
        #[arg(long, value_parser = parse_values)]
        values: AxisValues,
        #[command(subcommand)]
        task: TaskCommand,
    },
    /// Re-run the experiment described by a manifest and compare records.
    Replay {
        /// Path to a manifest.json written by an earlier run.
        manifest: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ParamArg {
    N,
    K,
}

#[derive(Subcommand, Debug, Clone)]
enum TaskCommand {
    /// Sample graphs and report basic statistics.
    Generate {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1)]
        trials: u32,
        /// Write each trial's choice sequence and edge list here.
        #[arg(long)]
        emit_dir: Option<PathBuf>,
    },
    /// Exact neighbourhood dominance counts for comparable subset pairs.
    CouplingVerify {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        /// Single threshold m (default: every m in 1..=n).
        #[arg(long)]
        m: Option<u32>,
        /// Single subset size (default: every size in 1..n).
        #[arg(long)]
        subset_size: Option<u32>,
    },
    /// Certify (alpha, beta)-expansion of sampled graphs.
    ExpansionCheck {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        /// Number of graphs.
        #[arg(long, default_value_t = 1)]
        trials: u32,
        /// Random subsets per graph in sampled mode.
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Tabulate the entropy-equation thresholds.
    SolveThresholds {
        #[arg(long, default_value_t = 3)]
        k_min: u32,
        #[arg(long, default_value_t = 13)]
        k_max: u32,
        /// alpha1 or alpha2 (default: both).
        #[arg(long)]
        which: Option<Which>,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
    },
    /// Incremental or two-stage perfect matching experiments.
    MatchingExp {
        #[arg(long)]
        n: u32,
        /// Total choices per vertex; two-stage defaults to k-1 then 1.
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, default_value_t = 10)]
        trials: u32,
        #[arg(long, value_enum, default_value_t = MatchingArg::Incremental)]
        mode: MatchingArg,
        #[arg(long)]
        k1: Option<u32>,
        #[arg(long)]
        k2: Option<u32>,
    },
    /// Staged rotation-extension search for Hamilton cycles.
    HamiltonExp {
        #[arg(long)]
        n: u32,
        /// Choices per stage, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "10,1,1,1")]
        stages: Vec<u32>,
        #[arg(long, default_value_t = 10)]
        trials: u32,
        /// Write each certificate as one line of vertex labels.
        #[arg(long)]
        emit_certificates: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MatchingArg {
    Incremental,
    TwoStage,
}

#[derive(Debug, Clone)]
struct AxisValues(Vec<u32>);

fn parse_values(s: &str) -> Result<AxisValues, String> {
    parse_list(s).map(AxisValues)
}

fn parse_list(s: &str) -> Result<Vec<u32>, String> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|e| format!("{lo}: {e}"))?;
        let hi: u32 = hi.trim().parse().map_err(|e| format!("{hi}: {e}"))?;
        if lo > hi {
            return Err(format!("empty range {s}"));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|v| v.trim().parse::<u32>().map_err(|e| format!("{v}: {e}"))).collect()
}

impl TaskCommand {
    fn config(&self, seed: u64) -> Result<ExperimentConfig> {
        let (task, trials) = match self.clone() {
            TaskCommand::Generate { n, k, trials, emit_dir } => (Task::Generate { n, k, emit_dir }, trials),
            TaskCommand::CouplingVerify { n, k, m, subset_size } => (Task::CouplingVerify { n, k, m, subset_size }, 1),
            TaskCommand::ExpansionCheck { n, k, alpha, beta, mode, trials, samples } => {
                let mode = match mode {
                    ModeArg::Exact => CheckMode::Exact,
                    ModeArg::Sampled => CheckMode::Sampled,
                };
                (Task::ExpansionCheck { n, k, alpha, beta, mode, samples }, trials)
            }
            TaskCommand::SolveThresholds { k_min, k_max, which, tol } => (Task::SolveThresholds { k_min, k_max, which, tol }, 1),
            TaskCommand::MatchingExp { n, k, trials, mode, k1, k2 } => {
                let mode = match mode {
                    MatchingArg::Incremental => {
                        if k1.is_some() || k2.is_some() {
                            bail!("--k1/--k2 only apply to --mode two-stage");
                        }
                        MatchingMode::Incremental { k: k.context("--mode incremental needs --k")? }
                    }
                    MatchingArg::TwoStage => two_stage_split(k, k1, k2)?,
                };
                (Task::MatchingExp { n, mode }, trials)
            }
            TaskCommand::HamiltonExp { n, stages, trials, emit_certificates } => {
                (Task::HamiltonExp { n, stages, emit_certificates }, trials)
            }
        };
        Ok(ExperimentConfig::new(task, trials, seed))
    }
}

fn two_stage_split(k: Option<u32>, k1: Option<u32>, k2: Option<u32>) -> Result<MatchingMode> {
    let (k1, k2) = match (k, k1, k2) {
        (_, Some(a), Some(b)) => (a, b),
        (Some(k), Some(a), None) => (a, k.checked_sub(a).context("--k1 exceeds --k")?),
        (Some(k), None, b) => {
            let b = b.unwrap_or(1);
            (k.checked_sub(b).context("--k2 exceeds --k")?, b)
        }
        (None, _, _) => bail!("--mode two-stage needs --k or both --k1 and --k2"),
    };
    if let Some(k) = k {
        if k1 + k2 != k {
            bail!("--k1 + --k2 = {} but --k = {k}", k1 + k2);
        }
    }
    Ok(MatchingMode::TwoStage { k1, k2 })
}

fn emit(format: Format, records: &Table, summary: serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match format {
        Format::Csv => out.write_all(&records.to_csv_bytes()?)?,
        Format::Json => {
            let doc = serde_json::json!({ "summary": summary, "records": records.to_json() });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    Ok(())
}

fn report(summary: &SummaryStats) {
    eprintln!(
        "{}: {} records, {} successes, frequency {:.4} [{:.4}, {:.4}], {:.2}s",
        summary.task,
        summary.records,
        summary.successes,
        summary.frequency,
        summary.wilson_low,
        summary.wilson_high,
        summary.wallclock_seconds
    );
}

fn run(cli: Cli) -> Result<()> {
    let opts = RunOptions { threads: cli.threads, out_dir: Some(cli.out_dir.clone()) };
    match cli.command {
        Command::Task(task) => {
            let config = task.config(cli.seed)?;
            let out = experiment::run(&config, &opts)?;
            report(&out.summary);
            emit(cli.format, &out.records, serde_json::to_value(&out.summary)?)
        }
        Command::Sweep { param, values, task } => {
            let template = task.config(cli.seed)?;
            let param = match param {
                ParamArg::N => SweepParam::N,
                ParamArg::K => SweepParam::K,
            };
            let out = experiment::sweep(&template, &SweepAxis { param, values: values.0 }, &opts)?;
            for (_, s) in &out.summaries {
                report(s);
            }
            let summaries: Vec<_> = out.summaries.iter().map(|(v, s)| serde_json::json!({ param.name(): v, "summary": s })).collect();
            emit(cli.format, &out.records, summaries.into())
        }
        Command::Replay { manifest } => replay(&manifest, &opts, cli.format),
    }
}

fn replay(path: &Path, opts: &RunOptions, format: Format) -> Result<()> {
    let manifest = Manifest::load(path).with_context(|| format!("reading {}", path.display()))?;
    let original_path = path.parent().unwrap_or(Path::new(".")).join(RECORDS_FILE);
    // read before the replay can overwrite it
    let original = std::fs::read(&original_path).ok();
    let out = experiment::replay(&manifest, opts)?;
    if !out.same_build {
        eprintln!("note: manifest was written by build {}, this is {}", manifest.build_id, experiment::build_id());
    }
    let fresh = out.records.to_csv_bytes()?;
    match original {
        Some(bytes) if bytes == fresh => eprintln!("replay: records identical to {}", original_path.display()),
        Some(_) => bail!("replay: records differ from {}", original_path.display()),
        None => eprintln!("replay: no {} next to the manifest to compare", RECORDS_FILE),
    }
    emit(format, &out.records, serde_json::Value::Null)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
