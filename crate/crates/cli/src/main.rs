//! `xbar`: run crossbar simulations from the command line.
//!
//! Exit status is 0 on success, 1 for invalid input (arguments, config,
//! files) and 2 when a computation fails.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use xbar_core::config::ScheduleSpec;
use xbar_core::demo::{demo_mlp_with, DemoOptions, MlpFixture};
use xbar_core::experiment::{write_csv, TrialResult};
use xbar_core::mvm::{error_stats, MvmReport};
use xbar_core::{load_config, run_experiments, CellKind, Error, ExperimentConfig, Mapping, ReportRow, WeightFile, WireModel};

#[derive(Parser)]
#[command(name = "xbar", version, about = "Crossbar IR-drop simulator with row remapping and partial activation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the wire model as JSON.
    Interconnect {
        /// Take the wire section from this experiment config.
        #[arg(short, long)]
        config: Option<PathBuf>,
    },
    /// Reorder weight rows by row-sum.
    Remap {
        weights: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Where to write the tracking vector (JSON array of destination rows).
        #[arg(long)]
        tv: PathBuf,
    },
    /// Run an experiment sweep and write one CSV row per trial.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Omit the timestamp comment so reruns are byte-identical.
        #[arg(long)]
        deterministic: bool,
    },
    /// Classify the bundled MLP fixture with both mappings.
    DemoMlp {
        fixture_dir: PathBuf,
        #[arg(long, default_value = "sram8t")]
        technology: CellKind,
        /// Zero all wire, driver and sink resistance.
        #[arg(long)]
        ideal_wires: bool,
    },
}

fn init_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("XBAR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("XBAR_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn interconnect(config: Option<&Path>) -> Result<(), Error> {
    let cfg = match config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    let model: WireModel = cfg.wire.model()?;
    print_json(&model);
    Ok(())
}

fn remap(weights: &Path, output: &Path, tv_path: &Path) -> Result<(), Error> {
    let w = WeightFile::load(weights)?;
    let (remapped, tv) = w.remapped()?;
    remapped.save(output)?;
    std::fs::write(tv_path, serde_json::to_string(&tv).expect("serializable") + "\n")?;
    Ok(())
}

#[derive(Serialize)]
struct GroupSummary {
    mapping: Mapping,
    schedule: ScheduleSpec,
    sigma: f64,
    trials: usize,
    failed: usize,
    mean_abs_err: Option<f64>,
    rmse: Option<f64>,
    p95_err: Option<f64>,
    /// Against Baseline with full activation at the same sigma.
    win_rate: Option<f64>,
}

fn summarize(cfg: &ExperimentConfig, results: &[TrialResult]) -> Result<Vec<GroupSummary>, Error> {
    let reports = |m: Mapping, s: ScheduleSpec, sigma: f64| -> (Vec<MvmReport>, usize) {
        let group: Vec<&TrialResult> = results
            .iter()
            .filter(|r| r.trial.mapping == m && r.trial.schedule == s && r.trial.sigma == sigma)
            .collect();
        let ok: Vec<MvmReport> = group.iter().filter_map(|r| r.outcome.as_ref().ok().cloned()).collect();
        let failed = group.len() - ok.len();
        (ok, failed)
    };
    let mut out = Vec::new();
    for &mapping in &cfg.mapping {
        for &schedule in &cfg.schedule {
            for &sigma in &cfg.sigma {
                let (ok, failed) = reports(mapping, schedule, sigma);
                let (base, base_failed) = reports(Mapping::Baseline, ScheduleSpec::default(), sigma);
                let is_base = mapping == Mapping::Baseline && schedule == ScheduleSpec::default();
                let paired = (!is_base && !base.is_empty() && base_failed == 0 && failed == 0).then_some(base.as_slice());
                let stats = if ok.is_empty() { None } else { Some(error_stats(&ok, paired)?) };
                out.push(GroupSummary {
                    mapping,
                    schedule,
                    sigma,
                    trials: ok.len() + failed,
                    failed,
                    mean_abs_err: stats.map(|s| s.mean_abs_err),
                    rmse: stats.map(|s| s.rmse),
                    p95_err: stats.map(|s| s.p95_err),
                    win_rate: stats.and_then(|s| s.win_rate),
                });
            }
        }
    }
    Ok(out)
}

fn simulate(config: &Path, output: &Path, deterministic: bool) -> Result<bool, Error> {
    let cfg = load_config(config)?;
    let results = run_experiments(&cfg)?;
    let rows: Vec<ReportRow> = results.iter().map(|r| ReportRow::new(cfg.technology, r)).collect();
    write_csv(BufWriter::new(File::create(output)?), &rows, deterministic)?;
    print_json(&summarize(&cfg, &results)?);
    let failed: Vec<&ReportRow> = rows.iter().filter(|r| r.status != "ok").collect();
    for r in &failed {
        eprintln!("trial {} failed: {}", r.trial, r.error);
    }
    Ok(failed.is_empty())
}

fn demo(dir: &Path, technology: CellKind, ideal_wires: bool) -> Result<(), Error> {
    let fixture = MlpFixture::load(dir)?;
    let mut opts = DemoOptions { technology, ..DemoOptions::default() };
    if ideal_wires {
        opts.wire = WireModel::ideal();
    }
    print_json(&demo_mlp_with(&fixture, &opts)?);
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Error> {
    init_threads()?;
    match cli.command {
        Command::Interconnect { config } => interconnect(config.as_deref()).map(|_| true),
        Command::Remap { weights, output, tv } => remap(&weights, &output, &tv).map(|_| true),
        Command::Simulate { config, output, deterministic } => simulate(&config, &output, deterministic),
        Command::DemoMlp { fixture_dir, technology, ideal_wires } => {
            demo(&fixture_dir, technology, ideal_wires).map(|_| true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
