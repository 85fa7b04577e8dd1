//! Command-line front end for the econtrol simulator.
//!
//! Subcommands: `run` a single configuration, `sweep` a stepsize/feedback
//! grid, `reproduce` a named experiment preset, and `list-presets`. All
//! outputs land under the chosen directory with fixed names (`trace.csv`,
//! `resolved-config.json`, `best.json`, `summary.json`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use econtrol::algorithms::{theory_params, MethodId};
use econtrol::harness::{
    self, build_problem, plateau_error, preset_by_name, run, sweep, write_csv, PresetBundle,
    PresetName, RunConfig, RunOutput, SweepCriterion, SweepOutcome, PLATEAU_TAIL,
};

/// Exit code for a sweep in which every cell diverged.
const EXIT_NO_STABLE_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "econtrol",
    about = "Error-compensated compressed distributed SGD simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run and write trace.csv + resolved-config.json.
    Run(RunArgs),
    /// Run a gamma x eta grid and write per-cell traces plus best.json.
    Sweep(SweepArgs),
    /// Execute a named preset and write one trace per configuration plus
    /// summary.json.
    Reproduce(ReproduceArgs),
    /// Print the available presets and what they measure.
    ListPresets,
}

#[derive(Args)]
struct RunArgs {
    /// Path to a JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override a configuration value, e.g. --set gamma=0.001 or
    /// --set algorithm.compressor.k=30. Repeatable; later wins.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (defaults to the config's `out`, then `./out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated stepsize grid.
    #[arg(long, value_delimiter = ',', required = true)]
    gammas: Vec<f64>,
    /// Comma-separated feedback-strength grid (methods without one ignore it).
    #[arg(long, value_delimiter = ',')]
    etas: Vec<f64>,
    #[arg(long, value_enum, default_value = "final-loss")]
    criterion: CriterionArg,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CriterionArg {
    FinalLoss,
    MinLoss,
}

impl From<CriterionArg> for SweepCriterion {
    fn from(value: CriterionArg) -> Self {
        match value {
            CriterionArg::FinalLoss => SweepCriterion::FinalLoss,
            CriterionArg::MinLoss => SweepCriterion::MinLossNoDivergence,
        }
    }
}

#[derive(Args)]
struct ReproduceArgs {
    /// Preset name (see list-presets).
    #[arg(long)]
    preset: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Reproduce(args) => cmd_reproduce(args),
        Command::ListPresets => {
            for name in PresetName::ALL {
                let bundle = harness::preset_bundle(name);
                println!("{:12} {}", name.as_str(), bundle.description);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Load a config file, apply the seed override from `ECONTROL_SEED`, then
/// the `--set` overrides (last one wins), and resolve defaults.
fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut doc: Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;

    if let Ok(seed) = std::env::var("ECONTROL_SEED") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| anyhow!("ECONTROL_SEED must be an unsigned integer, got '{seed}'"))?;
        doc["master_seed"] = json!(seed);
        eprintln!("note: master_seed overridden by ECONTROL_SEED={seed}");
    }

    let mut seen: Vec<String> = Vec::new();
    for entry in overrides {
        let (key, raw_value) = entry
            .split_once('=')
            .ok_or_else(|| anyhow!("override '{entry}' is not KEY=VALUE"))?;
        if seen.iter().any(|k| k == key) {
            eprintln!("note: override '{key}' given twice, last one wins");
        }
        seen.push(key.to_string());
        apply_override(&mut doc, key, raw_value)?;
    }

    let mut config: RunConfig = serde_json::from_value(doc)
        .with_context(|| format!("config {} does not match the schema", path.display()))?;
    for note in config.resolve().map_err(|e| anyhow!("{e}"))? {
        eprintln!("note: {note}");
    }
    Ok(config)
}

/// Shorthand override keys accepted at the top level.
fn canonical_path(key: &str) -> String {
    match key {
        "gamma" | "eta" | "method" | "momentum" | "h0_init" => format!("algorithm.{key}"),
        other => other.to_string(),
    }
}

fn apply_override(doc: &mut Value, key: &str, raw_value: &str) -> Result<()> {
    let path = canonical_path(key);
    let parsed: Value = serde_json::from_str(raw_value).unwrap_or(Value::String(raw_value.into()));
    let mut node = &mut *doc;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        let object = node
            .as_object_mut()
            .ok_or_else(|| anyhow!("override key '{key}': '{}' is not an object", segments[..i].join(".")))?;
        if i + 1 == segments.len() {
            object.insert((*segment).to_string(), parsed);
            return Ok(());
        }
        node = object
            .entry((*segment).to_string())
            .or_insert_with(|| json!({}));
    }
    unreachable!("split always yields at least one segment")
}

fn out_dir(cli: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    cli.or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write_outputs(dir: &Path, config: &RunConfig, output: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut csv = std::fs::File::create(dir.join("trace.csv"))?;
    write_csv(&mut csv, &output.columns, &output.records).map_err(|e| anyhow!("{e}"))?;
    std::fs::write(
        dir.join("resolved-config.json"),
        serde_json::to_string_pretty(config)?,
    )?;
    Ok(())
}

/// Per-run statistics included in summaries, with the prescribed maximum
/// stepsize alongside the one actually used.
fn run_summary(label: &str, config: &RunConfig, output: &RunOutput) -> Result<Value> {
    let problem = build_problem(&config.problem).map_err(|e| anyhow!("{e}"))?;
    let algo = config.algo_config(problem.d()).map_err(|e| anyhow!("{e}"))?;
    let prescribed = theory_params(
        algo.method,
        &problem,
        &algo.compressor,
        algo.compressor2.as_ref(),
    )
    .map_err(|e| anyhow!("{e}"))?;
    let final_record = output.final_record();
    let plateau = plateau_error(&output.records, output.f_star, PLATEAU_TAIL).ok();
    Ok(json!({
        "label": label,
        "method": algo.method.as_str(),
        "gamma": algo.gamma,
        "eta": algo.eta,
        "gamma_max_theory": prescribed.gamma_max,
        "eta_theory": prescribed.eta,
        "rounds": final_record.round,
        "bits": final_record.bits,
        "final_loss": final_record.loss,
        "final_grad_norm_sq": final_record.grad_norm_sq,
        "plateau_error": plateau,
        "diverged": harness::run_diverged(output),
    }))
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let config = load_config(&args.config, &args.overrides)?;
    let dir = out_dir(args.out, &config);
    let output = run(&config).map_err(|e| anyhow!("{e}"))?;
    write_outputs(&dir, &config, &output)?;
    let final_record = output.final_record();
    println!(
        "run complete: {} rounds, {} bits, final loss {:.6e}, grad^2 {:.6e} -> {}",
        final_record.round,
        final_record.bits,
        final_record.loss,
        final_record.grad_norm_sq,
        dir.join("trace.csv").display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cell_dir_name(gamma: f64, eta: Option<f64>) -> String {
    match eta {
        Some(eta) => format!("gamma{gamma:e}_eta{eta:e}"),
        None => format!("gamma{gamma:e}"),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let base = load_config(&args.config, &args.overrides)?;
    let dir = out_dir(args.out, &base);
    let outcome: SweepOutcome = sweep(&base, &args.gammas, &args.etas, args.criterion.into())
        .map_err(|e| anyhow!("{e}"))?;

    let mut cell_reports = Vec::new();
    for cell in &outcome.cells {
        let cell_dir = dir.join(cell_dir_name(cell.gamma, cell.eta));
        write_outputs(&cell_dir, &cell.config, &cell.output)?;
        cell_reports.push(json!({
            "gamma": cell.gamma,
            "eta": cell.eta,
            "diverged": cell.diverged,
            "score": cell.score,
            "dir": cell_dir_name(cell.gamma, cell.eta),
        }));
    }

    let best = outcome.best.map(|i| &outcome.cells[i]);
    let best_json = match best {
        Some(cell) => run_summary(&cell_dir_name(cell.gamma, cell.eta), &cell.config, &cell.output)?,
        None => Value::Null,
    };
    std::fs::create_dir_all(&dir)?;
    std::fs::write(
        dir.join("best.json"),
        serde_json::to_string_pretty(&json!({
            "best": best_json,
            "cells": cell_reports,
        }))?,
    )?;

    match best {
        Some(cell) => {
            println!(
                "sweep complete: best gamma={:e} eta={:?} score={:.6e} -> {}",
                cell.gamma,
                cell.eta,
                cell.score.unwrap_or(f64::NAN),
                dir.join("best.json").display()
            );
            Ok(ExitCode::SUCCESS)
        }
        None => {
            eprintln!("no stable configuration: every sweep cell diverged");
            Ok(ExitCode::from(EXIT_NO_STABLE_CONFIG))
        }
    }
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<ExitCode> {
    let bundle: PresetBundle = preset_by_name(&args.preset).map_err(|e| anyhow!("{e}"))?;
    let dir = args.out.join(bundle.name.as_str());
    std::fs::create_dir_all(&dir)?;

    let mut summaries = Vec::new();
    for (label, base) in bundle.labels.iter().zip(bundle.configs.iter()) {
        let mut config = base.clone();
        config.resolve().map_err(|e| anyhow!("{e}"))?;
        let (config, output) = match &bundle.tune {
            None => {
                let output = run(&config).map_err(|e| anyhow!("{e}"))?;
                (config, output)
            }
            Some(tune) => {
                let etas: &[f64] = if config.algorithm.method == MethodId::EControl {
                    &tune.etas
                } else {
                    &[]
                };
                let outcome = sweep(&config, &tune.gammas, etas, tune.criterion)
                    .map_err(|e| anyhow!("{e}"))?;
                match outcome.best {
                    None => {
                        eprintln!("{label}: no stable configuration");
                        return Ok(ExitCode::from(EXIT_NO_STABLE_CONFIG));
                    }
                    Some(i) => {
                        let cell = &outcome.cells[i];
                        (cell.config.clone(), cell.output.clone())
                    }
                }
            }
        };
        write_outputs(&dir.join(label), &config, &output)?;
        summaries.push(run_summary(label, &config, &output)?);
        let final_record = output.final_record();
        println!(
            "{label}: rounds {} loss {:.6e} grad^2 {:.6e}",
            final_record.round, final_record.loss, final_record.grad_norm_sq
        );
    }

    std::fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&json!({
            "preset": bundle.name.as_str(),
            "description": bundle.description,
            "runs": summaries,
        }))?,
    )?;
    println!("reproduce complete -> {}", dir.display());
    Ok(ExitCode::SUCCESS)
}
