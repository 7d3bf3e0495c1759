//! Batch command-line front end.
//!
//! Subcommands: `synth`, `ingest`, `summarize`, `train`, `evaluate`,
//! `sweep-r`, `report`. Configuration comes from a TOML file (flag
//! `--config`, or the `VRIDENT_CONFIG` environment variable, or builtin
//! defaults); individual flags override config fields. Exit codes:
//! 0 success, 1 pipeline failure, 2 usage or config error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::Error;
use crate::pipeline::{
    cmd_evaluate, cmd_ingest, cmd_report, cmd_summarize, cmd_sweep_r, cmd_synth, cmd_train,
    with_jobs, RunContext,
};

#[derive(Parser)]
#[command(
    name = "vrident",
    version,
    about = "User identification from VR sensor traces: blocking, summarization, random-forest identification, and adversary evaluation"
)]
struct Cli {
    /// Config file (TOML). Defaults to $VRIDENT_CONFIG, else builtin defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master RNG seed (overrides config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 0 = one per core. Outputs never depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Dataset root (overrides config).
    #[arg(long, global = true)]
    root: Option<PathBuf>,

    /// Output directory (overrides config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct EvalFlags {
    /// Restrict to one scope: app:a_<i>, group:<name>, universal.
    #[arg(long)]
    scope: Option<String>,

    /// Restrict to sensor groups (bm|eg|hj|fe|all), comma separated.
    #[arg(long)]
    sensor: Option<String>,

    /// Sub-session block count, or "max" for the whole session.
    #[arg(long)]
    s: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpus into the dataset root.
    Synth,
    /// Scan the dataset, validate and preprocess traces, write logs.
    Ingest,
    /// Produce per-app block tables (CSV + column manifests).
    Summarize,
    /// Train identification models for the configured scopes.
    Train(EvalFlags),
    /// Evaluate models: accuracy tables, sub-session curves, zero-day
    /// matrix, top features.
    Evaluate(EvalFlags),
    /// Re-run summarize+train+evaluate over a list of block-amount ratios.
    #[command(name = "sweep-r")]
    SweepR {
        /// Comma-separated ratios in (0, 2], e.g. 0.1,0.5,1,2
        #[arg(long, required = true)]
        values: String,
    },
    /// Bundle the emitted reports plus manifests into out/report.
    Report,
}

fn apply_eval_flags(cfg: &mut RunConfig, flags: &EvalFlags) -> crate::Result<()> {
    if let Some(scope) = &flags.scope {
        cfg.eval.scopes = vec![scope.clone()];
    }
    if let Some(sensor) = &flags.sensor {
        cfg.eval.sensors = sensor.split(',').map(|s| s.trim().to_string()).collect();
    }
    if let Some(s) = &flags.s {
        cfg.eval.s = s.clone();
    }
    cfg.eval_sensors()?;
    cfg.eval_s()?;
    Ok(())
}

fn load_config(cli: &Cli) -> crate::Result<RunConfig> {
    let path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os("VRIDENT_CONFIG").map(PathBuf::from));
    let mut cfg = match path {
        Some(p) => RunConfig::from_file(&p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    if let Some(root) = &cli.root {
        cfg.dataset.root = root.clone();
    }
    if let Some(out) = &cli.out {
        cfg.dataset.out_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> crate::Result<()> {
    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::Train(flags) | Command::Evaluate(flags) => apply_eval_flags(&mut cfg, flags)?,
        _ => {}
    }
    let jobs = cfg.jobs;
    let ctx = RunContext::new(cfg)?;
    with_jobs(jobs, || match &cli.command {
        Command::Synth => {
            let files = cmd_synth(&ctx)?;
            println!(
                "synth: wrote {files} trace files under {}",
                ctx.cfg.dataset.root.display()
            );
            Ok(())
        }
        Command::Ingest => {
            let index = cmd_ingest(&ctx)?;
            println!("ingest: index at {}", index.display());
            Ok(())
        }
        Command::Summarize => {
            let tables = cmd_summarize(&ctx)?;
            println!(
                "summarize: {} block tables under {}",
                tables.len(),
                ctx.cfg.dataset.out_dir.display()
            );
            Ok(())
        }
        Command::Train(_) => {
            let models = cmd_train(&ctx)?;
            println!(
                "train: {} models under {}",
                models.len(),
                ctx.cfg.dataset.out_dir.join("models").display()
            );
            Ok(())
        }
        Command::Evaluate(_) => {
            let reports = cmd_evaluate(&ctx)?;
            for r in &reports {
                println!("evaluate: {}", r.display());
            }
            Ok(())
        }
        Command::SweepR { values } => {
            let parsed: Result<Vec<f64>, _> =
                values.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let parsed =
                parsed.map_err(|_| Error::Config(format!("bad sweep values '{values}'")))?;
            let summary = cmd_sweep_r(&ctx, &parsed)?;
            println!("sweep-r: summary at {}", summary.display());
            Ok(())
        }
        Command::Report => {
            let manifest = cmd_report(&ctx)?;
            println!("report: bundle manifest at {}", manifest.display());
            Ok(())
        }
    })
}

/// Entry point for the binary; returns the process exit code.
pub fn main_entry() -> i32 {
    // clap handles --help/--version and exits 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e @ Error::Config(_)) => {
            eprintln!("config error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
