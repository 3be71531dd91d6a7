use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use ponsim_experiments::output::ResultWriter;
use ponsim_experiments::{air, ber, init_threads, nsd, plot, regions, selftest, ExperimentConfig, THREADS_ENV};

#[derive(Parser)]
#[command(name = "ponsim", version, about = "Perturbation-model PON experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// NSD of each model versus launch power.
    NsdSweep,
    /// NSD of each model versus |β₂| at fixed power.
    NsdVsB2,
    /// Histogram decision regions per engine.
    DecisionRegions,
    /// BER of every detector versus launch power.
    BerSweep,
    /// AIRs from a BER results file.
    AirSweep {
        /// BER CSV; defaults to <out>/ber.csv.
        #[arg(long)]
        ber: Option<PathBuf>,
    },
    /// SVG figures from result or decision-map CSVs.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
    /// Fast invariant checks.
    Selftest,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let Some(path) = &cli.config else { bail!("--config is required for this subcommand") };
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if cfg.experiment.is_empty() {
        cfg.experiment = path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("results"))
}

fn log(msg: &str) {
    eprintln!("{msg}");
}

fn results_path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(format!("{name}.csv"))
}

fn run(cli: &Cli) -> Result<()> {
    init_threads(cli.threads);
    match &cli.command {
        Command::NsdSweep => {
            let cfg = load(cli)?;
            let mut w = ResultWriter::open(&results_path(&cfg, &cfg.experiment))?;
            nsd::run_nsd_sweep(&cfg, &mut w, &mut |m| log(m))?;
            println!("{}", w.path().display());
        }
        Command::NsdVsB2 => {
            let cfg = load(cli)?;
            let mut w = ResultWriter::open(&results_path(&cfg, &cfg.experiment))?;
            nsd::run_nsd_vs_beta2(&cfg, &mut w, &mut |m| log(m))?;
            println!("{}", w.path().display());
        }
        Command::DecisionRegions => {
            let cfg = load(cli)?;
            let dir = cfg.output_dir.join(&cfg.experiment);
            for set in regions::run_decision_regions(&cfg, &dir, &mut |m| log(m))? {
                for f in set.files {
                    println!("{}", f.display());
                }
            }
        }
        Command::BerSweep => {
            let cfg = load(cli)?;
            let mut w = ResultWriter::open(&results_path(&cfg, &cfg.experiment))?;
            let points = ber::run_ber_sweep(&cfg, &mut w, &mut |m| log(m))?;
            for p in points {
                if let Some(trace) = p.error_trace {
                    let path = cfg.output_dir.join(format!("{}-errors-p{}.bin", cfg.experiment, p.power_dbm));
                    std::fs::write(&path, trace).with_context(|| format!("writing {}", path.display()))?;
                    println!("{}", path.display());
                }
            }
            println!("{}", w.path().display());
        }
        Command::AirSweep { ber } => {
            let ber_path = match (ber, &cli.config) {
                (Some(p), _) => p.clone(),
                (None, Some(_)) => {
                    let cfg = load(cli)?;
                    results_path(&cfg, &cfg.experiment)
                }
                (None, None) => out_dir(cli).join("ber.csv"),
            };
            let stem = ber_path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
            let dir = cli.out.clone().unwrap_or_else(|| ber_path.parent().map(Path::to_path_buf).unwrap_or_default());
            let mut w = ResultWriter::open(&dir.join(format!("{stem}-air.csv")))?;
            air::run_air_sweep(&ber_path, &mut w, &mut |m| log(m))?;
            println!("{}", w.path().display());
        }
        Command::Plot { csv } => {
            let dir = out_dir(cli);
            for path in csv {
                for f in plot::emit_plots(path, &dir)? {
                    println!("{}", f.display());
                }
            }
        }
        Command::Selftest => {
            let checks = selftest::run()?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if failed > 0 {
                bail!("{failed} self-test check(s) failed");
            }
        }
    }
    Ok(())
}

/// Coarse error class for the machine-readable failure line.
fn error_kind(e: &anyhow::Error) -> &'static str {
    for cause in e.chain() {
        if cause.is::<std::io::Error>() {
            return "io";
        }
        if cause.is::<ponsim::Error>() {
            return "simulation";
        }
        if cause.is::<toml::de::Error>() {
            return "config";
        }
    }
    "invalid-input"
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('"', "'").replace('\n', " ");
            eprintln!("error kind={} message=\"{msg}\"", error_kind(&e));
            ExitCode::FAILURE
        }
    }
}
