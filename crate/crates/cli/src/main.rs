mod config;
mod experiments;
mod manifest;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{
    config_toml, load, ConfigError, ConvergenceConfig, Experiment, GrowthConfig, HeatSpectralConfig, KpzMhfeConfig,
    RenormCompareConfig, RenormLadderConfig, RunConfig,
};
use experiments::RunOutput;
use manifest::{write_manifest, Manifest, MANIFEST_NAME};

/// Seeded experiments for stochastic growth and the KPZ equation.
#[derive(Parser)]
#[command(name = "kpz", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral Galerkin refinement of the stochastic heat equation and the
    /// roughness of its Hopf-Cole transform.
    HeatSpectral(RunArgs),
    /// Deterministic KPZ benchmark profiles from the mixed-hybrid solver.
    KpzMhfe(RunArgs),
    /// Lattice growth roughness, scaling exponents and data collapse.
    Growth(RunArgs),
    /// Renormalization constants over a kappa list.
    RenormCompare(RunArgs),
    /// KPZ against Hopf-Cole over a kappa ladder, plus the kappa-refinement study.
    RenormLadder(RunArgs),
    /// Mesh refinement table of the deterministic benchmark.
    ConvergenceStudy(RunArgs),
    /// Re-run the experiment recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check that the files in a run directory still match its manifest.
    Verify { dir: PathBuf },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML configuration, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Binary noise dump to drive a single trajectory (heat-spectral only).
    #[arg(long)]
    replay_noise: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() || cause.is::<clap::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<kpz_core::Error>() {
            return match e {
                kpz_core::Error::Config(_) | kpz_core::Error::InvalidArgument(_) => 2,
                kpz_core::Error::NonConvergence { .. } => 3,
                kpz_core::Error::Io(_) | kpz_core::Error::Csv(_) => 4,
                _ => 1,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() {
            return 4;
        }
    }
    1
}

fn init_workers(workers: Option<usize>) -> Result<usize> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(ConfigError("`--workers` must be at least 1".into()).into());
        }
        builder = builder.num_threads(n);
    }
    builder.build_global().context("starting worker pool")?;
    Ok(rayon::current_num_threads())
}

fn resolve<T: RunConfig>(args: &RunArgs, experiment: Experiment) -> Result<T> {
    let mut cfg: T = match &args.config {
        Some(path) => load(path, experiment)?,
        None => T::default(),
    };
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn execute<T: RunConfig>(
    args: &RunArgs,
    experiment: Experiment,
    run: impl FnOnce(&T, Option<&Path>) -> Result<RunOutput>,
) -> Result<()> {
    if args.print_config {
        let cfg: T = resolve(args, experiment)?;
        print!("{}", config_toml(&cfg, experiment)?);
        return Ok(());
    }
    let replay_noise = match (&args.replay_noise, &args.config) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(path)) if path.extension().is_some_and(|e| e == "json") => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<Manifest>(&text).ok().and_then(|m| m.replay_noise)
        }
        _ => None,
    };
    if replay_noise.is_some() && experiment != Experiment::HeatSpectral {
        return Err(ConfigError(format!("`--replay-noise` is not supported by {experiment}")).into());
    }
    let cfg: T = resolve(args, experiment)?;
    cfg.validate()?;
    let workers = init_workers(args.workers)?;

    let start = Instant::now();
    let output = run(&cfg, replay_noise.as_deref())?;
    let wall_clock_seconds = start.elapsed().as_secs_f64();

    let files = output.files.write_all(&args.out)?;
    let manifest = Manifest {
        experiment,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::to_value(&cfg)?,
        seeds: output.seeds,
        replay_noise,
        workers,
        wall_clock_seconds,
        files,
    };
    write_manifest(&args.out, &manifest)?;
    eprintln!(
        "{experiment}: wrote {} files and {} to {} in {:.1} s",
        manifest.files.len(),
        MANIFEST_NAME,
        args.out.display(),
        wall_clock_seconds
    );
    Ok(())
}

fn dispatch(experiment: Experiment, args: &RunArgs) -> Result<()> {
    match experiment {
        Experiment::HeatSpectral => execute::<HeatSpectralConfig>(args, experiment, experiments::heat_spectral),
        Experiment::KpzMhfe => execute::<KpzMhfeConfig>(args, experiment, |c, _| experiments::kpz_mhfe(c)),
        Experiment::Growth => execute::<GrowthConfig>(args, experiment, |c, _| experiments::growth(c)),
        Experiment::RenormCompare => {
            execute::<RenormCompareConfig>(args, experiment, |c, _| experiments::renorm_compare(c))
        }
        Experiment::RenormLadder => execute::<RenormLadderConfig>(args, experiment, |c, _| experiments::renorm_ladder(c)),
        Experiment::ConvergenceStudy => {
            execute::<ConvergenceConfig>(args, experiment, |c, _| experiments::convergence(c))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let (experiment, args) = match cli.command {
        Command::HeatSpectral(a) => (Experiment::HeatSpectral, a),
        Command::KpzMhfe(a) => (Experiment::KpzMhfe, a),
        Command::Growth(a) => (Experiment::Growth, a),
        Command::RenormCompare(a) => (Experiment::RenormCompare, a),
        Command::RenormLadder(a) => (Experiment::RenormLadder, a),
        Command::ConvergenceStudy(a) => (Experiment::ConvergenceStudy, a),
        Command::Replay { manifest, out, workers } => {
            let text = std::fs::read_to_string(&manifest).with_context(|| format!("reading {}", manifest.display()))?;
            let m: Manifest =
                serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", manifest.display())))?;
            let args =
                RunArgs { config: Some(manifest), seed: None, workers, out, replay_noise: None, print_config: false };
            (m.experiment, args)
        }
        Command::Verify { dir } => {
            let path = dir.join(MANIFEST_NAME);
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let m: Manifest = serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            let bad = manifest::verify(&dir, &m)?;
            if bad.is_empty() {
                println!("{} files match {}", m.files.len(), path.display());
                return Ok(());
            }
            anyhow::bail!("hash mismatch: {}", bad.join(", "));
        }
    };
    dispatch(experiment, &args)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
