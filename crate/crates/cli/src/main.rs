//! `tcs-lab`: run thermomechanical Cucker-Smale experiments from TOML configs.
//!
//! Exit status: 0 on success, 1 on usage or validation errors, 2 when a
//! solver aborts mid-run.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tcs_core::experiments::{run_to_dir, ExperimentConfig, ExperimentReport, Status};
use tcs_core::measures::WeightedMeasure;
use tcs_core::Error;

#[derive(Parser)]
#[command(name = "tcs-lab", version, about = "Thermomechanical Cucker-Smale numerical laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output directory (overrides `out` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a particle ensemble with the kinetic solver.
    SimulateKinetic(RunArgs),
    /// Evolve mono-kinetic data with the hydrodynamic solver.
    SimulateHydro(RunArgs),
    /// Print the bounded-Lipschitz distance between two measure CSVs.
    Distance {
        a: PathBuf,
        b: PathBuf,
        /// Optional config for the geometry and the solver settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Distance between particle and hydro solutions over a resolution ladder.
    Propagation(RunArgs),
    /// Distance growth under smooth perturbations of the initial measure.
    Stability(RunArgs),
    /// Refinement sweeps with observed orders.
    Convergence(RunArgs),
}

enum Failure {
    Usage(Error),
    Solver(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_solver_abort() {
            Failure::Solver(e)
        } else {
            Failure::Usage(e)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver abort: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path, experiment: &str, common: &Common) -> Result<(ExperimentConfig, PathBuf), Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.experiment = experiment.to_owned();
    apply(&mut cfg, common);
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(experiment));
    Ok((cfg, out))
}

fn apply(cfg: &mut ExperimentConfig, common: &Common) {
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
}

fn run(command: Command) -> Result<(), Failure> {
    let (name, args) = match command {
        Command::Distance { a, b, config, common } => return distance(a, b, config, common),
        Command::SimulateKinetic(args) => ("simulate-kinetic", args),
        Command::SimulateHydro(args) => ("simulate-hydro", args),
        Command::Propagation(args) => ("propagation", args),
        Command::Stability(args) => ("stability", args),
        Command::Convergence(args) => ("convergence", args),
    };
    let (cfg, out) = load(&args.config, name, &args.common)?;
    let report = run_to_dir(&cfg, &out).map_err(|a| Failure::from(a.error))?;
    summarize(&report, &out);
    Ok(())
}

fn distance(a: PathBuf, b: PathBuf, config: Option<PathBuf>, common: Common) -> Result<(), Failure> {
    let mut cfg = match &config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let mut cfg = ExperimentConfig::new("distance");
            cfg.geometry.dim = WeightedMeasure::read_csv(&a)?.dim();
            cfg
        }
    };
    cfg.experiment = "distance".into();
    cfg.distance.a = Some(a);
    cfg.distance.b = Some(b);
    apply(&mut cfg, &common);
    let report = match cfg.out.clone() {
        Some(out) => run_to_dir(&cfg, &out),
        None => tcs_core::experiments::run_experiment(&cfg),
    }
    .map_err(|a| Failure::from(a.error))?;
    let d = report.max_distance.expect("distance report has a value");
    println!("{d:?}");
    Ok(())
}

fn summarize(report: &ExperimentReport, out: &Path) {
    let status = match report.status {
        Status::Ok => "ok",
        Status::Running => "running",
        Status::Aborted => "aborted",
        Status::Failed => "failed",
    };
    println!("{}: {status}, outputs in {}", report.experiment, out.display());
    if let Some(d) = report.max_distance {
        println!("max distance {d:.6e}");
    }
    for s in &report.stability {
        println!("eps = {:e}: sup ratio {:.4} at t = {}", s.epsilon, s.sup_ratio, s.sup_time);
    }
    if let Some(c) = &report.characteristics {
        println!("characteristics: max ratio {:.4} over {} probes", c.max_ratio, c.probes);
    }
    for c in report.failing_checks() {
        println!("check failed: {} = {} (bound {})", c.name, c.value, c.bound);
    }
    for n in &report.notes {
        println!("note: {n}");
    }
}
