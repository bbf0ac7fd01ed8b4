use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hetturing::experiments::{run_experiment, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "hetturing", version, about = "Base states, folds and critical lengths of heterogeneous Turing systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Base and patterned branches in theta
    Bifurcation(Common),
    /// theta+ over a two-parameter grid
    FoldScan(Common),
    /// Critical domain length against theta and a kinetic parameter
    CriticalLength(Common),
    /// Local Turing-region classification along x
    TuringRegion(Common),
    /// Homogeneous growth rates and instability windows
    Dispersion(Common),
    /// Time integration to a steady state
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config file
    #[arg(long)]
    config: PathBuf,
    /// Override a config entry, e.g. model.gamma=9 or sweeps.0.count=10
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for all random perturbations (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
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
    let (kind, args) = match cli.command {
        Command::Bifurcation(a) => (ExperimentKind::Bifurcation, a),
        Command::FoldScan(a) => (ExperimentKind::FoldScan, a),
        Command::CriticalLength(a) => (ExperimentKind::CriticalLength, a),
        Command::TuringRegion(a) => (ExperimentKind::TuringRegion, a),
        Command::Dispersion(a) => (ExperimentKind::Dispersion, a),
        Command::Simulate(a) => (ExperimentKind::Simulate, a),
    };
    let mut config = match ExperimentConfig::load(&args.config, &args.set) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(o) = args.out {
        config.output = Some(o);
    }
    let Some(out) = config.output.clone() else {
        eprintln!("error: no output directory; pass --out or set \"output\" in the config");
        return ExitCode::from(1);
    };
    let report = match run_experiment(kind, &config) {
        Ok(r) => r,
        Err(e @ (hetturing::Error::Config(_) | hetturing::Error::InvalidModel(_) | hetturing::Error::InvalidSettings(_))) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("error: {kind_name} failed: {e}", kind_name = kind.name());
            return ExitCode::from(2);
        }
    };
    match report.write(&out) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: writing {}: {e}", out.display());
            return ExitCode::from(2);
        }
    }
    if report.is_partial() {
        eprintln!("{} item(s) did not resolve; see summary.json", report.failures);
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
