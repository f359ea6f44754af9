use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use aoa_keygen::experiment::{run_experiment, ExperimentKind, ExperimentSpec};

#[derive(Parser)]
#[command(name = "aoa-keygen", version, about = "AoA-based secret key generation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Azimuth spectra and peak-to-floor ratios.
    Spectrum(RunArgs),
    /// Angle RMSE against SNR and sample count.
    Rmse(RunArgs),
    /// Bit mismatch rate against SNR for AoA and channel sources.
    Bmr(RunArgs),
    /// One end-to-end key agreement.
    Keygen(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment spec (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding the spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; files go to <out>/<id>/.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Monte Carlo trials, overriding the spec.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (results do not depend on it).
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<(), String> {
    let mut spec = ExperimentSpec::from_path(&args.config)
        .map_err(|e| format!("{}: {e}", args.config.display()))?;
    if spec.kind != kind {
        return Err(format!(
            "{} describes a {} experiment, not {}",
            args.config.display(),
            spec.kind.label(),
            kind.label()
        ));
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    spec.validate().map_err(|e| e.to_string())?;
    if args.parallel == 0 {
        return Err("--parallel must be at least 1".into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.parallel)
        .build()
        .map_err(|e| e.to_string())?;

    let start = Instant::now();
    let out = pool
        .install(|| run_experiment(&spec, &args.out))
        .map_err(|e| e.to_string())?;
    if let Some(summary) = &out.summary {
        print!("{summary}");
    }
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    eprintln!("{} finished in {:.2}s", spec.id, start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Spectrum(a) => (ExperimentKind::Spectrum, a),
        Command::Rmse(a) => (ExperimentKind::Rmse, a),
        Command::Bmr(a) => (ExperimentKind::Bmr, a),
        Command::Keygen(a) => (ExperimentKind::Keygen, a),
    };
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
