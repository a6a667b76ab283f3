use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use robust_lfd_cli::{manifest, run, validate_config, write_outputs, Experiment};
use serde_json::json;

#[derive(Parser)]
#[command(name = "robust-lfd", version, about = "Least favorable distributions and minimax robust tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Least favorable densities (lfd.csv) and likelihood ratios (llr.csv).
    Lfd(Common),
    /// Feasibility limits of the robustness parameters (limits.csv).
    Limits(Common),
    /// Large-deviation rate functions (rates.csv).
    Rate(Common),
    /// Fixed-sample error probabilities over a radius sweep (fss.csv).
    Fss(Common),
    /// Sequential test diagnostics over a threshold grid (sprt.csv).
    Sprt(Common),
    /// The experiment named in the configuration.
    Experiment(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

const USAGE: u8 = 2;
const FAILURE: u8 = 1;

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(USAGE)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, experiments) = match cli.command {
        Command::Lfd(a) => (a, Some(vec![Experiment::LfdPlot, Experiment::LlrRatio])),
        Command::Limits(a) => (a, Some(vec![Experiment::LimitCurves])),
        Command::Rate(a) => (a, Some(vec![Experiment::RateCurves])),
        Command::Fss(a) => (a, Some(vec![Experiment::FssSweep])),
        Command::Sprt(a) => (a, Some(vec![Experiment::SprtScan])),
        Command::Experiment(a) => (a, None),
    };
    let raw = match fs::read_to_string(&args.config) {
        Ok(r) => r,
        Err(e) => return usage(&format!("cannot read {}: {e}", args.config.display())),
    };
    let mut config = match validate_config(&raw) {
        Ok(c) => c,
        Err(errors) => {
            for e in &errors {
                eprintln!("{}: {e}", args.config.display());
            }
            return ExitCode::from(USAGE);
        }
    };
    if let Some(out) = &args.out {
        config.output_dir = out.display().to_string();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let experiments = match experiments {
        Some(e) => e,
        None => match config.experiment {
            Some(e) => vec![e],
            None => return usage("the configuration names no experiment"),
        },
    };
    let dir = PathBuf::from(&config.output_dir);
    match run(&config, &experiments) {
        Ok(out) => {
            let m = manifest(&config, &experiments, &out);
            if let Err(e) = write_outputs(&dir, &m, &out) {
                eprintln!("error: cannot write to {}: {e}", dir.display());
                return ExitCode::from(FAILURE);
            }
            for (name, _) in &out.files {
                println!("{}", dir.join(name).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = json!({
                "status": "error",
                "kind": e.kind(),
                "message": e.to_string(),
                "experiments": experiments.iter().map(|x| x.id()).collect::<Vec<_>>(),
            });
            let text = serde_json::to_string(&record).expect("record serializes");
            eprintln!("{text}");
            if fs::create_dir_all(&dir).is_ok() {
                let _ = fs::write(dir.join("error.json"), format!("{text}\n"));
            }
            ExitCode::from(FAILURE)
        }
    }
}
