use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use greenpath::experiment::{self, ExperimentConfig, RunManifest, Tolerance};
use greenpath::Error;

/// Output directory used when neither the command line nor the config names one.
const OUTPUT_DIR_ENV: &str = "GREENPATH_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "greenpath-output";

#[derive(Parser)]
#[command(name = "greenpath", version, about = "Run and compare greenpath experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config or a previous run's manifest.
    Run {
        config: PathBuf,
        /// Overrides the config's `output_dir` and the environment default.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads; defaults to all cores. Outputs do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare the observables recorded in two manifests.
    Compare {
        manifest_a: PathBuf,
        manifest_b: PathBuf,
        /// Tolerance bands, e.g. `abs=1e-8,rel=1e-6,se=3`.
        #[arg(long, default_value = "se=3")]
        tol: String,
    },
}

fn output_dir(flag: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
}

fn error_record(err: &Error) -> serde_json::Value {
    serde_json::json!({
        "error": {
            "kind": err.kind(),
            "key": err.key(),
            "message": err.to_string(),
        }
    })
}

fn report_error(err: &Error, dir: Option<&Path>) -> ExitCode {
    let record = serde_json::to_string_pretty(&error_record(err)).unwrap_or_default();
    eprintln!("{record}");
    if let Some(dir) = dir {
        if dir.is_dir() {
            let _ = std::fs::write(dir.join("error.json"), record + "\n");
        }
    }
    match err {
        Error::Config(_) | Error::MissingKey(_) | Error::InvalidParameter { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn run(config_path: &Path, flag: Option<PathBuf>, threads: Option<usize>) -> ExitCode {
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return report_error(&Error::Config(format!("thread pool: {e}")), None);
        }
    }
    let config = match ExperimentConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => return report_error(&e, None),
    };
    let dir = output_dir(flag, &config);
    match experiment::run(&config, &dir) {
        Ok(manifest) => {
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", dir.join(experiment::MANIFEST_FILE).display());
            ExitCode::SUCCESS
        }
        Err(e) => report_error(&e, Some(&dir)),
    }
}

fn compare(a: &Path, b: &Path, tol: &str) -> ExitCode {
    let loaded = tol
        .parse::<Tolerance>()
        .and_then(|t| Ok((RunManifest::load(a)?, RunManifest::load(b)?, t)));
    let (ma, mb, tol) = match loaded {
        Ok(v) => v,
        Err(e) => return report_error(&e, None),
    };
    match experiment::compare(&ma, &mb, &tol) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
            if report.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => report_error(&e, None),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, output_dir, threads } => run(&config, output_dir, threads),
        Command::Compare { manifest_a, manifest_b, tol } => compare(&manifest_a, &manifest_b, &tol),
    }
}
