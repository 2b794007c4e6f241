//! Command-line verification lab: config parsing, experiments and reports.

pub mod config;
pub mod experiments;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{run_experiment, Outcome};
pub use report::{Check, Comparison, Report};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "SUPERINT_OUT_DIR";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

/// Exit code of a finished run: 0 when every check passes, 1 otherwise.
pub fn exit_code(report: &Report) -> i32 {
    if report.pass() {
        0
    } else {
        1
    }
}

/// Parses and resolves a config, applying a seed override first.
pub fn load_config(text: &str, experiment: Experiment, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::parse(text)?;
    if let Some(s) = seed {
        cfg.sampling.seed = s;
    }
    cfg.resolve(experiment)
}

/// Output directory: explicit override, then the environment, then the config.
pub fn output_dir(cfg: &ExperimentConfig, cli: Option<&Path>) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => PathBuf::from(&cfg.output.path),
    }
}

/// Writes `report.json`, `checks.csv` for the csv format, and the artifacts.
pub fn write_outputs(outcome: &Outcome, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io = |e: std::io::Error| CliError::Runtime(format!("writing {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let mut written = Vec::new();
    let mut put = |name: &str, contents: &str| -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(io)?;
        written.push(path);
        Ok(())
    };
    let json = serde_json::to_string_pretty(&outcome.report.to_json()).expect("report serializes");
    put("report.json", &(json + "\n"))?;
    if cfg.output.format == config::OutputFormat::Csv {
        put("checks.csv", &outcome.report.checks_csv())?;
    }
    for (name, contents) in &outcome.files {
        put(name, contents)?;
    }
    Ok(written)
}

/// Loads `config_path`, runs the experiment and writes its outputs.
pub fn run(
    experiment: Experiment,
    config_path: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<(Outcome, PathBuf), CliError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", config_path.display())))?;
    let cfg = load_config(&text, experiment, seed)?;
    let outcome = run_experiment(experiment, &cfg)?;
    let dir = output_dir(&cfg, out);
    write_outputs(&outcome, &cfg, &dir)?;
    Ok((outcome, dir))
}
