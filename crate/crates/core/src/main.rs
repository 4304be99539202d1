use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use l20fs::harness::commands::run_command;
use l20fs::harness::config::Settings;
use l20fs::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(
    name = "l20fs",
    version,
    about = "Row-sparse feature selection by homotopy hard thresholding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-support synthetic dataset.
    Synth(Common),
    /// Solve the regularization path and print a summary.
    Solve(Common),
    /// Solve and write per-point supports and objective traces.
    Path(Common),
    /// Select feature sets for requested counts.
    Select(Common),
    /// Repeated-split classification of selected features.
    Evaluate(Common),
    /// Compare HIHT, AHIHT and the l2,1 baseline.
    Compare(Common),
    /// Compare path objectives with the exhaustive global optimum.
    #[command(name = "oracle-check")]
    OracleCheck(Common),
}

#[derive(Args)]
struct Common {
    /// key = value configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV (samples as rows, label column last unless `label_column` is set).
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, value_parser = ["hiht", "ahiht", "l21"])]
    algorithm: Option<String>,
    #[arg(long)]
    lambda0: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// Feature counts: `a,b,c` or `start:stop:step`.
    #[arg(long)]
    features: Option<String>,
    #[arg(long, value_parser = ["knn", "softmax", "both"])]
    classifier: Option<String>,
    #[arg(long, value_parser = ["on", "off"])]
    standardize: Option<String>,
    /// Any other config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Command {
    fn split(self) -> (&'static str, Common) {
        match self {
            Command::Synth(c) => ("synth", c),
            Command::Solve(c) => ("solve", c),
            Command::Path(c) => ("path", c),
            Command::Select(c) => ("select", c),
            Command::Evaluate(c) => ("evaluate", c),
            Command::Compare(c) => ("compare", c),
            Command::OracleCheck(c) => ("oracle-check", c),
        }
    }
}

fn settings(common: Common) -> l20fs::Result<Settings> {
    let mut settings = match &common.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    for entry in &common.set {
        let (k, v) = entry
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--set expects key=value, got {entry:?}")))?;
        settings.set(k.trim(), v.trim())?;
    }
    let flags = [
        ("data", common.data),
        ("out", common.out),
        ("seed", common.seed),
        ("algorithm", common.algorithm),
        ("lambda0", common.lambda0),
        ("rho", common.rho),
        ("gamma", common.gamma),
        ("eta", common.eta),
        ("epsilon", common.epsilon),
        ("steps", common.steps),
        ("features", common.features),
        ("classifier", common.classifier),
        ("standardize", common.standardize),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            settings.set(key, v)?;
        }
    }
    Ok(settings)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (name, common) = cli.command.split();
    let result = settings(common).and_then(|s| run_command(name, &s));
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => ExitCode::from(EXIT_USAGE),
                _ => ExitCode::from(EXIT_RUNTIME),
            }
        }
    }
}
