use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mnn_cli::commands::{self, Predictor};
use mnn_cli::ExperimentConfig;
use mnn_core::{emit_report, load_params, ReportFormat};

/// Memory neuron network trajectory prediction experiments.
///
/// Every command reads a TOML experiment config. Any config key can be
/// overridden from the environment with the MNN_ prefix and `__` between
/// nested keys, e.g. MNN_LEARNING__ETA=0.001 or MNN_DATASET__FLEET__COUNT=5.
/// Set RUST_LOG=info for progress messages.
#[derive(Parser)]
#[command(name = "mnn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; created if missing. Defaults to the config's out_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config = config.with_seed(seed);
        }
        let out = self.out.clone().unwrap_or_else(|| config.out_dir.clone());
        Ok((config, out))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    TableText,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic fleet: writes fleet.csv and manifest.json.
    Generate(Common),
    /// Train one shared network on the training split: writes params.txt,
    /// training_log.jsonl and config.json, and prints the config fingerprint.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from saved parameters instead of a fresh initialization.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Forecast the test split: writes overlays/<vehicle>.csv.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Trained parameters. Defaults to <out>/params.txt.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Use the constant-velocity baseline instead of the network.
        #[arg(long)]
        baseline: bool,
    },
    /// Score overlay files: writes report.txt and report.json.
    Eval {
        /// Experiment config to echo into the report.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed in the echo.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; created if missing.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overlay file or directory of overlay files with predictions.
        #[arg(long)]
        predictions: PathBuf,
        /// Overlay files holding the ground truth. Defaults to the truth
        /// columns of the prediction overlays.
        #[arg(long)]
        truths: Option<PathBuf>,
        /// Report format printed to stdout.
        #[arg(long, value_enum, default_value = "table-text")]
        format: FormatArg,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(common) => {
            let (config, out) = common.load()?;
            let n = commands::cmd_generate(&config, &out)?;
            println!("wrote {n} vehicles to {}", out.join(commands::FLEET_CSV).display());
        }
        Command::Train { common, resume } => {
            let (config, out) = common.load()?;
            let outcome = commands::cmd_train(&config, &out, resume.as_deref())?;
            println!("fingerprint {}", outcome.fingerprint);
            println!("wrote {}", out.join(commands::PARAMS_FILE).display());
        }
        Command::Predict { common, params, baseline } => {
            let (config, out) = common.load()?;
            let (predictor, params) = if baseline {
                (Predictor::ConstantVelocity, None)
            } else {
                let path = params.unwrap_or_else(|| out.join(commands::PARAMS_FILE));
                (Predictor::Mnn, Some(load_params(&path)?))
            };
            let n = commands::cmd_predict(&config, params.as_ref(), predictor, &out)?;
            println!("wrote {n} forecast windows to {}", out.join(commands::OVERLAY_DIR).display());
        }
        Command::Eval {
            config,
            seed,
            out,
            predictions,
            truths,
            format,
        } => {
            let config = match config {
                Some(path) => {
                    let c = ExperimentConfig::load(Path::new(&path))?;
                    Some(match seed {
                        Some(s) => c.with_seed(s),
                        None => c,
                    })
                }
                None => None,
            };
            let report = commands::cmd_eval(&predictions, truths.as_deref(), config.as_ref(), &out)?;
            let format = match format {
                FormatArg::TableText => ReportFormat::TableText,
                FormatArg::Structured => ReportFormat::Structured,
            };
            print!("{}", emit_report(&report, format));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
