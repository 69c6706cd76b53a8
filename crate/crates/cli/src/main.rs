mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use latres::models::ModelKind;
use latres::synth::{SynthMode, Split};

/// Latent resolution prediction for images and videos.
#[derive(Parser, Debug)]
#[command(name = "latres", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Run configuration sources, applied in order: defaults (or the dataset's
/// stored config), `--config`, each `--set`, then the dedicated flags.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set epochs=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-image aggregation percentile.
    #[arg(long)]
    pub image_pct: Option<f64>,
    /// Per-video aggregation percentile.
    #[arg(long)]
    pub video_pct: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a seeded procedural corpus of ≥1080-line sources.
    Corpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        images: usize,
        #[arg(long, default_value_t = 0)]
        videos: usize,
        #[arg(long, default_value_t = 10)]
        frames: usize,
        #[arg(long, default_value_t = 1080)]
        height: usize,
        #[arg(long, default_value_t = 1080)]
        width: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build a labeled dataset (manifest and patch shards) from a corpus.
    Synth {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: SynthMode,
        /// Regression variants per source.
        #[arg(long)]
        variants: Option<usize>,
        /// bicubic or bilinear.
        #[arg(long)]
        resample: Option<String>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Train a model on a dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_parser = parse_kind)]
        model: ModelKind,
        #[arg(long)]
        out: PathBuf,
        /// sgd or adam; defaults to SGD for `mask` and Adam otherwise.
        #[arg(long)]
        optimizer: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Predict the latent resolution of an image or a directory of frames.
    Predict {
        #[arg(long)]
        model: PathBuf,
        input: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Evaluate a checkpoint on a dataset split.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "test", value_parser = parse_split)]
        split: Split,
        /// Allow evaluating on the training split.
        #[arg(long)]
        force: bool,
        /// Also score the four feature baselines; features come from this
        /// single-output checkpoint.
        #[arg(long, value_name = "CHECKPOINT")]
        baselines: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Accuracy against the image and video aggregation percentiles.
    Sweep {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "test", value_parser = parse_split)]
        split: Split,
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Export top-50 map features of a dataset split as CSV.
    Features {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "test", value_parser = parse_split)]
        split: Split,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Print the architecture, output sizes and the effective config.
    Describe {
        #[arg(long, value_parser = parse_kind, default_value = "mask-softmax")]
        model: ModelKind,
        /// Input sides to report output map sizes for.
        #[arg(long, num_args = 1.., default_values_t = [64usize, 96, 1080])]
        sizes: Vec<usize>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn parse_mode(s: &str) -> Result<SynthMode, String> {
    s.parse().map_err(|e: latres::Error| e.to_string())
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: latres::Error| e.to_string())
}

fn parse_split(s: &str) -> Result<Split, String> {
    match s {
        "train" => Ok(Split::Train),
        "test" => Ok(Split::Test),
        _ => Err(format!("unknown split {s:?} (expected train or test)")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
