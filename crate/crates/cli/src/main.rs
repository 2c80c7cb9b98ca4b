//! `eegpipe` command-line front end.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "eegpipe", version, about = "EEG seizure-detection pipeline and experiment runner")]
struct Cli {
    /// Worker threads for per-recording and per-channel work (0 = all cores).
    #[arg(long, global = true, env = "EEGPIPE_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic EDF + CSV dataset.
    Synth(SynthArgs),
    /// Montage, channel selection and LFCC features for every EDF in a directory.
    Features(FeatureArgs),
    /// Train a detector on a feature directory.
    Train(TrainArgs),
    /// Posteriors and hypothesis events for a feature directory.
    Infer(InferArgs),
    /// Score hypotheses against references; optional ROC sweep.
    Score(ScoreArgs),
    /// Run the channel-configuration experiment grid.
    Grid(GridArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    /// Generator config (JSON or key = value).
    #[arg(long, env = "EEGPIPE_SYNTH_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "EEGPIPE_OUT")]
    pub out: PathBuf,
    #[arg(long, env = "EEGPIPE_SEED")]
    pub seed: Option<u64>,
    /// Seconds per recording.
    #[arg(long, env = "EEGPIPE_DURATION")]
    pub duration: Option<f64>,
    #[arg(long, env = "EEGPIPE_RECORDINGS")]
    pub recordings: Option<usize>,
    #[arg(long, env = "EEGPIPE_GAIN")]
    pub gain: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FrontEndArgs {
    /// Montage file (`ANODE-CATHODE` per line); defaults to the 22-channel TCP montage.
    #[arg(long, env = "EEGPIPE_MONTAGE")]
    pub montage: Option<PathBuf>,
    /// Extra electrode aliases (`FROM=TO` per line).
    #[arg(long, env = "EEGPIPE_ALIASES")]
    pub aliases: Option<PathBuf>,
    /// Preset override file (`name: ch, ch, ...` per line).
    #[arg(long, env = "EEGPIPE_PRESETS_FILE")]
    pub presets_file: Option<PathBuf>,
    /// Feature config (JSON or key = value).
    #[arg(long, env = "EEGPIPE_FEATURE_CONFIG")]
    pub feature_config: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct FeatureArgs {
    #[arg(long = "in", env = "EEGPIPE_IN")]
    pub input: PathBuf,
    #[arg(long, env = "EEGPIPE_OUT")]
    pub out: PathBuf,
    #[arg(long, env = "EEGPIPE_PRESET", default_value = "ch22")]
    pub preset: String,
    #[command(flatten)]
    pub front: FrontEndArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    /// Network spec (JSON or key = value).
    #[arg(long, env = "EEGPIPE_SPEC")]
    pub spec: Option<PathBuf>,
    #[arg(long, env = "EEGPIPE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Passes over the training segments.
    #[arg(long, env = "EEGPIPE_PASSES", default_value_t = 10)]
    pub passes: usize,
    #[arg(long, env = "EEGPIPE_BATCH_SEGMENTS", default_value_t = 2)]
    pub batch_segments: usize,
    #[arg(long, env = "EEGPIPE_LEARNING_RATE", default_value_t = 3e-3)]
    pub learning_rate: f64,
    /// An epoch is a training positive when seizure covers more than this fraction.
    #[arg(long, env = "EEGPIPE_LABEL_FRACTION", default_value_t = 0.5)]
    pub label_fraction: f64,
    #[arg(long, env = "EEGPIPE_LABEL", default_value = "seiz")]
    pub label: String,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long, env = "EEGPIPE_FEATURES")]
    pub features: PathBuf,
    /// Directory of `<stem>.csv` annotations matching the feature files.
    #[arg(long, env = "EEGPIPE_LABELS")]
    pub labels: PathBuf,
    /// Checkpoint path.
    #[arg(long, env = "EEGPIPE_OUT")]
    pub out: PathBuf,
    /// Override the spec's low-channel adaptation (strict, preserve_dims, drop_layers).
    #[arg(long, env = "EEGPIPE_ADAPTATION")]
    pub adaptation: Option<String>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
pub struct PostArgs {
    #[arg(long, env = "EEGPIPE_THRESHOLD", default_value_t = 0.5)]
    pub threshold: f64,
    /// Median filter width in epochs (odd).
    #[arg(long, env = "EEGPIPE_SMOOTHING", default_value_t = 3)]
    pub smoothing: usize,
    #[arg(long, env = "EEGPIPE_MIN_DURATION", default_value_t = 3.0)]
    pub min_duration: f64,
    #[arg(long, env = "EEGPIPE_MERGE_GAP", default_value_t = 1.0)]
    pub merge_gap: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct InferArgs {
    #[arg(long, env = "EEGPIPE_CKPT")]
    pub ckpt: PathBuf,
    #[arg(long, env = "EEGPIPE_FEATURES")]
    pub features: PathBuf,
    #[arg(long, env = "EEGPIPE_OUT")]
    pub out: PathBuf,
    /// Expected network spec; inference fails if its hash differs from the checkpoint's.
    #[arg(long, env = "EEGPIPE_SPEC")]
    pub spec: Option<PathBuf>,
    #[command(flatten)]
    pub post: PostArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ScoreArgs {
    #[arg(long = "ref", env = "EEGPIPE_REF")]
    pub reference: PathBuf,
    #[arg(long, env = "EEGPIPE_HYP")]
    pub hyp: PathBuf,
    /// Threshold grid for the ROC sweep; needs `<stem>.post.csv` posteriors.
    #[arg(long, env = "EEGPIPE_ROC")]
    pub roc: Option<PathBuf>,
    /// Output directory (default: `<hyp>/score`).
    #[arg(long, env = "EEGPIPE_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, env = "EEGPIPE_LABEL", default_value = "seiz")]
    pub label: String,
    #[command(flatten)]
    pub post: PostArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct GridArgs {
    /// Training dataset: EDF files with `<stem>.csv` annotations.
    #[arg(long, env = "EEGPIPE_TRAIN")]
    pub train: PathBuf,
    /// Held-out dataset in the same layout.
    #[arg(long, env = "EEGPIPE_TEST")]
    pub test: PathBuf,
    #[arg(long, env = "EEGPIPE_OUT")]
    pub out: PathBuf,
    #[arg(
        long,
        env = "EEGPIPE_PRESETS",
        value_delimiter = ',',
        default_value = "ch22,ch20,ch16,ch8,ch4,ch2"
    )]
    pub presets: Vec<String>,
    /// Adaptations to run; drop_layers rows are kept only when they change the layer count.
    #[arg(long, env = "EEGPIPE_STRATEGIES", value_delimiter = ',', default_value = "preserve_dims,drop_layers")]
    pub strategies: Vec<String>,
    /// Threshold grid file for the ROC sweeps (default: 21 evenly spaced points).
    #[arg(long, env = "EEGPIPE_ROC")]
    pub roc: Option<PathBuf>,
    #[command(flatten)]
    pub front: FrontEndArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub post: PostArgs,
}

/// Errors caused by invalid invocations rather than bad data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<eegpipe::Error>() {
            return if e.is_numeric() { 3 } else { 2 };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: cannot configure {} threads: {e}", cli.threads);
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Features(a) => commands::features(a),
        Command::Train(a) => commands::train(a),
        Command::Infer(a) => commands::infer(a),
        Command::Score(a) => commands::score(a),
        Command::Grid(a) => commands::grid(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
