use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use prediagnose::imageproc::Augmentation;
use prediagnose::pipeline::CardioTask;

#[derive(Debug, Parser)]
#[command(
    name = "prediagnose",
    version,
    about = "Multimodal pre-diagnostic toolkit"
)]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "PREDIAGNOSE_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Train a model on a dataset directory.
    Train(TrainArgs),
    /// Classify one input.
    Predict(PredictArgs),
    /// Evaluate a model on a labelled dataset.
    Eval(EvalArgs),
    /// Combine per-module evaluation reports into one document.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Thermal leg images (PGM) with and without a clot hotspot.
    Thermal(SynthThermalArgs),
    /// Heart or lung recordings (WAV).
    Cardio(SynthCardioArgs),
}

#[derive(Debug, Args)]
pub struct SynthThermalArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub positive_frac: f64,
    #[arg(long)]
    pub seed: u64,
    /// Write each sample as a directory of K frames.
    #[arg(long, value_name = "K")]
    pub frames: Option<usize>,
    /// INI file whose [synththermal] section overrides the generator.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthCardioArgs {
    /// `lung` or `heart`.
    #[arg(long)]
    pub task: CardioTask,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Sample rate in Hz (4000 or 8000).
    #[arg(long, default_value_t = 4000)]
    pub rate: u32,
    /// Seconds per recording.
    #[arg(long, default_value_t = 6.0)]
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Modality {
    Clot,
    Cardio,
    Skin,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Clot => "clot",
            Modality::Cardio => "cardio",
            Modality::Skin => "skin",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(s, false).ok()
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(value_enum)]
    pub modality: Modality,
    #[arg(long)]
    pub data: PathBuf,
    /// Pipeline configuration (INI); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Skin only: add an augmented copy of every image, e.g. `flip_h`,
    /// `rotate:20`, `zoom:1.2`, `brightness:0.8`. Repeatable; replaces
    /// `pipeline.skin_augment` from the config.
    #[arg(long, value_name = "SPEC")]
    pub augment: Vec<Augmentation>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "sequence"]))]
pub struct PredictArgs {
    #[arg(value_enum)]
    pub modality: Modality,
    #[arg(long)]
    pub model: PathBuf,
    /// One image or WAV file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Directory of thermal frames, classified with sliding-window voting.
    #[arg(long)]
    pub sequence: Option<PathBuf>,
    /// Voting window for --sequence; defaults to the one the model was
    /// trained with.
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Retrain with the model's configuration on K stratified folds and
    /// report pooled out-of-fold predictions.
    #[arg(long, value_name = "K")]
    pub kfold: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the ROC curve as `fpr,tpr` rows.
    #[arg(long, value_name = "FILE")]
    pub roc_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}
