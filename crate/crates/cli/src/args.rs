use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "emogait",
    version,
    about = "Emotive gait feature extraction, training and synthesis"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed for every random stream
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Log progress to stderr
    #[arg(long, short, global = true)]
    pub verbose: bool,
    /// Run single-threaded so repeated runs write identical files
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// JSON config file; flags take precedence over it
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit
    #[arg(long, global = true)]
    pub print_config: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Window BVH files into gait documents and add them to a corpus manifest
    Ingest(IngestArgs),
    /// Write per-frame affective and movement features as CSV
    Extract(ExtractArgs),
    /// Assign train/val/test tags in a corpus manifest
    Split(SplitArgs),
    /// Train a model on a corpus
    Train(TrainArgs),
    /// Score a checkpoint on a test set
    Eval(EvalArgs),
    /// Generate a gait with one emotion along a trajectory
    Generate(GenerateArgs),
    /// Generate a gait whose emotion changes linearly along a trajectory
    Transition(TransitionArgs),
    /// Generate a corpus of single-emotion and transition gaits
    Augment(AugmentArgs),
    /// Convert a gait document to BVH
    ExportBvh(ExportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// BVH files or directories holding them
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Emotion label "h,s,a,n" for every ingested clip
    #[arg(long)]
    pub emotion: String,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Gait document (.json) or BVH file
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output CSV; standard output when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Corpus directory or manifest file
    #[arg(long)]
    pub corpus: PathBuf,
    /// Fractions "train,val,test"
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus directory or manifest file
    #[arg(long)]
    pub corpus: PathBuf,
    /// Directory for checkpoints and the loss log
    #[arg(long, default_value = "run")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Continue from the last checkpoint in the output directory
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Corpus directory or manifest file; its test split is used when present
    #[arg(long)]
    pub test_set: PathBuf,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Gait document whose first frames start the rollout
    #[arg(long)]
    pub seed_gait: PathBuf,
    /// Waypoint file with one "x z" pair per line
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Base name of the written files
    #[arg(long, default_value = "generated")]
    pub name: String,
    /// Also write a BVH file
    #[arg(long)]
    pub bvh: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub rollout: RolloutArgs,
    /// Emotion "h,s,a,n"; defaults to the seed gait's label
    #[arg(long)]
    pub emotion: Option<String>,
}

#[derive(Debug, Args)]
pub struct TransitionArgs {
    #[command(flatten)]
    pub rollout: RolloutArgs,
    /// Emotion at the first generated step
    #[arg(long)]
    pub emotion: String,
    /// Emotion at the last generated step
    #[arg(long)]
    pub to_emotion: String,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Corpus whose training gaits seed the rollouts
    #[arg(long, required_unless_present = "seed_gait")]
    pub corpus: Option<PathBuf>,
    /// Seed gait documents, used in turn
    #[arg(long)]
    pub seed_gait: Vec<PathBuf>,
    /// Waypoint files; random paths are drawn when none are given
    #[arg(long)]
    pub trajectory: Vec<PathBuf>,
    /// Emotions "h,s,a,n"; random ones are drawn when none are given
    #[arg(long)]
    pub emotion: Vec<String>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub emotions: Option<usize>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Use the full-scale counts (20 trajectories, 100 emotions, 50 pairs)
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write a BVH file next to every generated gait
    #[arg(long)]
    pub bvh: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

impl Command {
    /// Applies this command's flags on top of `cfg`.
    pub fn apply_overrides(&self, cfg: &mut RunConfig) -> emogait::Result<()> {
        match self {
            Command::Ingest(a) => {
                if let Some(s) = a.stride {
                    cfg.ingest.stride = s;
                }
                if let Some(w) = a.window {
                    cfg.ingest.window = w;
                }
            }
            Command::Split(a) => {
                if let Some(text) = &a.split {
                    let (train, val, test) = emogait::motion_io::parse_fractions(text)?;
                    cfg.split = [train, val, test];
                }
            }
            Command::Train(a) => {
                if let Some(e) = a.epochs {
                    cfg.train.epochs = e;
                }
            }
            Command::Generate(GenerateArgs { rollout, .. }) | Command::Transition(TransitionArgs { rollout, .. }) => {
                if let Some(s) = rollout.steps {
                    cfg.generate.steps = s;
                }
            }
            Command::Augment(a) => {
                if a.full {
                    let seed = cfg.augment.seed;
                    cfg.augment = emogait::generator::AugmentConfig {
                        steps: cfg.augment.steps,
                        seed,
                        ..emogait::generator::AugmentConfig::full()
                    };
                }
                let aug = &mut cfg.augment;
                for (flag, field) in [
                    (a.trajectories, &mut aug.trajectories),
                    (a.emotions, &mut aug.emotions),
                    (a.pairs, &mut aug.pairs_per_trajectory),
                    (a.steps, &mut aug.steps),
                ] {
                    if let Some(v) = flag {
                        *field = v;
                    }
                }
            }
            Command::Extract(_) | Command::Eval(_) | Command::ExportBvh(_) => {}
        }
        Ok(())
    }
}
