//! Shared inputs for the benchmarks.

use emogait::model::{EncoderInputs, ModelConfig, Target};
use emogait::rollout::GaitModel;
use emogait::synthetic;
use emogait::trainer::{self, TrainConfig};
use emogait::{Gait, Result};

/// Frames of context before the predicted frame.
pub const CONTEXT: usize = 25;

/// An untrained model with one encoder window and its prediction target.
pub struct Sample {
    pub gaits: Vec<Gait>,
    pub model: GaitModel,
    pub inputs: EncoderInputs,
    pub target: Target,
}

pub fn sample(model_cfg: &ModelConfig) -> Result<Sample> {
    let gaits = synthetic::fixture_gaits(60)?;
    let cfg = TrainConfig::default();
    let truth = trainer::corpus_features(&gaits, &cfg.contact)?;
    let model = trainer::init_model(model_cfg, &cfg, &gaits[0].skeleton, &truth)?;
    let inputs = model.window_inputs(&truth[0][..CONTEXT])?;
    let target = Target::new(&truth[0][CONTEXT], &inputs.frame, &model.objective.feet);
    Ok(Sample {
        gaits,
        model,
        inputs,
        target,
    })
}
