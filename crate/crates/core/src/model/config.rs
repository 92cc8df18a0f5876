use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Network shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Emotion vector length `C`.
    pub emotions: usize,
    /// Joint count `J`.
    pub joints: usize,
    /// Input window length `T`.
    pub window: usize,
    /// Frames predicted per call.
    pub predict_steps: usize,
    pub h1: usize,
    pub h2: usize,
    pub h3: usize,
    pub h4: usize,
    pub enc1_depth: usize,
    pub enc2_depth: usize,
    pub pred_versor_depth: usize,
    /// Adds the last input frame's versors to the raw versor output, so the
    /// predictor learns a per-frame change instead of an absolute pose.
    pub versor_residual: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            emotions: 4,
            joints: 21,
            window: 60,
            predict_steps: 1,
            h1: 32,
            h2: 32,
            h3: 256,
            h4: 32,
            enc1_depth: 3,
            enc2_depth: 3,
            pred_versor_depth: 2,
            versor_residual: false,
        }
    }
}

impl ModelConfig {
    /// A small network for tests and quick experiments.
    pub fn tiny() -> Self {
        ModelConfig {
            window: 18,
            h1: 16,
            h2: 16,
            h3: 64,
            h4: 6,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("emotions", self.emotions),
            ("window", self.window),
            ("predict_steps", self.predict_steps),
            ("h1", self.h1),
            ("h2", self.h2),
            ("h3", self.h3),
            ("enc1_depth", self.enc1_depth),
            ("enc2_depth", self.enc2_depth),
            ("pred_versor_depth", self.pred_versor_depth),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return Err(Error::validation(format!("model config: {name} must be positive")));
        }
        if self.joints < 2 {
            return Err(Error::validation("model config: need at least 2 joints"));
        }
        if self.h4 < 3 {
            return Err(Error::validation("model config: h4 must be at least 3"));
        }
        Ok(())
    }

    /// Width of the per-frame versor block, `4(J-1)`.
    pub fn versor_dim(&self) -> usize {
        4 * (self.joints - 1)
    }

    /// Sizes of the three contiguous parts of the root latent.
    pub fn root_split(&self) -> [usize; 3] {
        let base = self.h4 / 3;
        let extra = self.h4 % 3;
        [base + usize::from(extra > 0), base + usize::from(extra > 1), base]
    }
}

/// Relative weights of the loss terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub motion: f64,
    pub pose: f64,
    pub affective: f64,
    pub root: f64,
    pub foot: f64,
    /// Weight of the unit-norm penalty on raw predicted versors.
    pub versor: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            motion: 1.0,
            pose: 1.0,
            affective: 1.0,
            root: 1.0,
            foot: 1.0,
            versor: 0.01,
        }
    }
}
