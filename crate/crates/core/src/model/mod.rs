//! The emotive gait model: configuration, input assembly, network and
//! losses.

pub mod config;
pub mod emotion;
pub mod inputs;
pub mod losses;
pub mod network;
pub mod objective;

pub use config::{LossWeights, ModelConfig};
pub use emotion::{EmotionVector, EMOTION_NAMES};
pub use inputs::{assemble_window, gait_features, EncoderInputs, FeatureStats, FrameFeatures, LocalFrame};
pub use losses::{loss_affective, loss_foot, loss_motion, loss_pose, loss_root, total_loss, LossParts};
pub use network::{normalize_quad, EmotiveNet, Latent, Prediction, PredictionValues};
pub use objective::{Objective, Target};
