//! Emotive gait synthesis: skeleton kinematics, affective and movement
//! features, an autoregressive encoder/predictor network with its own
//! reverse-mode differentiation, curriculum training and trajectory-driven
//! rollout.

pub mod affect;
pub mod autodiff;
pub mod error;
pub mod generator;
pub mod geom;
pub mod kinematics;
pub mod model;
pub mod motion_io;
pub mod movement;
pub mod rng;
pub mod rollout;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
pub use kinematics::{Gait, Pose, Skeleton, Versor};
pub use model::EmotionVector;
