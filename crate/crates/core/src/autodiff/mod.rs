//! Minimal reverse-mode differentiation and optimization substrate.

pub mod gradcheck;
pub mod layers;
pub mod params;
pub mod tape;

pub use gradcheck::{finite_difference_check, GradCheckReport};
pub use layers::{dense, elu, gru_forward, GruParams, Linear, Mlp};
pub use params::{AdamConfig, Bound, GradBuffer, ParamId, Parameter, ParameterStore};
pub use tape::{Gradients, Tape, Var};
