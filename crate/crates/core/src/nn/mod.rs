//! Small dense reverse-mode differentiation core.
//!
//! Enough machinery for the placement networks: affine stacks, multi-head
//! graph attention, contrastive and MSE losses, and Adam.

pub mod layers;
pub mod loss;
pub mod optim;
pub mod params;
pub mod tape;
mod tensor;

pub use layers::{GatLayer, GatOutput, Linear, Mlp};
pub use loss::{contrastive_loss, contrastive_value, mse, mse_value};
pub use optim::{Adam, L2Mode};
pub use params::{ParamId, ParamSet};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor2;
