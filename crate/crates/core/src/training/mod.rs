//! Loss, Adam, and the mini-batch training loop with early stopping.

mod adam;
mod config;
mod fit;

pub use adam::{adam_step, clip_grad_norm, AdamState};
pub use config::TrainConfig;
pub use fit::{fit, mse_loss, train, EpochRecord, TrainHistory};
