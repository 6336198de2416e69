//! Dense autoencoder trained from scratch: Xavier initialization, forward
//! pass, backpropagation of the MSE + L1-activity loss, and Adam.

mod adam;
mod backward;
mod init;
mod loss;
mod model;
mod reconstruct;
mod train;

pub use adam::{adam_update, AdamState};
pub use backward::{backward, Gradients};
pub use init::init_xavier;
pub use loss::{loss, loss_parts, LossParts};
pub use model::{forward, Activation, Architecture, AutoencoderModel, ForwardPass, Layer, LayerSpec};
pub use reconstruct::{reconstruct_series, reconstruct_series_with_norm};
pub use train::{evaluate, train, train_with_progress, EpochRecord, TrainConfig, TrainReport};
