//! Training: Glorot initialization, Adam, the epoch loop with plateau LR
//! scheduling and best-loss checkpointing, and transfer fine-tuning.

mod adam;
mod config;
mod error;
mod init;
mod loop_;

pub use adam::{AdamState, ADAM_EPS};
pub use config::{LossKind, LrReduce, Monitor, TrainConfig};
pub use error::{Result, TrainError};
pub use init::{glorot_uniform_init, glorot_uniform_init_where};
pub use loop_::{fine_tune, loss_node, param_grads, train, Batcher, EpochStats, Plateau, TrainReport};
