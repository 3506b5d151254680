//! Model zoo: declarative specs, parameter builders, tape-based forward
//! passes, receptive-field arithmetic, probability ensembling, and the
//! `.tscm` serialization format.

mod build;
mod encode;
mod ensemble;
mod error;
mod forward;
mod io;
mod rf;
mod spec;
mod state;

pub use build::{build, build_fcn, build_inception, build_mlp, build_resnet};
pub use encode::{batch_tensor, dataset_tensor, one_hot, single_tensor};
pub use ensemble::ensemble_predict;
pub use error::{ModelError, Result};
pub use forward::{argmax_rows, bn_key, forward, BnSet, ForwardOpts, ForwardPass};
pub use io::{from_bytes, load_model, save_model, to_bytes};
pub use rf::receptive_field;
pub use spec::{parse_kv, Architecture, Head, InceptionParams, ModelSpec};
pub use state::{ModelState, TrainMeta};
