use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] tsc_models::ModelError),
    #[error(transparent)]
    Tensor(#[from] tsc_tensor::TensorError),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("NaN gradient for parameter {0}")]
    NanGradient(String),
    #[error("training diverged (loss became non-finite); last finite epoch {last_finite_epoch}")]
    Diverged { last_finite_epoch: usize },
    #[error("transfer requires a GAP-terminated architecture; {arch} is not")]
    NotTransferable { arch: &'static str },
}

pub type Result<T> = std::result::Result<T, TrainError>;
