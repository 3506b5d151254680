use thiserror::Error;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error(transparent)]
    Model(#[from] tsc_models::ModelError),
    #[error(transparent)]
    Tensor(#[from] tsc_tensor::TensorError),
    #[error(transparent)]
    Train(#[from] tsc_train::TrainError),
    #[error(transparent)]
    Data(#[from] tsc_data::DataError),
    #[error("bad attack config: {0}")]
    BadConfig(String),
}

pub type Result<T> = std::result::Result<T, AttackError>;
