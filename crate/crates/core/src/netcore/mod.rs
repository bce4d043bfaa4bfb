//! Feed-forward CNN inference with per-layer activation capture.

mod container;
mod layers;
mod model;
mod tensor;

use thiserror::Error;

pub use container::{from_bytes, load_model, save_model, to_bytes, MAGIC, VERSION};
pub use layers::{conv2d, fc, flatten, maxpool, relu, softmax, ConvParams, FcParams, FlattenOrder, PoolParams};
pub use model::{
    forward, forward_visit, infer_shapes, preprocess, ActivationSet, ChannelOrder, LayerDef, LayerKind, Model,
    INPUT_SCALE, INPUT_SHAPE,
};
pub use tensor::Tensor;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("incompatible shape: {0}")]
    IncompatibleShape(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("container format: {0}")]
    Format(String),
    #[error("incompatible model: {0}")]
    IncompatibleModel(String),
    #[error("corrupt container: {0}")]
    CorruptContainer(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, NetError>;
