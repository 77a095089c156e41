//! Two stacked LSTM layers, global max pooling over time, and a dense
//! sigmoid head. Exact gradients via backpropagation through time; training
//! with Adam, seeded shuffling, and early stopping on validation average
//! precision. The pooled hidden state of the second layer doubles as the
//! feature vector handed to the SVM.

mod checkpoint;
mod model;
mod train;

pub use checkpoint::{load_model, save_model, MODEL_MAGIC};
pub use model::{
    bce_loss, global_max_pool, LstmModel, TensorSlot, BCE_CLAMP, DEFAULT_HIDDEN,
};
pub use train::{
    batch_gradients, clip_global_norm, extract_features, train, train_with_scorer, EpochStats,
    TrainConfig, TrainOutcome,
};

use std::fmt;

#[derive(Debug)]
pub enum LstmError {
    /// NaN or infinity in inputs or parameters.
    NonFinite,
    InvalidParam(String),
    /// Prediction/label arrays of different lengths.
    LengthMismatch { predictions: usize, labels: usize },
    EmptyInput,
    /// Input tensor width does not match the model's input dimension.
    DimensionMismatch { expected: usize, found: usize },
}

impl fmt::Display for LstmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonFinite => write!(f, "non-finite value in computation"),
            Self::InvalidParam(m) => write!(f, "invalid parameter: {m}"),
            Self::LengthMismatch {
                predictions,
                labels,
            } => write!(f, "{predictions} predictions vs {labels} labels"),
            Self::EmptyInput => write!(f, "empty input"),
            Self::DimensionMismatch { expected, found } => {
                write!(f, "input width {found}, model expects {expected}")
            }
        }
    }
}

impl std::error::Error for LstmError {}
