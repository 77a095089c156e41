//! Single-lead ECG classification with an LSTM-SVM fusion model (LSF).
//!
//! The crate covers the full pipeline: parsing waveform-database records
//! (`wfdb`), signal conditioning into fixed 10-second feature tensors
//! (`preprocess`), inter-patient dataset construction (`dataset`), a compact
//! two-layer LSTM trained with backpropagation through time (`lstm`), an
//! RBF-kernel soft-margin SVM trained on the pooled LSTM features (`svm`),
//! imbalance-aware evaluation (`metrics`), and resumable on-disk stage
//! orchestration (`pipeline`).

pub mod container;
pub mod dataset;
pub mod digest;
pub mod linalg;
pub mod lstm;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod svm;
pub mod synth;
pub mod wfdb;
