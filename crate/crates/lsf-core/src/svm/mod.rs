//! Soft-margin SVM with an RBF kernel, trained by sequential minimal
//! optimization on the dual with per-class penalty weights. Public labels are
//! {0, 1}; the solver maps them to {-1, +1} internally.

mod grid;
mod kernel;
mod persist;
pub mod reference;
mod smo;

pub use grid::{grid_search, GridPoint, GridSearchOptions, GridSearchResult};
pub use kernel::{kernel_matrix, rbf_kernel, scale_gamma};
pub use persist::{load_svm, save_svm, SVM_MAGIC};
pub use smo::{decision_score, kkt_violation, predict, train, SvmModel};

use std::fmt;

#[derive(Debug)]
pub enum SvmError {
    /// Training set has only one class.
    SingleClass,
    DimensionMismatch { expected: usize, found: usize },
    InvalidParam(String),
    NonFinite,
    /// Feature rows and label count disagree.
    LengthMismatch { features: usize, labels: usize },
}

impl fmt::Display for SvmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SingleClass => write!(f, "training set must contain both classes"),
            Self::DimensionMismatch { expected, found } => {
                write!(f, "feature dimension {found}, expected {expected}")
            }
            Self::InvalidParam(m) => write!(f, "invalid parameter: {m}"),
            Self::NonFinite => write!(f, "non-finite feature value"),
            Self::LengthMismatch { features, labels } => {
                write!(f, "{features} feature rows vs {labels} labels")
            }
        }
    }
}

impl std::error::Error for SvmError {}

/// Solver configuration. `class_weight` scales the box constraint per class:
/// a point of class k is bounded by `c * class_weight[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: f64,
    /// (weight for label 0, weight for label 1).
    pub class_weight: (f64, f64),
    /// Stopping tolerance on the maximal KKT violation.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Kernel row cache budget in mebibytes.
    pub cache_mb: usize,
    /// Iterations between shrinking passes; 0 picks `min(n, 1000)`.
    pub shrink_interval: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: 1.0,
            class_weight: (1.0, 1.0),
            tolerance: 1e-3,
            max_iterations: 10_000_000,
            cache_mb: 256,
            shrink_interval: 0,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !self.c.is_finite() || self.c <= 0.0 {
            return Err(SvmError::InvalidParam("C must be > 0".into()));
        }
        if !self.gamma.is_finite() || self.gamma <= 0.0 {
            return Err(SvmError::InvalidParam("gamma must be > 0".into()));
        }
        if self.class_weight.0 < 0.0 || self.class_weight.1 < 0.0 {
            return Err(SvmError::InvalidParam("class weights must be >= 0".into()));
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(SvmError::InvalidParam("tolerance must be > 0".into()));
        }
        Ok(())
    }
}
