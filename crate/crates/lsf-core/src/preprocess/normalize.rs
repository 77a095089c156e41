//! Z-score normalization fitted on training tensors only; the fitted stats
//! are reused verbatim for validation, test, and future data.

use super::tensor::FeatureTensor;
use super::PreprocessError;
use crate::container::{self, ContainerError, PayloadReader, PayloadWriter};
use std::path::Path;

pub const NORM_MAGIC: [u8; 4] = *b"LSFN";
pub const NORM_EPSILON: f64 = 1e-8;

/// Element-wise keeps one (mean, std) per tensor position; channel mode keeps
/// one scalar pair per channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    ElementWise,
    Channel,
}

impl NormMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "elementwise" => Some(Self::ElementWise),
            "channel" => Some(Self::Channel),
            _ => None,
        }
    }
    pub fn name(self) -> &'static str {
        match self {
            Self::ElementWise => "elementwise",
            Self::Channel => "channel",
        }
    }
}

/// Fitted normalization statistics, same shape as the tensors they apply to.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mode: NormMode,
    pub mean: FeatureTensor,
    pub std: FeatureTensor,
    pub epsilon: f64,
}

/// Population mean and standard deviation across the training tensors at each
/// (timestep, channel) position, or per channel in channel mode.
pub fn fit_norm_stats(
    tensors: &[FeatureTensor],
    mode: NormMode,
) -> Result<NormStats, PreprocessError> {
    if tensors.len() < 2 {
        return Err(PreprocessError::InvalidParam(
            "fitting needs at least 2 tensors".into(),
        ));
    }
    let (rows, cols) = (tensors[0].rows, tensors[0].cols);
    for t in tensors {
        if (t.rows, t.cols) != (rows, cols) {
            return Err(PreprocessError::ShapeMismatch {
                expected: (rows, cols),
                found: (t.rows, t.cols),
            });
        }
    }
    let n = tensors.len() as f64;
    let mut mean = FeatureTensor::zeros(rows, cols);
    for t in tensors {
        for (m, &v) in mean.data.iter_mut().zip(&t.data) {
            *m += v;
        }
    }
    for m in mean.data.iter_mut() {
        *m /= n;
    }
    let mut var = FeatureTensor::zeros(rows, cols);
    for t in tensors {
        for ((s, &v), &m) in var.data.iter_mut().zip(&t.data).zip(&mean.data) {
            let d = v - m;
            *s += d * d;
        }
    }
    let mut std = FeatureTensor::zeros(rows, cols);
    for (s, &v) in std.data.iter_mut().zip(&var.data) {
        *s = (v / n).sqrt();
    }

    if mode == NormMode::Channel {
        // Collapse to per-channel scalars (pooled over positions and tensors),
        // then broadcast back to the tensor shape.
        for c in 0..cols {
            let mut acc_mean = 0.0;
            for r in 0..rows {
                acc_mean += mean.data[r * cols + c];
            }
            acc_mean /= rows as f64;
            let mut acc_var = 0.0;
            for t in tensors {
                for r in 0..rows {
                    let d = t.data[r * cols + c] - acc_mean;
                    acc_var += d * d;
                }
            }
            let sd = (acc_var / (n * rows as f64)).sqrt();
            for r in 0..rows {
                mean.data[r * cols + c] = acc_mean;
                std.data[r * cols + c] = sd;
            }
        }
    }

    Ok(NormStats {
        mode,
        mean,
        std,
        epsilon: NORM_EPSILON,
    })
}

/// `(x - mean) / max(std, epsilon)`, element-wise.
pub fn apply_norm(
    stats: &NormStats,
    tensor: &FeatureTensor,
) -> Result<FeatureTensor, PreprocessError> {
    if (tensor.rows, tensor.cols) != (stats.mean.rows, stats.mean.cols) {
        return Err(PreprocessError::ShapeMismatch {
            expected: (stats.mean.rows, stats.mean.cols),
            found: (tensor.rows, tensor.cols),
        });
    }
    let mut out = tensor.clone();
    for ((v, &m), &s) in out.data.iter_mut().zip(&stats.mean.data).zip(&stats.std.data) {
        *v = (*v - m) / s.max(stats.epsilon);
    }
    Ok(out)
}

/// Inverse of `apply_norm` for stats with std above epsilon.
pub fn invert_norm(
    stats: &NormStats,
    tensor: &FeatureTensor,
) -> Result<FeatureTensor, PreprocessError> {
    if (tensor.rows, tensor.cols) != (stats.mean.rows, stats.mean.cols) {
        return Err(PreprocessError::ShapeMismatch {
            expected: (stats.mean.rows, stats.mean.cols),
            found: (tensor.rows, tensor.cols),
        });
    }
    let mut out = tensor.clone();
    for ((v, &m), &s) in out.data.iter_mut().zip(&stats.mean.data).zip(&stats.std.data) {
        *v = *v * s.max(stats.epsilon) + m;
    }
    Ok(out)
}

impl NormStats {
    pub fn save(&self, path: &Path) -> Result<u64, ContainerError> {
        let mut w = PayloadWriter::new();
        w.str(self.mode.name());
        w.u32(self.mean.rows as u32);
        w.u32(self.mean.cols as u32);
        w.f64(self.epsilon);
        w.f64_slice(&self.mean.data);
        w.f64_slice(&self.std.data);
        container::write_file(path, NORM_MAGIC, &w.finish())
    }

    pub fn load(path: &Path) -> Result<Self, ContainerError> {
        let (payload, _) = container::read_file(path, NORM_MAGIC)?;
        let mut r = PayloadReader::new(&payload);
        let mode = NormMode::parse(&r.str()?)
            .ok_or_else(|| ContainerError::Malformed("unknown norm mode".into()))?;
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let epsilon = r.f64()?;
        let mean = FeatureTensor {
            rows,
            cols,
            data: r.f64_vec(rows * cols)?,
        };
        let std = FeatureTensor {
            rows,
            cols,
            data: r.f64_vec(rows * cols)?,
        };
        r.done()?;
        Ok(Self {
            mode,
            mean,
            std,
            epsilon,
        })
    }
}
