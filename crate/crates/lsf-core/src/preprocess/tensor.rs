//! Fixed-shape feature tensors and their on-disk cache.
//!
//! Cache container (`LSFT`, see `container` for the envelope): payload is
//! `n_segments: u32, rows: u32, cols: u32`, then each segment's values as
//! 32-bit floats, row-major. In-memory values are f64; the cache is the
//! canonical precision boundary between pipeline stages.

use crate::container::{self, ContainerError, PayloadReader, PayloadWriter};
use std::path::Path;

pub const FEATURE_MAGIC: [u8; 4] = *b"LSFT";

/// `rows x cols` tensor; for preprocessed segments rows = timesteps, col 0 is
/// the approximation channel and col 1 the detail channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl FeatureTensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_channels(ca: &[f64], cd: &[f64]) -> Self {
        assert_eq!(ca.len(), cd.len());
        let mut data = Vec::with_capacity(ca.len() * 2);
        for (&a, &d) in ca.iter().zip(cd) {
            data.push(a);
            data.push(d);
        }
        Self {
            rows: ca.len(),
            cols: 2,
            data,
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Write a batch of equally-shaped tensors; returns the content digest.
pub fn write_feature_cache(path: &Path, tensors: &[FeatureTensor]) -> Result<u64, ContainerError> {
    let (rows, cols) = tensors
        .first()
        .map(|t| (t.rows, t.cols))
        .unwrap_or((0, 0));
    let mut w = PayloadWriter::new();
    w.u32(tensors.len() as u32);
    w.u32(rows as u32);
    w.u32(cols as u32);
    for t in tensors {
        assert_eq!((t.rows, t.cols), (rows, cols), "mixed shapes in cache");
        for &v in &t.data {
            w.f32(v as f32);
        }
    }
    container::write_file(path, FEATURE_MAGIC, &w.finish())
}

pub fn read_feature_cache(path: &Path) -> Result<Vec<FeatureTensor>, ContainerError> {
    let (payload, _) = container::read_file(path, FEATURE_MAGIC)?;
    let mut r = PayloadReader::new(&payload);
    let n = r.u32()? as usize;
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(n);
    for _ in 0..n {
        let raw = r.f32_vec(rows * cols)?;
        tensors.push(FeatureTensor {
            rows,
            cols,
            data: raw.into_iter().map(f64::from).collect(),
        });
    }
    r.done()?;
    Ok(tensors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_roundtrip_at_f32_precision() {
        let dir = std::env::temp_dir().join("lsf_tensor_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cache.lsft");
        let t = FeatureTensor {
            rows: 3,
            cols: 2,
            data: vec![1.0, -2.5, 0.125, 4.0, 0.5, 9.0],
        };
        write_feature_cache(&path, &[t.clone(), t.clone()]).unwrap();
        let back = read_feature_cache(&path).unwrap();
        assert_eq!(back.len(), 2);
        // Values chosen to be exactly representable in f32.
        assert_eq!(back[0].data, t.data);
        std::fs::remove_file(&path).unwrap();
    }
}
