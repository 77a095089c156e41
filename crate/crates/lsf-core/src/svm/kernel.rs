//! Radial basis function kernel.

use super::SvmError;
use crate::linalg::{sq_dist, Mat};

/// `K(x, z) = exp(-gamma * ||x - z||^2)`.
pub fn rbf_kernel(x: &[f64], z: &[f64], gamma: f64) -> Result<f64, SvmError> {
    if x.len() != z.len() {
        return Err(SvmError::DimensionMismatch {
            expected: x.len(),
            found: z.len(),
        });
    }
    Ok((-gamma * sq_dist(x, z)).exp())
}

/// Full kernel Gram matrix of a feature set (test and reference use; the
/// solver itself caches rows on demand).
pub fn kernel_matrix(features: &Mat, gamma: f64) -> Mat {
    let n = features.rows;
    let mut k = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = (-gamma * sq_dist(features.row(i), features.row(j))).exp();
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    k
}

/// The "scale" default: `1 / (dim * var)` where `var` is the variance of the
/// flattened feature matrix. Falls back to `1 / dim` for degenerate inputs.
pub fn scale_gamma(features: &Mat) -> f64 {
    let d = features.cols.max(1);
    let n = features.data.len();
    if n == 0 {
        return 1.0 / d as f64;
    }
    let mean: f64 = features.data.iter().sum::<f64>() / n as f64;
    let var: f64 = features.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0 / d as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn self_similarity_is_one() {
        let x = [0.3, -1.2, 7.0];
        assert_eq!(rbf_kernel(&x, &x, 0.7).unwrap(), 1.0);
    }

    #[test]
    fn symmetry() {
        let x = [0.1, 0.9];
        let z = [-2.0, 3.5];
        assert_eq!(
            rbf_kernel(&x, &z, 1.3).unwrap(),
            rbf_kernel(&z, &x, 1.3).unwrap()
        );
    }

    #[test]
    fn hand_value() {
        // ||x - z||^2 = 2, gamma = 0.5 -> e^{-1}.
        let v = rbf_kernel(&[0.0, 0.0], &[1.0, 1.0], 0.5).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-12);
        assert!((v - 0.36787944117144233).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(rbf_kernel(&[1.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn gram_matrix_is_positive_semidefinite() {
        // Smallest eigenvalue via inverse-free check: x^T K x >= -1e-8 for
        // random x, plus a power-iteration estimate of the minimum eigenvalue.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let n = rng.gen_range(2..20);
            let d = rng.gen_range(1..5);
            let mut feats = Mat::zeros(n, d);
            for v in feats.data.iter_mut() {
                *v = rng.gen::<f64>() * 4.0 - 2.0;
            }
            let k = kernel_matrix(&feats, 0.8);
            for _ in 0..50 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
                let mut kx = vec![0.0; n];
                k.matvec_add(&x, &mut kx);
                let quad: f64 = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
                assert!(quad >= -1e-8, "x^T K x = {quad}");
            }
        }
    }
}
