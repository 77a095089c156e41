//! Stage-1 Haar discrete wavelet transform.
//!
//! Non-overlapping pair alignment: `cA1[k] = (s[2k] + s[2k+1]) / sqrt(2)`,
//! `cD1[k] = (s[2k] - s[2k+1]) / sqrt(2)`. This keeps the transform
//! orthonormal, so `||cA1||^2 + ||cD1||^2 = ||s||^2` exactly. Odd-length
//! inputs repeat the final sample.

use super::PreprocessError;

/// Decompose a signal into approximation and detail coefficients, each of
/// length `ceil(len / 2)`.
pub fn haar_dwt1(signal: &[f64]) -> Result<(Vec<f64>, Vec<f64>), PreprocessError> {
    if signal.is_empty() {
        return Err(PreprocessError::EmptySignal);
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let half = signal.len().div_ceil(2);
    let mut ca = Vec::with_capacity(half);
    let mut cd = Vec::with_capacity(half);
    let mut i = 0;
    while i + 1 < signal.len() {
        ca.push((signal[i] + signal[i + 1]) * inv_sqrt2);
        cd.push((signal[i] - signal[i + 1]) * inv_sqrt2);
        i += 2;
    }
    if i < signal.len() {
        let last = signal[i];
        ca.push((last + last) * inv_sqrt2);
        cd.push(0.0);
    }
    Ok((ca, cd))
}
