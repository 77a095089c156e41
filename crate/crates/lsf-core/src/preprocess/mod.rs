//! Signal conditioning: high-pass filtering, rational resampling to 100 Hz,
//! stage-1 Haar wavelet decomposition, and z-score normalization. A 10 s
//! segment comes out as a 500x2 feature tensor (approximation and detail
//! coefficients per 100 Hz timestep).

mod dwt;
mod filter;
mod normalize;
mod resample;
mod tensor;

pub use dwt::haar_dwt1;
pub use filter::{apply_filter, apply_filter_zero_phase, design_highpass, FilterSpec};
pub use normalize::{apply_norm, fit_norm_stats, invert_norm, NormMode, NormStats};
pub use resample::resample;
pub use tensor::{read_feature_cache, write_feature_cache, FeatureTensor, FEATURE_MAGIC};

use std::fmt;

#[derive(Debug)]
pub enum PreprocessError {
    /// Out-of-range or inconsistent parameter.
    InvalidParam(String),
    /// Tensor/stats dimensions disagree.
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },
    EmptySignal,
    NonFinite,
}

impl fmt::Display for PreprocessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidParam(m) => write!(f, "invalid parameter: {m}"),
            Self::ShapeMismatch { expected, found } => write!(
                f,
                "shape mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Self::EmptySignal => write!(f, "empty signal"),
            Self::NonFinite => write!(f, "non-finite value in signal"),
        }
    }
}

impl std::error::Error for PreprocessError {}

/// Knobs for the record-to-tensor pipeline.
#[derive(Debug, Clone)]
pub struct PreprocessOptions {
    pub cutoff_hz: f64,
    pub filter_order: usize,
    pub target_hz: f64,
    /// Forward-backward filtering instead of the causal single pass.
    pub zero_phase: bool,
    pub norm_mode: NormMode,
    /// Which signal of the record feeds the pipeline.
    pub channel: usize,
    pub window_seconds: f64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            cutoff_hz: 0.5,
            filter_order: 4,
            target_hz: 100.0,
            zero_phase: false,
            norm_mode: NormMode::ElementWise,
            channel: 0,
            window_seconds: 10.0,
        }
    }
}

/// Filter and resample a full record channel, then cut consecutive windows
/// and wavelet-transform each. Returns `(native_start_sample, tensor)` per
/// window; the native start index is what labeling joins on.
pub fn featurize_channel(
    signal: &[f64],
    sampling_rate: f64,
    opts: &PreprocessOptions,
) -> Result<Vec<(usize, FeatureTensor)>, PreprocessError> {
    if signal.is_empty() {
        return Err(PreprocessError::EmptySignal);
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(PreprocessError::NonFinite);
    }
    let spec = design_highpass(opts.cutoff_hz, sampling_rate, opts.filter_order)?;
    let filtered = if opts.zero_phase {
        apply_filter_zero_phase(&spec, signal)
    } else {
        apply_filter(&spec, signal)
    };
    let resampled = resample(&filtered, sampling_rate, opts.target_hz)?;

    let window_native = (opts.window_seconds * sampling_rate).round() as usize;
    let window_target = (opts.window_seconds * opts.target_hz).round() as usize;
    if window_native == 0 || window_target == 0 {
        return Err(PreprocessError::InvalidParam("window too short".into()));
    }
    let n_windows = (signal.len() / window_native).min(resampled.len() / window_target);

    let mut out = Vec::with_capacity(n_windows);
    for w in 0..n_windows {
        let chunk = &resampled[w * window_target..(w + 1) * window_target];
        let (ca, cd) = haar_dwt1(chunk)?;
        out.push((w * window_native, FeatureTensor::from_channels(&ca, &cd)));
    }
    Ok(out)
}
