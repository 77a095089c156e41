//! Rational polyphase resampling with a Kaiser-windowed sinc anti-aliasing
//! low-pass (beta = 5.0, ten input taps per output sample). Polyphase
//! branches are normalized to unit DC gain, so a constant signal passes
//! through exactly away from the edges.

use super::PreprocessError;

const KAISER_BETA: f64 = 5.0;
const TAPS_PER_PHASE: usize = 10;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Zeroth-order modified Bessel function of the first kind (series expansion).
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half_x = x / 2.0;
    for k in 1..40 {
        term *= (half_x / k as f64) * (half_x / k as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Build the polyphase branches: `branches[p][k]` multiplies `x[q0 - k]`
/// when the output phase is `p`. Each branch sums to exactly 1.
fn design_branches(up: usize, down: usize) -> Vec<Vec<f64>> {
    let n_taps = TAPS_PER_PHASE * up + 1;
    let center = (n_taps - 1) / 2; // = 5 * up
    let cutoff = std::f64::consts::PI * (1.0 / up.max(down) as f64);
    let half = center as f64;

    let mut proto = vec![0.0; n_taps];
    for (n, tap) in proto.iter_mut().enumerate() {
        let m = n as f64 - half;
        let ideal = if m == 0.0 {
            cutoff / std::f64::consts::PI
        } else {
            (cutoff * m).sin() / (std::f64::consts::PI * m)
        };
        let w = bessel_i0(KAISER_BETA * (1.0 - (m / half) * (m / half)).max(0.0).sqrt())
            / bessel_i0(KAISER_BETA);
        *tap = ideal * w;
    }

    let mut branches = vec![Vec::new(); up];
    for (p, branch) in branches.iter_mut().enumerate() {
        let mut j = p;
        while j < n_taps {
            branch.push(proto[j]);
            j += up;
        }
        let s: f64 = branch.iter().sum();
        for t in branch.iter_mut() {
            *t /= s;
        }
    }
    branches
}

/// Resample a signal from `from_hz` to `to_hz` (both must be integral, with
/// a reduced ratio no larger than 1000). Output length is
/// `ceil(len * to / from)`; output sample `n` approximates the input at time
/// `n * from / to` samples. Edges see an implicit zero padding.
pub fn resample(signal: &[f64], from_hz: f64, to_hz: f64) -> Result<Vec<f64>, PreprocessError> {
    if signal.is_empty() {
        return Err(PreprocessError::EmptySignal);
    }
    if !from_hz.is_finite() || from_hz <= 0.0 || !to_hz.is_finite() || to_hz <= 0.0 {
        return Err(PreprocessError::InvalidParam("rates must be positive".into()));
    }
    let from_i = from_hz.round();
    let to_i = to_hz.round();
    if (from_hz - from_i).abs() > 1e-9 || (to_hz - to_i).abs() > 1e-9 {
        return Err(PreprocessError::InvalidParam(format!(
            "non-integral rate pair {from_hz}/{to_hz} not supported"
        )));
    }
    let g = gcd(from_i as u64, to_i as u64);
    let up = (to_i as u64 / g) as usize;
    let down = (from_i as u64 / g) as usize;
    if up > 1000 || down > 1000 {
        return Err(PreprocessError::InvalidParam(format!(
            "reduced ratio {up}/{down} too large"
        )));
    }
    if up == 1 && down == 1 {
        return Ok(signal.to_vec());
    }

    let branches = design_branches(up, down);
    let out_len = (signal.len() * up).div_ceil(down);
    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len {
        let m = n * down; // position in upsampled time, before delay shift
        let p = m % up;
        let q0 = m / up + TAPS_PER_PHASE / 2;
        let branch = &branches[p];
        let mut acc = 0.0;
        for (k, &tap) in branch.iter().enumerate() {
            if let Some(q) = q0.checked_sub(k) {
                if q < signal.len() {
                    acc += tap * signal[q];
                }
            }
        }
        out.push(acc);
    }
    Ok(out)
}
