//! Butterworth high-pass IIR design (bilinear transform with prewarping) and
//! difference-equation application.

use super::PreprocessError;

/// Minimal complex arithmetic for the pole/zero manipulation in the design
/// routine; not exposed.
#[derive(Debug, Clone, Copy)]
struct C {
    re: f64,
    im: f64,
}

impl C {
    const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }
    fn add(self, o: C) -> C {
        C::new(self.re + o.re, self.im + o.im)
    }
    fn sub(self, o: C) -> C {
        C::new(self.re - o.re, self.im - o.im)
    }
    fn mul(self, o: C) -> C {
        C::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
    fn div(self, o: C) -> C {
        let d = o.re * o.re + o.im * o.im;
        C::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }
    fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Monic polynomial with the given complex roots; coefficients in descending
/// powers.
fn poly_from_roots(roots: &[C]) -> Vec<C> {
    let mut coeffs = vec![C::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![C::new(0.0, 0.0); coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] = next[i].add(c);
            next[i + 1] = next[i + 1].sub(c.mul(r));
        }
        coeffs = next;
    }
    coeffs
}

/// Designed IIR filter: the difference equation
/// `y[t] = sum_j b[j] x[t-j] - sum_{j>=1} a[j] y[t-j]` with `a[0] = 1`.
/// The factored pole/zero form is kept alongside the expanded coefficients;
/// frequency-response evaluation uses the factors, which keeps the exact
/// zeros at z = 1 free of the cancellation noise the expanded polynomial
/// accumulates.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub cutoff_hz: f64,
    pub sampling_rate: f64,
    pub order: usize,
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    /// Digital zeros as (re, im).
    pub zeros: Vec<(f64, f64)>,
    /// Digital poles as (re, im); all strictly inside the unit circle.
    pub poles: Vec<(f64, f64)>,
    /// Leading gain of the factored form.
    pub gain: f64,
}

impl FilterSpec {
    /// Frequency response magnitude at `freq_hz`, from the factored form.
    pub fn gain_at(&self, freq_hz: f64) -> f64 {
        let omega = 2.0 * std::f64::consts::PI * freq_hz / self.sampling_rate;
        let z = C::new(omega.cos(), omega.sin());
        let mut h = C::new(self.gain, 0.0);
        for &(re, im) in &self.zeros {
            h = h.mul(z.sub(C::new(re, im)));
        }
        for &(re, im) in &self.poles {
            h = h.div(z.sub(C::new(re, im)));
        }
        h.abs()
    }

    /// Largest pole magnitude (stability margin diagnostic).
    pub fn max_pole_radius(&self) -> f64 {
        self.poles
            .iter()
            .map(|&(re, im)| re.hypot(im))
            .fold(0.0, f64::max)
    }
}

/// Design a Butterworth high-pass filter. The -3 dB point lands exactly on
/// `cutoff_hz` (prewarped bilinear transform); DC gain is zero.
pub fn design_highpass(
    cutoff_hz: f64,
    sampling_rate: f64,
    order: usize,
) -> Result<FilterSpec, PreprocessError> {
    if !cutoff_hz.is_finite()
        || cutoff_hz <= 0.0
        || !sampling_rate.is_finite()
        || sampling_rate <= 0.0
    {
        return Err(PreprocessError::InvalidParam(
            "cutoff and sampling rate must be positive".into(),
        ));
    }
    if cutoff_hz >= sampling_rate / 2.0 {
        return Err(PreprocessError::InvalidParam(format!(
            "cutoff {cutoff_hz} Hz at or above Nyquist {} Hz",
            sampling_rate / 2.0
        )));
    }
    if !(1..=12).contains(&order) {
        return Err(PreprocessError::InvalidParam(format!(
            "order {order} outside 1..=12"
        )));
    }

    let fs2 = 2.0 * sampling_rate;
    let warped = fs2 * (std::f64::consts::PI * cutoff_hz / sampling_rate).tan();

    // Analog Butterworth low-pass prototype poles on the unit circle, left
    // half-plane; high-pass transform s -> warped / s.
    let mut poles_analog = Vec::with_capacity(order);
    for k in 0..order {
        let theta = std::f64::consts::PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
        let lp = C::new(theta.cos(), theta.sin());
        poles_analog.push(C::new(warped, 0.0).div(lp));
    }

    // Bilinear transform: root -> (fs2 + root) / (fs2 - root). Analog zeros
    // all sit at s = 0, mapping to z = 1.
    let fs2c = C::new(fs2, 0.0);
    let poles_digital: Vec<C> = poles_analog
        .iter()
        .map(|&p| fs2c.add(p).div(fs2c.sub(p)))
        .collect();
    for p in &poles_digital {
        debug_assert!(p.abs() < 1.0, "unstable pole from bilinear transform");
    }
    let zeros_digital = vec![C::new(1.0, 0.0); order];

    // Gain: each bilinear factor contributes (fs2 - root); analog gain is 1
    // for a monic high-pass.
    let mut k = C::new(1.0, 0.0);
    for &p in &poles_analog {
        k = k.mul(fs2c.div(fs2c.sub(p)));
    }
    let k = k.re;

    let b_c = poly_from_roots(&zeros_digital);
    let a_c = poly_from_roots(&poles_digital);
    let b: Vec<f64> = b_c.iter().map(|c| c.re * k).collect();
    let a: Vec<f64> = a_c.iter().map(|c| c.re).collect();
    debug_assert!(a_c.iter().all(|c| c.im.abs() < 1e-9));

    let spec = FilterSpec {
        cutoff_hz,
        sampling_rate,
        order,
        b,
        a,
        zeros: zeros_digital.iter().map(|z| (z.re, z.im)).collect(),
        poles: poles_digital.iter().map(|p| (p.re, p.im)).collect(),
        gain: k,
    };
    debug_assert!(spec.gain_at(0.0) < 1e-9, "high-pass must reject DC");
    debug_assert!(spec.max_pole_radius() < 1.0);
    Ok(spec)
}

/// Run the difference equation over the signal with zero initial conditions.
/// Output has the same length as the input.
pub fn apply_filter(spec: &FilterSpec, signal: &[f64]) -> Vec<f64> {
    let d = spec.order;
    let mut out = vec![0.0; signal.len()];
    for t in 0..signal.len() {
        let mut acc = 0.0;
        for j in 0..=d.min(t) {
            acc += spec.b[j] * signal[t - j];
        }
        for j in 1..=d.min(t) {
            acc -= spec.a[j] * out[t - j];
        }
        out[t] = acc;
    }
    out
}

/// Forward-backward application: squared magnitude response, zero phase.
/// Offered for offline study; the causal pass is the default.
pub fn apply_filter_zero_phase(spec: &FilterSpec, signal: &[f64]) -> Vec<f64> {
    let mut fwd = apply_filter(spec, signal);
    fwd.reverse();
    let mut back = apply_filter(spec, &fwd);
    back.reverse();
    back
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dc_gain_is_zero() {
        let spec = design_highpass(0.5, 360.0, 4).unwrap();
        assert!(spec.gain_at(0.0) < 1e-9);
    }

    #[test]
    fn cutoff_gain_is_minus_3db() {
        for (fc, fs, order) in [(0.5, 360.0, 4), (0.5, 250.0, 4), (5.0, 100.0, 2)] {
            let spec = design_highpass(fc, fs, order).unwrap();
            let g = spec.gain_at(fc);
            assert!(
                (g - 1.0 / 2.0f64.sqrt()).abs() < 1e-6,
                "gain at cutoff {g} for fc={fc} fs={fs} order={order}"
            );
        }
    }

    #[test]
    fn passband_is_flat_far_above_cutoff() {
        let spec = design_highpass(0.5, 360.0, 4).unwrap();
        let g = spec.gain_at(5.0); // 10x cutoff
        assert!((g - 1.0).abs() < 0.01, "gain {g}");
    }

    #[test]
    fn cutoff_at_nyquist_rejected() {
        assert!(design_highpass(180.0, 360.0, 4).is_err());
        assert!(design_highpass(200.0, 360.0, 4).is_err());
    }

    #[test]
    fn constant_signal_decays_to_zero() {
        let spec = design_highpass(0.5, 360.0, 4).unwrap();
        let c = 7.5;
        let out = apply_filter(&spec, &vec![c; 36000]);
        let tail = &out[30000..];
        assert!(tail.iter().all(|v| v.abs() < 1e-6 * c.abs()));
    }

    #[test]
    fn zero_signal_gives_zero_output() {
        let spec = design_highpass(0.5, 360.0, 4).unwrap();
        let out = apply_filter(&spec, &vec![0.0; 100]);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn impulse_response_sums_to_zero() {
        let spec = design_highpass(0.5, 360.0, 4).unwrap();
        let mut impulse = vec![0.0; 64800]; // 180 s
        impulse[0] = 1.0;
        let h = apply_filter(&spec, &impulse);
        let sum: f64 = h.iter().sum();
        assert!(sum.abs() < 1e-6, "impulse response sum {sum}");
    }

    #[test]
    fn impulse_response_decays() {
        // Magnitude below 1e-8 within 10 * order / cutoff seconds.
        let (fc, fs, order) = (0.5, 360.0, 4);
        let spec = design_highpass(fc, fs, order).unwrap();
        let horizon = (10.0 * order as f64 / fc * fs) as usize;
        let mut impulse = vec![0.0; horizon + 1000];
        impulse[0] = 1.0;
        let h = apply_filter(&spec, &impulse);
        assert!(h[horizon..].iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn zero_phase_removes_drift_without_shift() {
        let spec = design_highpass(0.5, 250.0, 4).unwrap();
        let n = 5000;
        let signal: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / 250.0;
                (2.0 * std::f64::consts::PI * 10.0 * t).sin() + 3.0
            })
            .collect();
        let out = apply_filter_zero_phase(&spec, &signal);
        // Interior should match the drift-free sinusoid closely.
        for (i, &v) in out.iter().enumerate().take(n - 1000).skip(1000) {
            let t = i as f64 / 250.0;
            let want = (2.0 * std::f64::consts::PI * 10.0 * t).sin();
            assert!((v - want).abs() < 0.02, "at {i}: {v} vs {want}");
        }
    }
}
