//! Synthetic single-lead ECG records with controllable rhythm irregularity,
//! written in the interchange format. Two window classes: regular rhythm with
//! narrow beats, and irregular rhythm with interleaved wide high-amplitude
//! beats. Used for pipeline tests and demos when the real databases are not
//! on disk.

use crate::dataset::Task;
use crate::digest::digest_bytes;
use crate::wfdb::{code_for_mnemonic, export_interchange, AnnotationEvent, EcgRecord, RHYTHM_CHANGE};
use crate::wfdb::{RecordHeader, SignalSpec};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::io;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub fs: f64,
    pub windows_per_record: usize,
    pub window_seconds: f64,
    /// Probability that a window is of the positive (irregular) class.
    pub positive_fraction: f64,
    pub task: Task,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            fs: 250.0,
            windows_per_record: 20,
            window_seconds: 10.0,
            positive_fraction: 0.4,
            task: Task::Arrhythmia,
            seed: 0,
        }
    }
}

/// Gaussian bump used for beat morphology.
fn bump(t: f64, center: f64, width: f64, amp: f64) -> f64 {
    let d = (t - center) / width;
    amp * (-0.5 * d * d).exp()
}

/// Generate one record. The generator seed mixes in the record name so a
/// dataset is identical regardless of generation order.
pub fn synth_record(name: &str, spec: &SynthSpec) -> EcgRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ digest_bytes(name.as_bytes()));
    let window_samples = (spec.window_seconds * spec.fs).round() as usize;
    let n_samples = spec.windows_per_record * window_samples;
    let mut signal = vec![0.0f64; n_samples];
    let mut annotations: Vec<AnnotationEvent> = Vec::new();

    let normal_code = code_for_mnemonic("N").unwrap();
    let pvc_code = code_for_mnemonic("V").unwrap();

    for w in 0..spec.windows_per_record {
        let positive = rng.gen_bool(spec.positive_fraction);
        let start = w * window_samples;
        let start_t = start as f64 / spec.fs;
        let end_t = start_t + spec.window_seconds;

        if spec.task == Task::Afib {
            annotations.push(AnnotationEvent {
                sample_index: start as u64,
                code: RHYTHM_CHANGE,
                aux: Some(if positive { "(AFIB".into() } else { "(N".into() }),
            });
        }

        // Beat train for this window.
        let mut t = start_t + rng.gen_range(0.05..0.3);
        let mut beat_idx = 0usize;
        while t < end_t - 0.2 {
            let wide = positive && beat_idx % 2 == 1;
            let (amp, width) = if wide {
                (1.4 + rng.gen::<f64>() * 0.5, 0.075)
            } else {
                (0.9 + rng.gen::<f64>() * 0.2, 0.022)
            };
            let beat_sample = (t * spec.fs).round() as usize;
            if beat_sample >= n_samples {
                break;
            }
            // R wave plus a low T bump.
            let lo = ((t - 0.35) * spec.fs).max(0.0) as usize;
            let hi = (((t + 0.45) * spec.fs) as usize).min(n_samples);
            for (s, v) in signal.iter_mut().enumerate().take(hi).skip(lo) {
                let ts = s as f64 / spec.fs;
                *v += bump(ts, t, width, amp);
                *v += bump(ts, t + 0.18, 0.06, 0.22);
                *v -= bump(ts, t - 0.04, 0.018, 0.18);
            }
            let code = match spec.task {
                Task::Arrhythmia => {
                    if wide {
                        pvc_code
                    } else {
                        normal_code
                    }
                }
                Task::Afib => normal_code,
            };
            annotations.push(AnnotationEvent {
                sample_index: beat_sample as u64,
                code,
                aux: None,
            });
            let rr = if positive {
                // Irregular rhythm.
                rng.gen_range(0.35..1.05)
            } else {
                0.78 + rng.gen_range(-0.03..0.03)
            };
            t += rr;
            beat_idx += 1;
        }
    }

    // Baseline wander and measurement noise over the whole record.
    let wander_phase = rng.gen::<f64>() * std::f64::consts::TAU;
    for (s, v) in signal.iter_mut().enumerate() {
        let ts = s as f64 / spec.fs;
        *v += 0.35 * (std::f64::consts::TAU * 0.25 * ts + wander_phase).sin();
        *v += 0.05 * (std::f64::consts::TAU * 0.05 * ts).sin();
        *v += rng.gen_range(-0.02..0.02);
    }

    let gain = 200.0;
    let samples: Vec<i32> = signal
        .iter()
        .map(|&v| ((v * gain).round() as i32).clamp(-2048, 2047))
        .collect();
    annotations.sort_by_key(|a| a.sample_index);

    EcgRecord {
        header: RecordHeader {
            record_name: name.to_string(),
            n_signals: 1,
            sampling_rate: spec.fs,
            n_samples,
            signals: vec![SignalSpec {
                file_name: format!("{name}.dat"),
                format: 212,
                gain,
                baseline: 0,
                adc_zero: 0,
                initial_value: samples.first().copied().unwrap_or(0),
                description: "synthetic".into(),
            }],
        },
        signals: vec![samples],
        annotations,
        warnings: Vec::new(),
    }
}

/// Write a set of synthetic records (interchange format) into a directory.
/// Record names must match the task's expected test records for the split
/// stage to succeed.
pub fn write_synth_dataset(
    dir: &Path,
    names: &[&str],
    spec: &SynthSpec,
) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for name in names {
        let record = synth_record(name, spec);
        let text = export_interchange(&record);
        std::fs::write(dir.join(format!("{name}.ecgtxt")), text)?;
    }
    Ok(())
}

/// Record names that satisfy the arrhythmia split with `n_train` training
/// patients: the fixed test records plus the first training names.
pub fn arrhythmia_demo_names(n_train: usize) -> Vec<&'static str> {
    let train = [
        "100", "101", "103", "106", "108", "109", "111", "112", "113", "114",
    ];
    let mut names: Vec<&str> = train[..n_train.min(train.len())].to_vec();
    names.extend(["105", "117", "214", "230", "232", "233", "234"]);
    names
}

/// Same for the atrial-fibrillation split.
pub fn afib_demo_names(n_train: usize) -> Vec<&'static str> {
    let train = ["04015", "04043", "04048", "04126", "04908", "04936"];
    let mut names: Vec<&str> = train[..n_train.min(train.len())].to_vec();
    names.extend(["04746", "05121", "06453", "07879"]);
    names
}
