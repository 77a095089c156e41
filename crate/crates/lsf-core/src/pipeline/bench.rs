//! Per-segment inference latency benchmark: raw 10-second window in, label
//! out, timed stage by stage on a monotonic clock with warmup excluded.

use super::config::PipelineConfig;
use super::stages::{self, lstm_model_path, norm_path, require, svm_model_path};
use super::{PipelineError, StageReport};
use crate::digest::digest_bytes;
use crate::lstm;
use crate::preprocess::{
    apply_filter, design_highpass, haar_dwt1, resample, apply_norm, FeatureTensor, NormStats,
};
use crate::svm;
use crate::wfdb::EcgRecord;
use std::fs;
use std::time::Instant;

const WARMUP_SEGMENTS: usize = 10;

/// Mean and percentiles of one pipeline stage, in seconds per segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageStats {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
}

impl StageStats {
    fn from_samples(samples: &mut [f64]) -> Self {
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let pick = |q: f64| samples[((samples.len() - 1) as f64 * q).round() as usize];
        Self {
            mean,
            p50: pick(0.50),
            p95: pick(0.95),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub n_segments: usize,
    pub hardware: String,
    pub preprocess: StageStats,
    pub lstm_forward: StageStats,
    pub pooling: StageStats,
    pub svm_score: StageStats,
    pub total: StageStats,
}

impl BenchmarkReport {
    pub fn to_text(&self) -> String {
        let row = |name: &str, s: &StageStats| {
            format!("{name} mean {:.6} p50 {:.6} p95 {:.6}\n", s.mean, s.p50, s.p95)
        };
        let mut out = format!(
            "lsf-benchmark 1\nn_segments {}\nhardware {}\n",
            self.n_segments, self.hardware
        );
        out.push_str(&row("preprocess", &self.preprocess));
        out.push_str(&row("lstm_forward", &self.lstm_forward));
        out.push_str(&row("pooling", &self.pooling));
        out.push_str(&row("svm_score", &self.svm_score));
        out.push_str(&row("total", &self.total));
        out
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("stage,mean_s,p50_s,p95_s\n");
        for (name, s) in [
            ("preprocess", &self.preprocess),
            ("lstm_forward", &self.lstm_forward),
            ("pooling", &self.pooling),
            ("svm_score", &self.svm_score),
            ("total", &self.total),
        ] {
            out.push_str(&format!("{name},{:.6},{:.6},{:.6}\n", s.mean, s.p50, s.p95));
        }
        out
    }
}

fn hardware_string() -> String {
    let model = fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|s| s.trim().to_string())
        })
        .unwrap_or_else(|| std::env::consts::ARCH.to_string());
    let cores = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    format!("{model} ({cores} logical cores)")
}

/// Time cold single-segment inference over at least `n_segments` windows.
pub fn benchmark(
    config: &PipelineConfig,
    n_segments: usize,
) -> Result<BenchmarkReport, PipelineError> {
    if n_segments < 100 {
        return Err(PipelineError::InvalidParam(format!(
            "benchmark needs at least 100 segments for stable statistics, got {n_segments}"
        )));
    }
    let (model, _) = lstm::load_model(&require(lstm_model_path(config), "train-lstm")?)?;
    let stats = NormStats::load(&require(norm_path(config), "train-lstm")?)?;
    let (svm_model, _) = svm::load_svm(&require(svm_model_path(config), "train-svm")?)?;

    // Raw windows cycled from the ingested records.
    let names = stages::read_records_list(config)?;
    let mut windows: Vec<(Vec<f64>, f64)> = Vec::new();
    'outer: for name in &names {
        let record: EcgRecord = stages::load_record(&config.data_dir, name)?;
        let fs_native = record.header.sampling_rate;
        let window = (config.window_seconds * fs_native).round() as usize;
        let signal = record.physical(config.channel.min(record.header.n_signals - 1));
        for chunk in signal.chunks_exact(window) {
            windows.push((chunk.to_vec(), fs_native));
            if windows.len() >= n_segments {
                break 'outer;
            }
        }
    }
    if windows.is_empty() {
        return Err(PipelineError::InvalidParam(
            "no full windows available for benchmarking".into(),
        ));
    }

    let mut t_pre = Vec::with_capacity(n_segments);
    let mut t_fwd = Vec::with_capacity(n_segments);
    let mut t_pool = Vec::with_capacity(n_segments);
    let mut t_svm = Vec::with_capacity(n_segments);
    let mut t_total = Vec::with_capacity(n_segments);

    // Filter design is setup, not per-segment work.
    let mut specs: std::collections::BTreeMap<u64, _> = std::collections::BTreeMap::new();
    for &(_, fs_native) in &windows {
        specs
            .entry(fs_native.to_bits())
            .or_insert(design_highpass(config.cutoff_hz, fs_native, config.filter_order)?);
    }

    let mut label_sink = 0usize; // keeps the final label observable
    for i in 0..WARMUP_SEGMENTS + n_segments {
        let (window, fs_native) = &windows[i % windows.len()];
        let spec = &specs[&fs_native.to_bits()];

        let start = Instant::now();
        let filtered = apply_filter(spec, window);
        let resampled = resample(&filtered, *fs_native, config.target_hz)?;
        let take = ((config.window_seconds * config.target_hz).round() as usize)
            .min(resampled.len());
        let (ca, cd) = haar_dwt1(&resampled[..take])?;
        let tensor = apply_norm(&stats, &FeatureTensor::from_channels(&ca, &cd))?;
        let pre_done = Instant::now();

        let pass = model.forward(&tensor)?;
        let fwd_done = Instant::now();

        let score = svm::decision_score(&svm_model, &pass.pooled)?;
        let svm_done = Instant::now();
        label_sink += usize::from(score > 0.0);

        // Pooling replay measured outside the end-to-end span (it also runs
        // inside the forward pass above).
        let h2 = FeatureTensor {
            rows: pass.steps,
            cols: model.hidden(),
            data: pass.cache2.hidden.clone(),
        };
        let pool_start = Instant::now();
        let pooled = lstm::global_max_pool(&h2)?;
        let pool_elapsed = pool_start.elapsed().as_secs_f64();
        assert_eq!(pooled.len(), model.hidden());

        if i >= WARMUP_SEGMENTS {
            t_pre.push((pre_done - start).as_secs_f64());
            t_fwd.push((fwd_done - pre_done).as_secs_f64());
            t_pool.push(pool_elapsed);
            t_svm.push((svm_done - fwd_done).as_secs_f64());
            t_total.push((svm_done - start).as_secs_f64());
        }
    }
    let _ = label_sink;

    Ok(BenchmarkReport {
        n_segments,
        hardware: hardware_string(),
        preprocess: StageStats::from_samples(&mut t_pre),
        lstm_forward: StageStats::from_samples(&mut t_fwd),
        pooling: StageStats::from_samples(&mut t_pool),
        svm_score: StageStats::from_samples(&mut t_svm),
        total: StageStats::from_samples(&mut t_total),
    })
}

pub(super) fn stage_benchmark(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let mut rep = StageReport::new("benchmark");
    let stage_dir = config.out_dir.join("bench");
    fs::create_dir_all(&stage_dir)?;
    let report = benchmark(config, config.benchmark_segments)?;
    let text = report.to_text();
    fs::write(stage_dir.join("latency.txt"), &text)?;
    fs::write(stage_dir.join("latency.csv"), report.csv())?;
    rep.messages.push(format!(
        "mean total {:.4} s/segment over {} segments on {}",
        report.total.mean, report.n_segments, report.hardware
    ));
    // Latency outputs are timings; the manifest records only config+inputs.
    let mut manifest = format!(
        "lsf-manifest 1\nstage benchmark\nconfig {}\n",
        config.digest()
    );
    manifest.push_str(&format!(
        "input model.lsfm {:016x}\n",
        digest_bytes(&fs::read(lstm_model_path(config))?)
    ));
    fs::write(stage_dir.join("manifest.txt"), manifest)?;
    Ok(rep)
}
