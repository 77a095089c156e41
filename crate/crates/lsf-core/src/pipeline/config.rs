//! Pipeline configuration: defaults, a `key = value` config file, and a
//! canonical digest so manifests can prove two runs used the same settings.

use super::PipelineError;
use crate::dataset::Task;
use crate::digest::{digest_bytes, hex};
use crate::lstm::TrainConfig;
use crate::preprocess::NormMode;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub task: Task,
    pub seed: u64,
    /// Signal channel fed to the pipeline (the lead is not prescribed; the
    /// first signal is the default).
    pub channel: usize,
    pub cutoff_hz: f64,
    pub filter_order: usize,
    pub target_hz: f64,
    pub zero_phase: bool,
    pub norm_mode: NormMode,
    pub window_seconds: f64,
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub clip_norm: f64,
    /// None selects the scale heuristic from the training features.
    pub svm_gamma: Option<f64>,
    pub svm_tolerance: f64,
    pub svm_max_iterations: usize,
    /// Cap per grid candidate via stratified subsampling (None = full set).
    pub grid_subsample: Option<usize>,
    pub benchmark_segments: usize,
}

impl PipelineConfig {
    pub fn new(data_dir: PathBuf, out_dir: PathBuf, task: Task, seed: u64) -> Self {
        Self {
            data_dir,
            out_dir,
            task,
            seed,
            channel: 0,
            cutoff_hz: 0.5,
            filter_order: 4,
            target_hz: 100.0,
            zero_phase: false,
            norm_mode: NormMode::ElementWise,
            window_seconds: 10.0,
            hidden_size: 100,
            learning_rate: 1e-3,
            batch_size: 64,
            max_epochs: 200,
            patience: 10,
            clip_norm: 5.0,
            svm_gamma: None,
            svm_tolerance: 1e-3,
            svm_max_iterations: 10_000_000,
            grid_subsample: None,
            benchmark_segments: 1000,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed: self.seed,
            clip_norm: self.clip_norm,
            ..TrainConfig::default()
        }
    }

    /// Canonical one-line-per-key rendering; also the config file format.
    pub fn canonical(&self) -> String {
        let gamma = match self.svm_gamma {
            Some(g) => g.to_string(),
            None => "scale".to_string(),
        };
        let subsample = match self.grid_subsample {
            Some(n) => n.to_string(),
            None => "off".to_string(),
        };
        format!(
            "task = {}\nseed = {}\nchannel = {}\ncutoff_hz = {}\nfilter_order = {}\n\
             target_hz = {}\nzero_phase = {}\nnorm_mode = {}\nwindow_seconds = {}\n\
             hidden_size = {}\nlearning_rate = {}\nbatch_size = {}\nmax_epochs = {}\n\
             patience = {}\nclip_norm = {}\nsvm_gamma = {}\nsvm_tolerance = {}\n\
             svm_max_iterations = {}\ngrid_subsample = {}\nbenchmark_segments = {}\n",
            self.task.name(),
            self.seed,
            self.channel,
            self.cutoff_hz,
            self.filter_order,
            self.target_hz,
            self.zero_phase,
            self.norm_mode.name(),
            self.window_seconds,
            self.hidden_size,
            self.learning_rate,
            self.batch_size,
            self.max_epochs,
            self.patience,
            self.clip_norm,
            gamma,
            self.svm_tolerance,
            self.svm_max_iterations,
            subsample,
            self.benchmark_segments,
        )
    }

    /// Digest of the canonical settings (data/output paths excluded so a
    /// relocated run stays comparable).
    pub fn digest(&self) -> String {
        hex(digest_bytes(self.canonical().as_bytes()))
    }

    /// Apply `key = value` lines from a config file over the current values.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), PipelineError> {
        let text = std::fs::read_to_string(path)?;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| PipelineError::Config {
                line: line_no,
                message: "expected key = value".into(),
            })?;
            self.apply_key(key.trim(), value.trim())
                .map_err(|message| PipelineError::Config {
                    line: line_no,
                    message,
                })?;
        }
        Ok(())
    }

    /// Set one configuration key from its textual form.
    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value.parse().map_err(|_| format!("bad value {value:?} for {key}"))
        }
        match key {
            "data_dir" => self.data_dir = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "task" => {
                self.task = Task::parse(value).ok_or_else(|| format!("unknown task {value:?}"))?
            }
            "seed" => self.seed = num(key, value)?,
            "channel" => self.channel = num(key, value)?,
            "cutoff_hz" => self.cutoff_hz = num(key, value)?,
            "filter_order" => self.filter_order = num(key, value)?,
            "target_hz" => self.target_hz = num(key, value)?,
            "zero_phase" => self.zero_phase = num(key, value)?,
            "norm_mode" => {
                self.norm_mode =
                    NormMode::parse(value).ok_or_else(|| format!("unknown norm mode {value:?}"))?
            }
            "window_seconds" => self.window_seconds = num(key, value)?,
            "hidden_size" => self.hidden_size = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "max_epochs" => self.max_epochs = num(key, value)?,
            "patience" => self.patience = num(key, value)?,
            "clip_norm" => self.clip_norm = num(key, value)?,
            "svm_gamma" => {
                self.svm_gamma = if value == "scale" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "svm_tolerance" => self.svm_tolerance = num(key, value)?,
            "svm_max_iterations" => self.svm_max_iterations = num(key, value)?,
            "grid_subsample" => {
                self.grid_subsample = if value == "off" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "benchmark_segments" => self.benchmark_segments = num(key, value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }
}
