//! Stage implementations. Artifact layout under the output directory:
//!
//! ```text
//! ingest/records.csv            record,fs,n_signals,n_samples,n_annotations,digest
//! features/<record>.lsft       per-record feature-tensor cache
//! features/segments.csv        record,index,start_sample,tag
//! split/split.txt              split manifest with per-segment assignments
//! split/distribution.csv       class counts per split
//! lstm/model.lsfm              checkpoint
//! lstm/norm.lsfn               normalization stats (fitted on train-minus-val)
//! lstm/history.csv             epoch,train_loss,val_ap
//! features100/{train,val,test}.lsfv + *_index.csv
//! svm/model.lsfs + grid.csv
//! eval/{baseline,lsf}.txt + PR/ROC curve CSVs
//! bench/latency.{txt,csv}
//! report/report.{md,csv}
//! export/vectors.csv           flat feature vectors for external embedding
//! ```
//!
//! Every stage writes `manifest.txt` (config digest, input digests, output
//! digests). Timing diagnostics (grid seconds, latency) are excluded from
//! manifests so reruns with identical inputs produce identical manifests.

use super::config::PipelineConfig;
use super::{bench, report, PipelineError, Stage};
use crate::dataset::{distribution, label_record, make_split, ClassTag, SegmentInfo, Task};
use crate::digest::{digest_bytes, hex, Fnv1a};
use crate::linalg::Mat;
use crate::lstm::{self, LstmModel};
use crate::metrics::{evaluate, EvalReport, ScoredPredictions};
use crate::preprocess::{
    apply_norm, featurize_channel, fit_norm_stats, read_feature_cache, write_feature_cache,
    FeatureTensor, NormStats, PreprocessOptions,
};
use crate::svm::{self, GridSearchOptions};
use crate::wfdb::{import_interchange, read_record, EcgRecord};
use crate::container::{self, PayloadReader, PayloadWriter};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub const VECTORS_MAGIC: [u8; 4] = *b"LSFV";

/// What a stage wants the caller to know.
#[derive(Debug, Clone)]
pub struct StageReport {
    pub stage: &'static str,
    pub messages: Vec<String>,
    /// Set when a solver hit its iteration cap; maps to exit code 3.
    pub convergence_warning: bool,
}

impl StageReport {
    pub(super) fn new(stage: &'static str) -> Self {
        Self {
            stage,
            messages: Vec::new(),
            convergence_warning: false,
        }
    }
}

pub fn run_stage(stage: Stage, config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    fs::create_dir_all(&config.out_dir)?;
    match stage {
        Stage::Ingest => stage_ingest(config),
        Stage::Preprocess => stage_preprocess(config),
        Stage::Split => stage_split(config),
        Stage::TrainLstm => stage_train_lstm(config),
        Stage::ExtractFeatures => stage_extract_features(config),
        Stage::TrainSvm => stage_train_svm(config),
        Stage::Evaluate => stage_evaluate(config),
        Stage::Benchmark => bench::stage_benchmark(config),
        Stage::Report => report::stage_report(config),
        Stage::ExportFeatures => stage_export_features(config),
    }
}

// ---------------------------------------------------------------- paths

fn dir(config: &PipelineConfig, name: &str) -> PathBuf {
    config.out_dir.join(name)
}

pub(super) fn records_csv(config: &PipelineConfig) -> PathBuf {
    dir(config, "ingest").join("records.csv")
}
pub(super) fn segments_csv(config: &PipelineConfig) -> PathBuf {
    dir(config, "features").join("segments.csv")
}
pub(super) fn tensor_cache(config: &PipelineConfig, record: &str) -> PathBuf {
    dir(config, "features").join(format!("{record}.lsft"))
}
pub(super) fn split_manifest(config: &PipelineConfig) -> PathBuf {
    dir(config, "split").join("split.txt")
}
pub(super) fn lstm_model_path(config: &PipelineConfig) -> PathBuf {
    dir(config, "lstm").join("model.lsfm")
}
pub(super) fn norm_path(config: &PipelineConfig) -> PathBuf {
    dir(config, "lstm").join("norm.lsfn")
}
pub(super) fn vectors_path(config: &PipelineConfig, split: &str) -> PathBuf {
    dir(config, "features100").join(format!("{split}.lsfv"))
}
pub(super) fn svm_model_path(config: &PipelineConfig) -> PathBuf {
    dir(config, "svm").join("model.lsfs")
}
pub(super) fn eval_path(config: &PipelineConfig, which: &str) -> PathBuf {
    dir(config, "eval").join(format!("{which}.txt"))
}

pub(super) fn require(path: PathBuf, run_first: &'static str) -> Result<PathBuf, PipelineError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(PipelineError::MissingArtifact { run_first, path })
    }
}

// ------------------------------------------------------------- manifests

fn file_digest(path: &Path) -> Result<u64, PipelineError> {
    Ok(digest_bytes(&fs::read(path)?))
}

fn write_manifest(
    stage_dir: &Path,
    stage: &str,
    config: &PipelineConfig,
    inputs: &[(String, u64)],
    outputs: &[(String, u64)],
) -> Result<(), PipelineError> {
    let mut text = format!("lsf-manifest 1\nstage {stage}\nconfig {}\n", config.digest());
    for (name, d) in inputs {
        text.push_str(&format!("input {name} {}\n", hex(*d)));
    }
    for (name, d) in outputs {
        text.push_str(&format!("output {name} {}\n", hex(*d)));
    }
    fs::write(stage_dir.join("manifest.txt"), text)?;
    Ok(())
}

// ---------------------------------------------------------------- ingest

/// Load one record by name, preferring the native header triple over the
/// interchange format.
pub(super) fn load_record(data_dir: &Path, name: &str) -> Result<EcgRecord, PipelineError> {
    let hea = data_dir.join(format!("{name}.hea"));
    if hea.exists() {
        return Ok(read_record(&data_dir.join(name))?);
    }
    let text = fs::read_to_string(data_dir.join(format!("{name}.ecgtxt")))?;
    Ok(import_interchange(&text)?)
}

fn record_content_digest(record: &EcgRecord) -> u64 {
    let mut h = Fnv1a::new();
    h.update(record.header.record_name.as_bytes());
    h.update(&record.header.sampling_rate.to_le_bytes());
    h.update(&(record.header.n_samples as u64).to_le_bytes());
    for sig in &record.signals {
        for &s in sig {
            h.update(&s.to_le_bytes());
        }
    }
    for ev in &record.annotations {
        h.update(&ev.sample_index.to_le_bytes());
        h.update(&[ev.code]);
        if let Some(aux) = &ev.aux {
            h.update(aux.as_bytes());
        }
    }
    h.finish()
}

fn stage_ingest(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let mut rep = StageReport::new("ingest");
    let stage_dir = dir(config, "ingest");
    fs::create_dir_all(&stage_dir)?;

    // Discover record names: every .hea or .ecgtxt stem.
    let mut names: Vec<String> = Vec::new();
    let mut annotation_only: Vec<String> = Vec::new();
    for entry in fs::read_dir(&config.data_dir)? {
        let path = entry?.path();
        let (Some(stem), Some(ext)) = (
            path.file_stem().and_then(|s| s.to_str()),
            path.extension().and_then(|s| s.to_str()),
        ) else {
            continue;
        };
        match ext {
            "hea" | "ecgtxt" => names.push(stem.to_string()),
            "atr" if !config.data_dir.join(format!("{stem}.dat")).exists() => {
                annotation_only.push(stem.to_string());
            }
            _ => {}
        }
    }
    names.sort();
    names.dedup();
    annotation_only.sort();
    for name in annotation_only {
        if !names.contains(&name) {
            rep.messages.push(format!(
                "record {name} has annotations but no signal file; excluded"
            ));
        }
    }
    if names.is_empty() {
        return Err(PipelineError::InvalidParam(format!(
            "no records found in {}",
            config.data_dir.display()
        )));
    }

    let mut csv = String::from("record,fs,n_signals,n_samples,n_annotations,digest\n");
    for name in &names {
        // Records with a header but no signal file (annotation-only entries
        // in the AFIB database) are excluded, not fatal.
        let has_header = config.data_dir.join(format!("{name}.hea")).exists();
        let has_signal = config.data_dir.join(format!("{name}.dat")).exists()
            || config.data_dir.join(format!("{name}.ecgtxt")).exists();
        if has_header && !has_signal {
            rep.messages.push(format!(
                "record {name} has no signal file; excluded"
            ));
            continue;
        }
        let record = load_record(&config.data_dir, name)?;
        for w in &record.warnings {
            rep.messages.push(format!("{name}: {w}"));
        }
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            name,
            record.header.sampling_rate,
            record.header.n_signals,
            record.header.n_samples,
            record.annotations.len(),
            hex(record_content_digest(&record)),
        ));
    }
    let out = records_csv(config);
    fs::write(&out, &csv)?;

    let input_digest = digest_bytes(names.join("\n").as_bytes());
    write_manifest(
        &stage_dir,
        "ingest",
        config,
        &[("data_dir_listing".into(), input_digest)],
        &[("records.csv".into(), digest_bytes(csv.as_bytes()))],
    )?;
    Ok(rep)
}

pub(super) fn read_records_list(config: &PipelineConfig) -> Result<Vec<String>, PipelineError> {
    let path = require(records_csv(config), "ingest")?;
    let text = fs::read_to_string(path)?;
    let mut names = Vec::new();
    for line in text.lines().skip(1) {
        if line.is_empty() {
            continue;
        }
        let name = line
            .split(',')
            .next()
            .ok_or_else(|| PipelineError::Artifact("malformed records.csv".into()))?;
        names.push(name.to_string());
    }
    Ok(names)
}

// ------------------------------------------------------------ preprocess

fn stage_preprocess(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let mut rep = StageReport::new("preprocess");
    let names = read_records_list(config)?;
    let stage_dir = dir(config, "features");
    fs::create_dir_all(&stage_dir)?;

    let opts = PreprocessOptions {
        cutoff_hz: config.cutoff_hz,
        filter_order: config.filter_order,
        target_hz: config.target_hz,
        zero_phase: config.zero_phase,
        norm_mode: config.norm_mode,
        channel: config.channel,
        window_seconds: config.window_seconds,
    };

    let mut seg_csv = String::from("record,index,start_sample,tag\n");
    let mut outputs = Vec::new();
    for name in &names {
        let record = load_record(&config.data_dir, name)?;
        if config.channel >= record.header.n_signals {
            return Err(PipelineError::InvalidParam(format!(
                "record {name} has {} signals; channel {} requested",
                record.header.n_signals, config.channel
            )));
        }
        let signal = record.physical(config.channel);
        let tensors = featurize_channel(&signal, record.header.sampling_rate, &opts)?;
        let infos = label_record(&record, config.task, config.window_seconds);
        if tensors.len() != infos.len() {
            return Err(PipelineError::Artifact(format!(
                "record {name}: {} feature windows vs {} labeled windows",
                tensors.len(),
                infos.len()
            )));
        }
        if tensors.is_empty() {
            rep.messages
                .push(format!("record {name}: shorter than one window, skipped"));
            continue;
        }
        for ((start, tensor), info) in tensors.iter().zip(&infos) {
            debug_assert_eq!(*start, info.start_sample);
            if !tensor.is_finite() {
                return Err(PipelineError::Preprocess(
                    crate::preprocess::PreprocessError::NonFinite,
                ));
            }
            seg_csv.push_str(&format!(
                "{},{},{},{}\n",
                name,
                info.index,
                info.start_sample,
                info.tag.name()
            ));
        }
        let cache: Vec<FeatureTensor> = tensors.into_iter().map(|(_, t)| t).collect();
        let path = tensor_cache(config, name);
        let d = write_feature_cache(&path, &cache)?;
        outputs.push((format!("{name}.lsft"), d));
    }
    let seg_path = segments_csv(config);
    fs::write(&seg_path, &seg_csv)?;
    outputs.push(("segments.csv".into(), digest_bytes(seg_csv.as_bytes())));

    let input = file_digest(&records_csv(config))?;
    write_manifest(
        &stage_dir,
        "preprocess",
        config,
        &[("records.csv".into(), input)],
        &outputs,
    )?;
    Ok(rep)
}

pub(super) fn read_segments(config: &PipelineConfig) -> Result<Vec<SegmentInfo>, PipelineError> {
    let path = require(segments_csv(config), "preprocess")?;
    let text = fs::read_to_string(path)?;
    let mut infos = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(PipelineError::Artifact(format!(
                "segments.csv line {}: expected 4 fields",
                idx + 1
            )));
        }
        let tag = ClassTag::parse(fields[3]).ok_or_else(|| {
            PipelineError::Artifact(format!("segments.csv line {}: bad tag", idx + 1))
        })?;
        infos.push(SegmentInfo {
            record: fields[0].to_string(),
            index: fields[1]
                .parse()
                .map_err(|_| PipelineError::Artifact("bad segment index".into()))?,
            start_sample: fields[2]
                .parse()
                .map_err(|_| PipelineError::Artifact("bad start sample".into()))?,
            tag,
        });
    }
    Ok(infos)
}

// ----------------------------------------------------------------- split

/// Per-segment assignment in the split manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment {
    Train,
    Validation,
    Test,
    Noisy,
    Discarded,
}

impl Assignment {
    fn name(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Validation => "val",
            Self::Test => "test",
            Self::Noisy => "noisy",
            Self::Discarded => "discarded",
        }
    }
    fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Self::Train),
            "val" => Some(Self::Validation),
            "test" => Some(Self::Test),
            "noisy" => Some(Self::Noisy),
            "discarded" => Some(Self::Discarded),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SplitAssignments {
    pub task: Task,
    pub seed: u64,
    pub train_records: Vec<String>,
    pub test_records: Vec<String>,
    /// (record, segment index, tag, assignment), sorted by (record, index).
    pub segments: Vec<(String, usize, ClassTag, Assignment)>,
}

impl SplitAssignments {
    pub fn label_of(tag: ClassTag) -> Option<bool> {
        tag.label()
    }
}

fn stage_split(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let mut rep = StageReport::new("split");
    let infos = read_segments(config)?;
    let stage_dir = dir(config, "split");
    fs::create_dir_all(&stage_dir)?;

    let mut record_names: Vec<String> = infos.iter().map(|i| i.record.clone()).collect();
    record_names.sort();
    record_names.dedup();
    let split = make_split(config.task, &record_names, config.seed)?;
    // Inter-patient guard, asserted rather than assumed.
    if let Some(leaked) = split.train_records.iter().find(|r| split.is_test(r)) {
        return Err(PipelineError::Artifact(format!(
            "patient {leaked} assigned to both train and test"
        )));
    }

    // Assign: test records -> test; discarded -> discarded; train records ->
    // train with a seeded 30% of non-noisy segments as validation.
    let mut assignments: BTreeMap<(String, usize), (ClassTag, Assignment)> = BTreeMap::new();
    let mut train_pool: Vec<(String, usize)> = Vec::new();
    for info in &infos {
        let key = (info.record.clone(), info.index);
        let assign = if split.is_test(&info.record) {
            if info.tag == ClassTag::Noisy {
                Assignment::Noisy
            } else {
                Assignment::Test
            }
        } else if split.is_train(&info.record) {
            if info.tag == ClassTag::Noisy {
                Assignment::Noisy
            } else {
                train_pool.push(key.clone());
                Assignment::Train
            }
        } else {
            Assignment::Discarded
        };
        assignments.insert(key, (info.tag, assign));
    }
    train_pool.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    train_pool.shuffle(&mut rng);
    let n_val = ((train_pool.len() as f64) * split.validation_fraction).round() as usize;
    for key in train_pool.iter().take(n_val) {
        if let Some(entry) = assignments.get_mut(key) {
            entry.1 = Assignment::Validation;
        }
    }
    rep.messages.push(format!(
        "{} train, {} validation segments drawn from {} training patients",
        train_pool.len() - n_val,
        n_val,
        split.train_records.len()
    ));

    let mut text = format!(
        "lsf-split 1\ntask {}\nseed {}\nvalidation_fraction {}\n",
        config.task.name(),
        config.seed,
        split.validation_fraction
    );
    text.push_str(&format!("train {}\n", split.train_records.join(" ")));
    text.push_str(&format!("test {}\n", split.test_records.join(" ")));
    text.push_str(&format!("discarded {}\n", split.discarded_records.join(" ")));
    for ((record, index), (tag, assign)) in &assignments {
        text.push_str(&format!(
            "seg {record} {index} {} {}\n",
            tag.name(),
            assign.name()
        ));
    }
    fs::write(split_manifest(config), &text)?;

    // Class distribution per split; validation segments count inside train.
    let train_infos: Vec<SegmentInfo> = infos
        .iter()
        .filter(|i| split.is_train(&i.record))
        .cloned()
        .collect();
    let test_infos: Vec<SegmentInfo> = infos
        .iter()
        .filter(|i| split.is_test(&i.record))
        .cloned()
        .collect();
    let report = distribution(&[("train", &train_infos[..]), ("test", &test_infos[..])]);
    let dist_text = report.to_text(config.task);
    fs::write(stage_dir.join("distribution.csv"), &dist_text)?;

    let input = file_digest(&segments_csv(config))?;
    write_manifest(
        &stage_dir,
        "split",
        config,
        &[("segments.csv".into(), input)],
        &[
            ("split.txt".into(), digest_bytes(text.as_bytes())),
            ("distribution.csv".into(), digest_bytes(dist_text.as_bytes())),
        ],
    )?;
    Ok(rep)
}

pub(super) fn read_split(config: &PipelineConfig) -> Result<SplitAssignments, PipelineError> {
    let path = require(split_manifest(config), "split")?;
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let magic = lines.next().unwrap_or_default();
    if magic != "lsf-split 1" {
        return Err(PipelineError::Artifact("bad split manifest magic".into()));
    }
    let mut task = None;
    let mut seed = 0u64;
    let mut train_records = Vec::new();
    let mut test_records = Vec::new();
    let mut segments = Vec::new();
    for line in lines {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("task") => task = Task::parse(tokens.next().unwrap_or_default()),
            Some("seed") => {
                seed = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| PipelineError::Artifact("bad split seed".into()))?
            }
            Some("validation_fraction") | Some("discarded") => {}
            Some("train") => train_records = tokens.map(String::from).collect(),
            Some("test") => test_records = tokens.map(String::from).collect(),
            Some("seg") => {
                let record = tokens
                    .next()
                    .ok_or_else(|| PipelineError::Artifact("seg line missing record".into()))?;
                let index: usize = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| PipelineError::Artifact("seg line missing index".into()))?;
                let tag = tokens
                    .next()
                    .and_then(ClassTag::parse)
                    .ok_or_else(|| PipelineError::Artifact("seg line missing tag".into()))?;
                let assign = tokens
                    .next()
                    .and_then(Assignment::parse)
                    .ok_or_else(|| PipelineError::Artifact("seg line missing assignment".into()))?;
                segments.push((record.to_string(), index, tag, assign));
            }
            Some(other) => {
                return Err(PipelineError::Artifact(format!(
                    "unknown split directive {other:?}"
                )))
            }
            None => {}
        }
    }
    Ok(SplitAssignments {
        task: task.ok_or_else(|| PipelineError::Artifact("split manifest lacks task".into()))?,
        seed,
        train_records,
        test_records,
        segments,
    })
}

// ------------------------------------------------------------ train-lstm

/// Load the cached tensors of the given assignment class, with labels, in
/// manifest order.
fn load_assigned_tensors(
    config: &PipelineConfig,
    split: &SplitAssignments,
    wanted: Assignment,
) -> Result<(Vec<FeatureTensor>, Vec<bool>), PipelineError> {
    let mut by_record: BTreeMap<&str, Vec<(usize, ClassTag)>> = BTreeMap::new();
    for (record, index, tag, assign) in &split.segments {
        if *assign == wanted {
            by_record.entry(record).or_default().push((*index, *tag));
        }
    }
    let mut tensors = Vec::new();
    let mut labels = Vec::new();
    for (record, picks) in by_record {
        let cache = read_feature_cache(&require(
            tensor_cache(config, record),
            "preprocess",
        )?)?;
        for (index, tag) in picks {
            let tensor = cache.get(index).ok_or_else(|| {
                PipelineError::Artifact(format!(
                    "record {record}: segment {index} beyond cache length {}",
                    cache.len()
                ))
            })?;
            let label = tag
                .label()
                .ok_or_else(|| PipelineError::Artifact("noisy segment in model set".into()))?;
            tensors.push(tensor.clone());
            labels.push(label);
        }
    }
    Ok((tensors, labels))
}

fn stage_train_lstm(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let mut rep = StageReport::new("train-lstm");
    let split = read_split(config)?;
    let stage_dir = dir(config, "lstm");
    fs::create_dir_all(&stage_dir)?;

    let (train_tensors, train_labels) = load_assigned_tensors(config, &split, Assignment::Train)?;
    let (val_tensors, val_labels) = load_assigned_tensors(config, &split, Assignment::Validation)?;
    if train_tensors.is_empty() || val_tensors.is_empty() {
        return Err(PipelineError::InvalidParam(
            "training or validation set is empty".into(),
        ));
    }

    // Leakage guard: statistics from the gradient-training segments only,
    // reused verbatim for validation and test.
    let stats = fit_norm_stats(&train_tensors, config.norm_mode)?;
    // Normalize in place to keep the peak footprint down; the AFIB training
    // set holds tens of thousands of 500x2 tensors.
    let norm_train: Vec<FeatureTensor> = train_tensors
        .into_iter()
        .map(|t| apply_norm(&stats, &t))
        .collect::<Result<_, _>>()?;
    let norm_val: Vec<FeatureTensor> = val_tensors
        .into_iter()
        .map(|t| apply_norm(&stats, &t))
        .collect::<Result<_, _>>()?;

    let train_set: Vec<(&FeatureTensor, f64)> = norm_train
        .iter()
        .zip(&train_labels)
        .map(|(t, &l)| (t, if l { 1.0 } else { 0.0 }))
        .collect();
    let val_set: Vec<(&FeatureTensor, f64)> = norm_val
        .iter()
        .zip(&val_labels)
        .map(|(t, &l)| (t, if l { 1.0 } else { 0.0 }))
        .collect();

    let model = LstmModel::new(config.hidden_size, 2, config.seed);
    let outcome = lstm::train(model, &train_set, &val_set, &config.train_config())?;
    rep.messages.push(format!(
        "best validation AP {:.4} at epoch {} ({} epochs run)",
        outcome.best_val_score,
        outcome.best_epoch,
        outcome.history.len()
    ));

    let model_digest = lstm::save_model(&lstm_model_path(config), &outcome.model)?;
    let norm_digest = stats.save(&norm_path(config))?;
    let history = outcome.history_csv();
    fs::write(stage_dir.join("history.csv"), &history)?;

    let input = file_digest(&split_manifest(config))?;
    write_manifest(
        &stage_dir,
        "train-lstm",
        config,
        &[("split.txt".into(), input)],
        &[
            ("model.lsfm".into(), model_digest),
            ("norm.lsfn".into(), norm_digest),
            ("history.csv".into(), digest_bytes(history.as_bytes())),
        ],
    )?;
    Ok(rep)
}

// ------------------------------------------------------ extract-features

fn write_vectors(
    path: &Path,
    features: &Mat,
    labels: &[bool],
) -> Result<u64, PipelineError> {
    let mut w = PayloadWriter::new();
    w.u32(features.rows as u32);
    w.u32(features.cols as u32);
    for (r, &label) in labels.iter().enumerate() {
        w.u32(u32::from(label));
        w.f64_slice(features.row(r));
    }
    Ok(container::write_file(path, VECTORS_MAGIC, &w.finish())?)
}

pub(super) fn read_vectors(path: &Path) -> Result<(Mat, Vec<bool>), PipelineError> {
    let (payload, _) = container::read_file(path, VECTORS_MAGIC)?;
    let mut r = PayloadReader::new(&payload);
    let n = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let mut mat = Mat::zeros(n, dim);
    let mut labels = Vec::with_capacity(n);
    for row in 0..n {
        labels.push(r.u32()? != 0);
        let vals = r.f64_vec(dim)?;
        mat.row_mut(row).copy_from_slice(&vals);
    }
    r.done()?;
    Ok((mat, labels))
}

fn stage_extract_features(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let rep = StageReport::new("extract-features");
    let split = read_split(config)?;
    let stage_dir = dir(config, "features100");
    fs::create_dir_all(&stage_dir)?;

    let (model, _) = lstm::load_model(&require(lstm_model_path(config), "train-lstm")?)?;
    let stats = NormStats::load(&require(norm_path(config), "train-lstm")?)?;

    let mut outputs = Vec::new();
    for (name, assign) in [
        ("train", Assignment::Train),
        ("val", Assignment::Validation),
        ("test", Assignment::Test),
    ] {
        let (tensors, labels) = load_assigned_tensors(config, &split, assign)?;
        let normed: Vec<FeatureTensor> = tensors
            .iter()
            .map(|t| apply_norm(&stats, t))
            .collect::<Result<_, _>>()?;
        let refs: Vec<&FeatureTensor> = normed.iter().collect();
        let features = lstm::extract_features(&model, &refs)?;
        let d = write_vectors(&vectors_path(config, name), &features, &labels)?;
        outputs.push((format!("{name}.lsfv"), d));

        let mut index_csv = String::from("row,label\n");
        for (row, &label) in labels.iter().enumerate() {
            index_csv.push_str(&format!("{row},{}\n", u8::from(label)));
        }
        let index_path = stage_dir.join(format!("{name}_index.csv"));
        fs::write(&index_path, &index_csv)?;
        outputs.push((
            format!("{name}_index.csv"),
            digest_bytes(index_csv.as_bytes()),
        ));
    }

    let inputs = vec![
        ("split.txt".into(), file_digest(&split_manifest(config))?),
        ("model.lsfm".into(), file_digest(&lstm_model_path(config))?),
    ];
    write_manifest(&stage_dir, "extract-features", config, &inputs, &outputs)?;
    Ok(rep)
}

// ------------------------------------------------------------- train-svm

fn stage_train_svm(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let mut rep = StageReport::new("train-svm");
    let stage_dir = dir(config, "svm");
    fs::create_dir_all(&stage_dir)?;

    let (train_feats, train_labels) =
        read_vectors(&require(vectors_path(config, "train"), "extract-features")?)?;
    let (val_feats, val_labels) =
        read_vectors(&require(vectors_path(config, "val"), "extract-features")?)?;

    let gamma = config
        .svm_gamma
        .unwrap_or_else(|| svm::scale_gamma(&train_feats));
    let options = GridSearchOptions {
        gamma,
        tolerance: config.svm_tolerance,
        max_iterations: config.svm_max_iterations,
        cache_mb: 256,
        subsample: config.grid_subsample,
        seed: config.seed,
    };
    let (result, model) = svm::grid_search(
        &train_feats,
        &train_labels,
        &val_feats,
        &val_labels,
        &options,
    )?;
    rep.messages.push(format!(
        "best C {:.1}, class weights ({:.1}, {:.1}), validation AP {:.4}, {} support vectors",
        result.best_config.c,
        result.best_config.class_weight.0,
        result.best_config.class_weight.1,
        result.best_val_ap,
        model.dual_coeffs.len()
    ));
    if !model.converged || result.evaluated.iter().any(|p| !p.converged) {
        rep.convergence_warning = true;
        rep.messages
            .push("at least one solver hit its iteration cap".into());
    }

    let model_digest = svm::save_svm(&svm_model_path(config), &model)?;
    let grid_csv = result.csv();
    fs::write(stage_dir.join("grid.csv"), &grid_csv)?;

    let inputs = vec![
        (
            "train.lsfv".into(),
            file_digest(&vectors_path(config, "train"))?,
        ),
        ("val.lsfv".into(), file_digest(&vectors_path(config, "val"))?),
    ];
    // grid.csv carries wall-clock timings; it is a diagnostic, not a
    // manifest output.
    write_manifest(
        &stage_dir,
        "train-svm",
        config,
        &inputs,
        &[("model.lsfs".into(), model_digest)],
    )?;
    Ok(rep)
}

// -------------------------------------------------------------- evaluate

fn write_eval(
    stage_dir: &Path,
    which: &str,
    report: &EvalReport,
) -> Result<Vec<(String, u64)>, PipelineError> {
    let text = report.to_text();
    fs::write(stage_dir.join(format!("{which}.txt")), &text)?;
    let pr = report.pr_csv();
    fs::write(stage_dir.join(format!("{which}_pr.csv")), &pr)?;
    let roc = report.roc_csv();
    fs::write(stage_dir.join(format!("{which}_roc.csv")), &roc)?;
    Ok(vec![
        (format!("{which}.txt"), digest_bytes(text.as_bytes())),
        (format!("{which}_pr.csv"), digest_bytes(pr.as_bytes())),
        (format!("{which}_roc.csv"), digest_bytes(roc.as_bytes())),
    ])
}

fn stage_evaluate(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let mut rep = StageReport::new("evaluate");
    let split = read_split(config)?;
    let stage_dir = dir(config, "eval");
    fs::create_dir_all(&stage_dir)?;

    // Baseline: LSTM head probabilities on the test tensors at threshold 0.5.
    let (model, _) = lstm::load_model(&require(lstm_model_path(config), "train-lstm")?)?;
    let stats = NormStats::load(&require(norm_path(config), "train-lstm")?)?;
    let (test_tensors, test_labels) = load_assigned_tensors(config, &split, Assignment::Test)?;
    if test_tensors.is_empty() {
        return Err(PipelineError::InvalidParam("test set is empty".into()));
    }
    let mut probs = Vec::with_capacity(test_tensors.len());
    for t in &test_tensors {
        probs.push(model.predict_proba(&apply_norm(&stats, t)?)?);
    }
    let baseline_preds = ScoredPredictions::new(probs, test_labels.clone())?;
    let baseline = evaluate(&baseline_preds, 0.5)?;
    let mut outputs = write_eval(&stage_dir, "baseline", &baseline)?;

    // Fused model: SVM decision scores on the exported test features at
    // threshold 0.
    let (svm_model, _) = svm::load_svm(&require(svm_model_path(config), "train-svm")?)?;
    let (test_feats, test_feat_labels) =
        read_vectors(&require(vectors_path(config, "test"), "extract-features")?)?;
    let mut scores = Vec::with_capacity(test_feats.rows);
    for r in 0..test_feats.rows {
        scores.push(svm::decision_score(&svm_model, test_feats.row(r))?);
    }
    let lsf_preds = ScoredPredictions::new(scores, test_feat_labels)?;
    let lsf = evaluate(&lsf_preds, 0.0)?;
    outputs.extend(write_eval(&stage_dir, "lsf", &lsf)?);

    rep.messages.push(format!(
        "baseline AP {:.4}, LSF AP {:.4} on {} test segments",
        baseline.ap,
        lsf.ap,
        test_tensors.len()
    ));

    let inputs = vec![
        ("model.lsfm".into(), file_digest(&lstm_model_path(config))?),
        ("model.lsfs".into(), file_digest(&svm_model_path(config))?),
        (
            "test.lsfv".into(),
            file_digest(&vectors_path(config, "test"))?,
        ),
    ];
    write_manifest(&stage_dir, "evaluate", config, &inputs, &outputs)?;
    Ok(rep)
}

// ------------------------------------------------------- export-features

fn stage_export_features(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let rep = StageReport::new("export-features");
    let stage_dir = dir(config, "export");
    fs::create_dir_all(&stage_dir)?;

    let mut csv = String::from("split,row,label");
    let (first, _) = read_vectors(&require(vectors_path(config, "train"), "extract-features")?)?;
    for d in 0..first.cols {
        csv.push_str(&format!(",v{d}"));
    }
    csv.push('\n');
    for split in ["train", "val", "test"] {
        let (mat, labels) = read_vectors(&require(vectors_path(config, split), "extract-features")?)?;
        for (r, &label) in labels.iter().enumerate() {
            csv.push_str(&format!("{split},{r},{}", u8::from(label)));
            for v in mat.row(r) {
                csv.push_str(&format!(",{v:.6}"));
            }
            csv.push('\n');
        }
    }
    fs::write(stage_dir.join("vectors.csv"), &csv)?;

    let inputs = vec![(
        "train.lsfv".into(),
        file_digest(&vectors_path(config, "train"))?,
    )];
    write_manifest(
        &stage_dir,
        "export-features",
        config,
        &inputs,
        &[("vectors.csv".into(), digest_bytes(csv.as_bytes()))],
    )?;
    Ok(rep)
}

// ------------------------------------------------------------------ misc

/// Convenience used by tests and the CLI's `run-all`: run stages in
/// dependency order up to and including `last`.
pub fn run_through(last: Stage, config: &PipelineConfig) -> Result<Vec<StageReport>, PipelineError> {
    let order = [
        Stage::Ingest,
        Stage::Preprocess,
        Stage::Split,
        Stage::TrainLstm,
        Stage::ExtractFeatures,
        Stage::TrainSvm,
        Stage::Evaluate,
    ];
    let mut reports = Vec::new();
    for stage in order {
        reports.push(run_stage(stage, config)?);
        if stage == last {
            break;
        }
    }
    Ok(reports)
}
