//! Dataset construction: 10-second windowing, binary labeling (beat classes
//! for the arrhythmia task, rhythm spans for the atrial-fibrillation task),
//! inter-patient train/test splits, and class-distribution reporting.

mod labeling;
mod split;

pub use labeling::{
    aami_class, is_beat_code, label_afib, label_arrhythmia, rhythm_kind, AamiClass, RhythmKind,
};
pub use split::{
    make_split, SplitSpec, AFIB_TEST_RECORDS, ARRHYTHMIA_DISCARDED, ARRHYTHMIA_TEST_RECORDS,
};

use crate::preprocess::FeatureTensor;
use crate::wfdb::EcgRecord;
use std::fmt;

#[derive(Debug)]
pub enum DatasetError {
    /// Records required by the split definition are absent.
    MissingRecords { task: Task, absent: Vec<String> },
    InvalidParam(String),
}

impl fmt::Display for DatasetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingRecords { task, absent } => {
                write!(f, "{task:?} split needs absent records: {}", absent.join(", "))
            }
            Self::InvalidParam(m) => write!(f, "invalid parameter: {m}"),
        }
    }
}

impl std::error::Error for DatasetError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Arrhythmia,
    Afib,
}

impl Task {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "arrhythmia" => Some(Self::Arrhythmia),
            "afib" => Some(Self::Afib),
            _ => None,
        }
    }
    pub fn name(self) -> &'static str {
        match self {
            Self::Arrhythmia => "arrhythmia",
            Self::Afib => "afib",
        }
    }
    /// Human names of the two label classes (negative, positive).
    pub fn class_names(self) -> (&'static str, &'static str) {
        match self {
            Self::Arrhythmia => ("normal", "abnormal"),
            Self::Afib => ("non-afib", "afib"),
        }
    }
}

/// Window class: `Positive` is "abnormal" for the arrhythmia task and "AFIB"
/// for the atrial-fibrillation task. Noisy windows carry no training label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassTag {
    Negative,
    Positive,
    Noisy,
}

impl ClassTag {
    /// Binary label for trainable windows.
    pub fn label(self) -> Option<bool> {
        match self {
            Self::Negative => Some(false),
            Self::Positive => Some(true),
            Self::Noisy => None,
        }
    }
    pub fn name(self) -> &'static str {
        match self {
            Self::Negative => "negative",
            Self::Positive => "positive",
            Self::Noisy => "noisy",
        }
    }
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "negative" => Some(Self::Negative),
            "positive" => Some(Self::Positive),
            "noisy" => Some(Self::Noisy),
            _ => None,
        }
    }
}

/// Everything known about one window except its feature tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentInfo {
    pub record: String,
    pub index: usize,
    /// First sample of the window at the record's native rate.
    pub start_sample: usize,
    pub tag: ClassTag,
}

/// A labeled window with its preprocessed features.
#[derive(Debug, Clone)]
pub struct Segment {
    pub info: SegmentInfo,
    pub features: FeatureTensor,
}

/// Consecutive non-overlapping windows of `window_s` seconds at the native
/// rate; a trailing partial window is dropped. Returns the half-open sample
/// ranges plus a warning when the record is shorter than one window.
pub fn segment_record(
    record: &EcgRecord,
    window_s: f64,
) -> (Vec<(usize, usize)>, Option<String>) {
    let window = (window_s * record.header.sampling_rate).round() as usize;
    let n = record.header.n_samples;
    if window == 0 || n < window {
        return (
            Vec::new(),
            Some(format!(
                "record {} shorter than one {window_s} s window ({n} samples)",
                record.header.record_name
            )),
        );
    }
    let count = n / window;
    ((0..count).map(|w| (w * window, (w + 1) * window)).collect(), None)
}

/// Segment and label a whole record for the given task.
pub fn label_record(record: &EcgRecord, task: Task, window_s: f64) -> Vec<SegmentInfo> {
    let (windows, _) = segment_record(record, window_s);
    windows
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| {
            let tag = match task {
                Task::Arrhythmia => label_arrhythmia(start as u64, end as u64, &record.annotations),
                Task::Afib => label_afib(start as u64, end as u64, &record.annotations),
            };
            SegmentInfo {
                record: record.header.record_name.clone(),
                index,
                start_sample: start,
                tag,
            }
        })
        .collect()
}

/// Per-split class counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionReport {
    /// (split name, negative, positive, noisy, total) per row, then a total row.
    pub rows: Vec<DistributionRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionRow {
    pub split: String,
    pub negative: usize,
    pub positive: usize,
    pub noisy: usize,
    pub total: usize,
}

/// Count classes over named groups of segments.
pub fn distribution(groups: &[(&str, &[SegmentInfo])]) -> DistributionReport {
    let mut rows = Vec::new();
    let mut grand = DistributionRow {
        split: "total".into(),
        negative: 0,
        positive: 0,
        noisy: 0,
        total: 0,
    };
    for (name, segments) in groups {
        let mut row = DistributionRow {
            split: (*name).to_string(),
            negative: 0,
            positive: 0,
            noisy: 0,
            total: 0,
        };
        for s in *segments {
            match s.tag {
                ClassTag::Negative => row.negative += 1,
                ClassTag::Positive => row.positive += 1,
                ClassTag::Noisy => row.noisy += 1,
            }
            row.total += 1;
        }
        grand.negative += row.negative;
        grand.positive += row.positive;
        grand.noisy += row.noisy;
        grand.total += row.total;
        rows.push(row);
    }
    rows.push(grand);
    DistributionReport { rows }
}

impl DistributionReport {
    pub fn to_text(&self, task: Task) -> String {
        let (neg, pos) = task.class_names();
        let mut out = format!("split,{neg},{pos},noisy,total\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.split, r.negative, r.positive, r.noisy, r.total
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wfdb::{import_interchange, AnnotationEvent};

    fn record_with(n_samples: usize, fs: f64, annotations: Vec<AnnotationEvent>) -> EcgRecord {
        let mut text = format!(
            "ecgtext 1\nrecord t\nfs {fs}\nsignals 1\nsamples {n_samples}\ngain 200\nbaseline 0\n"
        );
        for _ in 0..n_samples {
            text.push_str("d 0\n");
        }
        text.push_str("end\n");
        let mut r = import_interchange(&text).unwrap();
        r.annotations = annotations;
        r
    }

    #[test]
    fn thirty_minute_record_yields_180_windows() {
        // The standard 650000-sample record at 360 Hz.
        let r = record_with(650000, 360.0, vec![]);
        let (windows, warning) = segment_record(&r, 10.0);
        assert_eq!(windows.len(), 180);
        assert!(warning.is_none());
        assert_eq!(windows[0], (0, 3600));
        assert_eq!(windows[179], (179 * 3600, 180 * 3600));
    }

    #[test]
    fn nine_second_record_yields_nothing_with_warning() {
        let r = record_with(9 * 360, 360.0, vec![]);
        let (windows, warning) = segment_record(&r, 10.0);
        assert!(windows.is_empty());
        assert!(warning.is_some());
    }

    #[test]
    fn twenty_five_seconds_yields_two_windows() {
        let r = record_with(25 * 360, 360.0, vec![]);
        let (windows, _) = segment_record(&r, 10.0);
        assert_eq!(windows.len(), 2);
    }

    #[test]
    fn distribution_sums() {
        let seg = |tag| SegmentInfo {
            record: "x".into(),
            index: 0,
            start_sample: 0,
            tag,
        };
        let a = vec![seg(ClassTag::Negative), seg(ClassTag::Positive), seg(ClassTag::Noisy)];
        let b = vec![seg(ClassTag::Positive)];
        let report = distribution(&[("ds1", &a), ("ds2", &b)]);
        assert_eq!(report.rows[0].total, 3);
        assert_eq!(report.rows[1].positive, 1);
        let total = &report.rows[2];
        assert_eq!(total.total, 4);
        assert_eq!(total.negative + total.positive + total.noisy, total.total);
    }
}
