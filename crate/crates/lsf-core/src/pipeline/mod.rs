//! On-disk stage orchestration. Stages communicate only through artifacts
//! under the output directory, each with a manifest recording the config
//! digest and input digests, so long runs are resumable and reruns are
//! byte-comparable.

mod bench;
mod config;
mod report;
mod stages;

pub use bench::{benchmark, BenchmarkReport, StageStats};
pub use config::PipelineConfig;
pub use report::{comparison_report, ComparisonReport, MetricsRow};
pub use stages::{run_stage, run_through, Assignment, SplitAssignments, StageReport};

use crate::container::ContainerError;
use crate::dataset::DatasetError;
use crate::lstm::LstmError;
use crate::metrics::MetricError;
use crate::preprocess::PreprocessError;
use crate::svm::SvmError;
use crate::wfdb::WfdbError;
use std::fmt;
use std::io;
use std::path::PathBuf;

#[derive(Debug)]
pub enum PipelineError {
    Io(io::Error),
    Wfdb(WfdbError),
    Preprocess(PreprocessError),
    Dataset(DatasetError),
    Lstm(LstmError),
    Svm(SvmError),
    Metric(MetricError),
    Container(ContainerError),
    Config { line: usize, message: String },
    /// An upstream artifact is absent; names the stage to run first.
    MissingArtifact { run_first: &'static str, path: PathBuf },
    /// An artifact exists but its contents are inconsistent.
    Artifact(String),
    InvalidParam(String),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "i/o error: {e}"),
            Self::Wfdb(e) => write!(f, "record parsing: {e}"),
            Self::Preprocess(e) => write!(f, "preprocessing: {e}"),
            Self::Dataset(e) => write!(f, "dataset: {e}"),
            Self::Lstm(e) => write!(f, "lstm: {e}"),
            Self::Svm(e) => write!(f, "svm: {e}"),
            Self::Metric(e) => write!(f, "metrics: {e}"),
            Self::Container(e) => write!(f, "artifact container: {e}"),
            Self::Config { line, message } => write!(f, "config line {line}: {message}"),
            Self::MissingArtifact { run_first, path } => write!(
                f,
                "missing artifact {}: run {run_first} first",
                path.display()
            ),
            Self::Artifact(m) => write!(f, "artifact error: {m}"),
            Self::InvalidParam(m) => write!(f, "invalid parameter: {m}"),
        }
    }
}

impl std::error::Error for PipelineError {}

macro_rules! from_err {
    ($variant:ident, $ty:ty) => {
        impl From<$ty> for PipelineError {
            fn from(e: $ty) -> Self {
                Self::$variant(e)
            }
        }
    };
}

from_err!(Io, io::Error);
from_err!(Wfdb, WfdbError);
from_err!(Preprocess, PreprocessError);
from_err!(Dataset, DatasetError);
from_err!(Lstm, LstmError);
from_err!(Svm, SvmError);
from_err!(Metric, MetricError);
from_err!(Container, ContainerError);

/// Pipeline stages in dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Preprocess,
    Split,
    TrainLstm,
    ExtractFeatures,
    TrainSvm,
    Evaluate,
    Benchmark,
    Report,
    ExportFeatures,
}

impl Stage {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ingest" => Some(Self::Ingest),
            "preprocess" => Some(Self::Preprocess),
            "split" => Some(Self::Split),
            "train-lstm" => Some(Self::TrainLstm),
            "extract-features" => Some(Self::ExtractFeatures),
            "train-svm" => Some(Self::TrainSvm),
            "evaluate" => Some(Self::Evaluate),
            "benchmark" => Some(Self::Benchmark),
            "report" => Some(Self::Report),
            "export-features" => Some(Self::ExportFeatures),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Ingest => "ingest",
            Self::Preprocess => "preprocess",
            Self::Split => "split",
            Self::TrainLstm => "train-lstm",
            Self::ExtractFeatures => "extract-features",
            Self::TrainSvm => "train-svm",
            Self::Evaluate => "evaluate",
            Self::Benchmark => "benchmark",
            Self::Report => "report",
            Self::ExportFeatures => "export-features",
        }
    }

    /// Every stage in pipeline order up to and including `self`
    /// (benchmark/report/export hang off evaluate's prerequisites).
    pub fn all() -> [Stage; 10] {
        [
            Self::Ingest,
            Self::Preprocess,
            Self::Split,
            Self::TrainLstm,
            Self::ExtractFeatures,
            Self::TrainSvm,
            Self::Evaluate,
            Self::Benchmark,
            Self::Report,
            Self::ExportFeatures,
        ]
    }
}
