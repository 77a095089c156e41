//! Reader for the standard waveform-database record layout: `<name>.hea`
//! (text header), `<name>.dat` (format-212 packed signal), `<name>.atr`
//! (binary annotation stream), plus a line-oriented text interchange format
//! for fixtures and synthetic records.
//!
//! Samples are kept as raw adu integers; conversion to physical units happens
//! downstream using the header's gain and baseline.

mod annotation;
mod codes;
mod header;
mod interchange;
mod signal;

pub use annotation::{read_annotations, AnnotationEvent};
pub use codes::{code_for_mnemonic, mnemonic, ANN_CODE_MAX, RHYTHM_CHANGE};
pub use header::{parse_header, RecordHeader, SignalSpec};
pub use interchange::{export_interchange, import_interchange, INTERCHANGE_EXTENSION};
pub use signal::{decode_format212, encode_format212, sign_extend12};

use std::fmt;
use std::io;
use std::path::Path;

#[derive(Debug)]
pub enum WfdbError {
    Io(io::Error),
    /// Header line that does not match the record-line or signal-line grammar.
    Parse { line: usize, message: String },
    /// Signal format other than 212.
    UnsupportedFormat(u16),
    /// Byte stream ended before the declared sample count was reached.
    TruncatedSignal { offset: usize },
    /// Annotation stream ended without the zero end-word.
    MissingTerminator,
    /// Interchange document violates its schema.
    Interchange { line: usize, message: String },
}

impl fmt::Display for WfdbError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "i/o error: {e}"),
            Self::Parse { line, message } => write!(f, "header line {line}: {message}"),
            Self::UnsupportedFormat(code) => write!(f, "unsupported signal format {code}"),
            Self::TruncatedSignal { offset } => {
                write!(f, "signal data truncated at byte offset {offset}")
            }
            Self::MissingTerminator => write!(f, "annotation stream missing zero end-word"),
            Self::Interchange { line, message } => {
                write!(f, "interchange line {line}: {message}")
            }
        }
    }
}

impl std::error::Error for WfdbError {}

impl From<io::Error> for WfdbError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

/// A decoded record: header metadata, per-signal sample vectors in adu, and
/// the attached annotation events.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub header: RecordHeader,
    /// One vector per signal, each `header.n_samples` long.
    pub signals: Vec<Vec<i32>>,
    /// Sorted by `sample_index`.
    pub annotations: Vec<AnnotationEvent>,
    /// Warnings collected while reading (clamped annotations, unknown codes).
    pub warnings: Vec<String>,
}

impl EcgRecord {
    pub fn patient_id(&self) -> &str {
        &self.header.record_name
    }

    /// Signal converted to physical units (mV) using gain and baseline.
    pub fn physical(&self, channel: usize) -> Vec<f64> {
        let spec = &self.header.signals[channel];
        let gain = if spec.gain == 0.0 { 200.0 } else { spec.gain };
        self.signals[channel]
            .iter()
            .map(|&s| (f64::from(s) - f64::from(spec.baseline)) / gain)
            .collect()
    }

    /// Clamp annotation indices past the end of the signal to the last
    /// sample, recording a warning for each. Real files carry trailing
    /// annotations occasionally.
    fn clamp_annotations(&mut self) {
        let n = self.header.n_samples as u64;
        if n == 0 {
            return;
        }
        for ev in &mut self.annotations {
            if ev.sample_index >= n {
                self.warnings.push(format!(
                    "annotation at sample {} beyond signal end {}; clamped",
                    ev.sample_index,
                    n - 1
                ));
                ev.sample_index = n - 1;
            }
        }
    }
}

/// Read the `<name>.hea` / `<name>.dat` / `<name>.atr` triple rooted at
/// `path_no_ext`. The `.atr` file is optional (a record may be unannotated).
pub fn read_record(path_no_ext: &Path) -> Result<EcgRecord, WfdbError> {
    let hea = path_no_ext.with_extension("hea");
    let header_text = std::fs::read_to_string(&hea)?;
    let mut header = parse_header(&header_text)?;

    let dat = path_no_ext.with_extension("dat");
    let dat_bytes = std::fs::read(&dat)?;

    for s in &header.signals {
        if s.format != 212 {
            return Err(WfdbError::UnsupportedFormat(s.format));
        }
    }
    let n_signals = header.signals.len();
    if n_signals == 0 || n_signals > 2 {
        return Err(WfdbError::Parse {
            line: 1,
            message: format!("format 212 supports 1 or 2 signals, header declares {n_signals}"),
        });
    }

    // Frames for 212: one sample per signal per frame. With 2 signals each
    // 3-byte group is exactly one frame; with 1 signal a group holds two
    // consecutive frames.
    let total_samples = if header.n_samples == 0 {
        // Unspecified length: infer from the data file.
        let inferred = dat_bytes.len() / 3 * 2;
        header.n_samples = inferred / n_signals;
        header.n_samples * n_signals
    } else {
        header.n_samples * n_signals
    };

    let n_pairs = total_samples / 2 + total_samples % 2;
    let (first, second) = decode_format212(&dat_bytes, n_pairs)?;

    // Interleave the pair streams back into sample order, then split by signal.
    let mut flat = Vec::with_capacity(total_samples);
    for i in 0..n_pairs {
        flat.push(first[i]);
        if flat.len() < total_samples {
            flat.push(second[i]);
        }
    }
    let mut signals = vec![Vec::with_capacity(header.n_samples); n_signals];
    for (i, s) in flat.into_iter().enumerate() {
        signals[i % n_signals].push(s);
    }

    let atr = path_no_ext.with_extension("atr");
    let (annotations, mut warnings) = if atr.exists() {
        let atr_bytes = std::fs::read(&atr)?;
        read_annotations(&atr_bytes)?
    } else {
        (Vec::new(), Vec::new())
    };

    let mut record = EcgRecord {
        header,
        signals,
        annotations,
        warnings: Vec::new(),
    };
    record.warnings.append(&mut warnings);
    record.clamp_annotations();
    Ok(record)
}
