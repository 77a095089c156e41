//! Line-oriented text interchange format for records.
//!
//! Lossless for samples and annotations; used for fixtures, synthetic
//! records, and moving data between tools. Schema (one directive per line,
//! `#` comments allowed):
//!
//! ```text
//! ecgtext 1
//! record <name>
//! fs <sampling_rate_hz>
//! signals <n>
//! samples <n_per_signal>
//! gain <g_0> ... <g_{n-1}>
//! baseline <b_0> ... <b_{n-1}>
//! d <adu_0> ... <adu_{n-1}>      (one line per frame, `samples` lines)
//! a <sample_index> <code> [aux]  (zero or more, sorted)
//! end
//! ```

use super::annotation::AnnotationEvent;
use super::header::{RecordHeader, SignalSpec};
use super::{EcgRecord, WfdbError};

pub const INTERCHANGE_EXTENSION: &str = "ecgtxt";

fn ierr(line: usize, message: impl Into<String>) -> WfdbError {
    WfdbError::Interchange {
        line,
        message: message.into(),
    }
}

/// Render a record as interchange text.
pub fn export_interchange(record: &EcgRecord) -> String {
    let h = &record.header;
    let mut out = String::new();
    out.push_str("ecgtext 1\n");
    out.push_str(&format!("record {}\n", h.record_name));
    out.push_str(&format!("fs {}\n", h.sampling_rate));
    out.push_str(&format!("signals {}\n", h.n_signals));
    out.push_str(&format!("samples {}\n", h.n_samples));
    let gains: Vec<String> = h.signals.iter().map(|s| s.gain.to_string()).collect();
    out.push_str(&format!("gain {}\n", gains.join(" ")));
    let baselines: Vec<String> = h.signals.iter().map(|s| s.baseline.to_string()).collect();
    out.push_str(&format!("baseline {}\n", baselines.join(" ")));
    for i in 0..h.n_samples {
        out.push('d');
        for sig in &record.signals {
            out.push(' ');
            out.push_str(&sig[i].to_string());
        }
        out.push('\n');
    }
    for ev in &record.annotations {
        match &ev.aux {
            Some(aux) => out.push_str(&format!("a {} {} {}\n", ev.sample_index, ev.code, aux)),
            None => out.push_str(&format!("a {} {}\n", ev.sample_index, ev.code)),
        }
    }
    out.push_str("end\n");
    out
}

/// Parse interchange text back into a record.
pub fn import_interchange(text: &str) -> Result<EcgRecord, WfdbError> {
    let mut record_name = None;
    let mut fs = None;
    let mut n_signals = None;
    let mut n_samples = None;
    let mut gains: Vec<f64> = Vec::new();
    let mut baselines: Vec<i32> = Vec::new();
    let mut signals: Vec<Vec<i32>> = Vec::new();
    let mut annotations: Vec<AnnotationEvent> = Vec::new();
    let mut saw_magic = false;
    let mut saw_end = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if saw_end {
            return Err(ierr(line_no, "content after end directive"));
        }
        let mut tokens = line.split_whitespace();
        let directive = tokens.next().unwrap();
        if !saw_magic {
            if directive != "ecgtext" {
                return Err(ierr(line_no, "missing ecgtext magic line"));
            }
            let version = tokens.next().ok_or_else(|| ierr(line_no, "missing version"))?;
            if version != "1" {
                return Err(ierr(line_no, format!("unsupported version {version}")));
            }
            saw_magic = true;
            continue;
        }
        match directive {
            "record" => {
                record_name = Some(
                    tokens
                        .next()
                        .ok_or_else(|| ierr(line_no, "missing record name"))?
                        .to_string(),
                );
            }
            "fs" => {
                let v: f64 = tokens
                    .next()
                    .ok_or_else(|| ierr(line_no, "missing fs value"))?
                    .parse()
                    .map_err(|_| ierr(line_no, "bad fs value"))?;
                if v <= 0.0 {
                    return Err(ierr(line_no, "fs must be > 0"));
                }
                fs = Some(v);
            }
            "signals" => {
                let v: usize = tokens
                    .next()
                    .ok_or_else(|| ierr(line_no, "missing signal count"))?
                    .parse()
                    .map_err(|_| ierr(line_no, "bad signal count"))?;
                if v == 0 {
                    return Err(ierr(line_no, "signals must be >= 1"));
                }
                n_signals = Some(v);
                signals = vec![Vec::new(); v];
            }
            "samples" => {
                n_samples = Some(
                    tokens
                        .next()
                        .ok_or_else(|| ierr(line_no, "missing sample count"))?
                        .parse::<usize>()
                        .map_err(|_| ierr(line_no, "bad sample count"))?,
                );
            }
            "gain" => {
                gains = tokens
                    .map(|t| t.parse::<f64>().map_err(|_| ierr(line_no, "bad gain")))
                    .collect::<Result<_, _>>()?;
            }
            "baseline" => {
                baselines = tokens
                    .map(|t| t.parse::<i32>().map_err(|_| ierr(line_no, "bad baseline")))
                    .collect::<Result<_, _>>()?;
            }
            "d" => {
                let ns = n_signals.ok_or_else(|| ierr(line_no, "d before signals"))?;
                for sig in signals.iter_mut() {
                    let v: i32 = tokens
                        .next()
                        .ok_or_else(|| ierr(line_no, format!("frame needs {ns} samples")))?
                        .parse()
                        .map_err(|_| ierr(line_no, "bad sample value"))?;
                    sig.push(v);
                }
                if tokens.next().is_some() {
                    return Err(ierr(line_no, format!("frame has more than {ns} samples")));
                }
            }
            "a" => {
                let sample_index: u64 = tokens
                    .next()
                    .ok_or_else(|| ierr(line_no, "missing annotation sample"))?
                    .parse()
                    .map_err(|_| ierr(line_no, "bad annotation sample"))?;
                let code: u8 = tokens
                    .next()
                    .ok_or_else(|| ierr(line_no, "missing annotation code"))?
                    .parse()
                    .map_err(|_| ierr(line_no, "bad annotation code"))?;
                let rest: Vec<&str> = tokens.collect();
                let aux = if rest.is_empty() {
                    None
                } else {
                    Some(rest.join(" "))
                };
                annotations.push(AnnotationEvent {
                    sample_index,
                    code,
                    aux,
                });
            }
            "end" => saw_end = true,
            other => return Err(ierr(line_no, format!("unknown directive {other:?}"))),
        }
    }
    if !saw_magic {
        return Err(ierr(0, "empty document"));
    }
    if !saw_end {
        return Err(ierr(0, "missing end directive"));
    }

    let record_name = record_name.ok_or_else(|| ierr(0, "missing record directive"))?;
    let fs = fs.ok_or_else(|| ierr(0, "missing fs directive"))?;
    let n_signals = n_signals.ok_or_else(|| ierr(0, "missing signals directive"))?;
    let n_samples = n_samples.ok_or_else(|| ierr(0, "missing samples directive"))?;
    for sig in &signals {
        if sig.len() != n_samples {
            return Err(ierr(
                0,
                format!("declared {} samples, found {}", n_samples, sig.len()),
            ));
        }
    }
    if gains.len() != n_signals || baselines.len() != n_signals {
        return Err(ierr(0, "gain/baseline arity must match signal count"));
    }
    annotations.sort_by_key(|e| e.sample_index);

    let specs = (0..n_signals)
        .map(|i| SignalSpec {
            file_name: format!("{record_name}.dat"),
            format: 212,
            gain: gains[i],
            baseline: baselines[i],
            adc_zero: baselines[i],
            initial_value: signals[i].first().copied().unwrap_or(0),
            description: String::new(),
        })
        .collect();

    let mut record = EcgRecord {
        header: RecordHeader {
            record_name,
            n_signals,
            sampling_rate: fs,
            n_samples,
            signals: specs,
        },
        signals,
        annotations,
        warnings: Vec::new(),
    };
    record.clamp_annotations();
    Ok(record)
}
