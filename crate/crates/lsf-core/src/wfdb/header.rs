//! Text header (`.hea`) parser.
//!
//! Grammar (subset sufficient for the two target databases):
//!
//! ```text
//! record_name n_signals [sampling_rate [counter_freq[/base]] [n_samples ...]]
//! file_name format gain[(baseline)][/units] [adc_res [adc_zero [init_value [checksum [block_size [description]]]]]]
//! ```
//!
//! Lines starting with `#` and blank lines are ignored.

use super::WfdbError;

/// Per-signal description from a header signal line.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    /// Storage format code; only 212 is supported downstream.
    pub format: u16,
    /// adu per physical unit (mV). 0 means uncalibrated (treat as 200).
    pub gain: f64,
    /// adu value corresponding to 0 physical units. Defaults to adc_zero.
    pub baseline: i32,
    pub adc_zero: i32,
    pub initial_value: i32,
    pub description: String,
}

/// Parsed record header.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub record_name: String,
    pub n_signals: usize,
    pub sampling_rate: f64,
    /// Samples per signal; 0 when the header leaves the length unspecified.
    pub n_samples: usize,
    pub signals: Vec<SignalSpec>,
}

fn parse_err(line: usize, message: impl Into<String>) -> WfdbError {
    WfdbError::Parse {
        line,
        message: message.into(),
    }
}

/// Parse header text into a `RecordHeader`.
pub fn parse_header(text: &str) -> Result<RecordHeader, WfdbError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line_no, record_line) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty header"))?;
    let tokens: Vec<&str> = record_line.split_whitespace().collect();
    if tokens.len() < 2 {
        return Err(parse_err(line_no, "record line needs name and signal count"));
    }
    // Record name may carry a /segments suffix in multi-segment headers,
    // which are out of scope.
    let record_name = tokens[0];
    if record_name.contains('/') {
        return Err(parse_err(line_no, "multi-segment headers not supported"));
    }
    let n_signals: usize = tokens[1]
        .parse()
        .map_err(|_| parse_err(line_no, format!("bad signal count {:?}", tokens[1])))?;
    if n_signals < 1 {
        return Err(parse_err(line_no, "n_signals must be >= 1"));
    }
    // Sampling rate may carry a /counter suffix; default is 250 Hz.
    let sampling_rate = match tokens.get(2) {
        Some(tok) => {
            let base = tok.split('/').next().unwrap_or(tok);
            let v: f64 = base
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad sampling rate {tok:?}")))?;
            if v <= 0.0 {
                return Err(parse_err(line_no, "sampling rate must be > 0"));
            }
            v
        }
        None => 250.0,
    };
    let n_samples: usize = match tokens.get(3) {
        Some(tok) => tok
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad sample count {tok:?}")))?,
        None => 0,
    };

    let mut signals = Vec::with_capacity(n_signals);
    for _ in 0..n_signals {
        let (line_no, sig_line) = lines
            .next()
            .ok_or_else(|| parse_err(0, "missing signal line"))?;
        signals.push(parse_signal_line(line_no, sig_line)?);
    }

    Ok(RecordHeader {
        record_name: record_name.to_string(),
        n_signals,
        sampling_rate,
        n_samples,
        signals,
    })
}

fn parse_signal_line(line_no: usize, line: &str) -> Result<SignalSpec, WfdbError> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() < 2 {
        return Err(parse_err(line_no, "signal line needs file name and format"));
    }
    let file_name = tokens[0].to_string();

    // Format token may carry xN / :N / +N modifiers (skew, offset); none of
    // the target records use them.
    let fmt_tok = tokens[1];
    let digits: String = fmt_tok.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() || digits.len() != fmt_tok.len() {
        return Err(parse_err(
            line_no,
            format!("unsupported format token {fmt_tok:?}"),
        ));
    }
    let format: u16 = digits
        .parse()
        .map_err(|_| parse_err(line_no, format!("bad format code {fmt_tok:?}")))?;

    // gain[(baseline)][/units]
    let mut gain = 200.0;
    let mut baseline: Option<i32> = None;
    if let Some(tok) = tokens.get(2) {
        let no_units = tok.split('/').next().unwrap_or(tok);
        let (gain_part, base_part) = match no_units.find('(') {
            Some(open) => {
                let close = no_units
                    .find(')')
                    .ok_or_else(|| parse_err(line_no, "unclosed baseline parenthesis"))?;
                (&no_units[..open], Some(&no_units[open + 1..close]))
            }
            None => (no_units, None),
        };
        gain = gain_part
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad gain {tok:?}")))?;
        if let Some(b) = base_part {
            baseline = Some(
                b.parse()
                    .map_err(|_| parse_err(line_no, format!("bad baseline {tok:?}")))?,
            );
        }
    }
    if gain == 0.0 {
        gain = 200.0; // uncalibrated
    }

    let adc_zero: i32 = match tokens.get(4) {
        Some(tok) => tok
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad adc zero {tok:?}")))?,
        None => 0,
    };
    let initial_value: i32 = match tokens.get(5) {
        Some(tok) => tok
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad initial value {tok:?}")))?,
        None => adc_zero,
    };
    let description = tokens.get(8..).map(|t| t.join(" ")).unwrap_or_default();

    Ok(SignalSpec {
        file_name,
        format,
        gain,
        baseline: baseline.unwrap_or(adc_zero),
        adc_zero,
        initial_value,
        description,
    })
}
