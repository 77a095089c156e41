//! Binary annotation stream reader (MIT format).
//!
//! The stream is a sequence of 2-byte little-endian words. The high 6 bits
//! hold the annotation type code, the low 10 bits a time delta in samples
//! relative to the previous annotation. Codes 59..=63 are escape words:
//!
//! ```text
//! 59 SKIP  next 4 bytes: signed 32-bit interval, high 16-bit word first
//! 60 NUM   delta = num field for subsequent annotations
//! 61 SUB   delta = subtype of the current annotation
//! 62 CHN   delta = channel for subsequent annotations
//! 63 AUX   delta = byte count of an aux payload that follows (padded to even)
//! ```
//!
//! A zero word terminates the stream.

use super::codes::mnemonic;
use super::WfdbError;

const SKIP: u8 = 59;
const NUM: u8 = 60;
const SUB: u8 = 61;
const CHN: u8 = 62;
const AUX: u8 = 63;

/// One annotation: an absolute sample index, the raw type code, and the aux
/// string when present (rhythm changes carry the rhythm label here).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationEvent {
    pub sample_index: u64,
    pub code: u8,
    pub aux: Option<String>,
}

impl AnnotationEvent {
    /// Mnemonic symbol, or "?" followed by the raw code when unassigned.
    pub fn symbol(&self) -> String {
        match mnemonic(self.code) {
            Some(m) => m.to_string(),
            None => format!("?{}", self.code),
        }
    }
}

/// Decode an annotation stream into events ordered by sample index.
/// Returns the events plus any warnings (unknown type codes).
pub fn read_annotations(bytes: &[u8]) -> Result<(Vec<AnnotationEvent>, Vec<String>), WfdbError> {
    let mut events: Vec<AnnotationEvent> = Vec::new();
    let mut warnings = Vec::new();
    let mut pos = 0usize;
    let mut time: i64 = 0;
    let mut pending_skip: i64 = 0;
    let mut terminated = false;

    let next_word = |pos: &mut usize| -> Result<u16, WfdbError> {
        if *pos + 2 > bytes.len() {
            return Err(WfdbError::MissingTerminator);
        }
        let w = u16::from(bytes[*pos]) | u16::from(bytes[*pos + 1]) << 8;
        *pos += 2;
        Ok(w)
    };

    while pos < bytes.len() {
        let word = next_word(&mut pos)?;
        if word == 0 {
            terminated = true;
            break;
        }
        let code = (word >> 10) as u8;
        let delta = i64::from(word & 0x03FF);
        match code {
            SKIP => {
                let high = next_word(&mut pos)?;
                let low = next_word(&mut pos)?;
                let interval = (i32::from(high as i16) as i64) << 16 | i64::from(low);
                pending_skip += interval;
            }
            NUM | SUB | CHN => {
                // Field annotations; fields are not needed downstream.
            }
            AUX => {
                let mut n = delta as usize;
                if n % 2 == 1 {
                    n += 1; // payload padded to even length
                }
                if pos + n > bytes.len() {
                    return Err(WfdbError::MissingTerminator);
                }
                let payload = &bytes[pos..pos + delta as usize];
                pos += n;
                let text: String = payload
                    .iter()
                    .take_while(|&&b| b != 0)
                    .map(|&b| b as char)
                    .collect();
                if let Some(last) = events.last_mut() {
                    last.aux = Some(text);
                } else {
                    warnings.push(format!("aux payload {text:?} before any annotation"));
                }
            }
            _ => {
                time += pending_skip + delta;
                pending_skip = 0;
                if mnemonic(code).is_none() {
                    warnings.push(format!(
                        "unknown annotation type code {code} at sample {time}"
                    ));
                }
                events.push(AnnotationEvent {
                    sample_index: time.max(0) as u64,
                    code,
                    aux: None,
                });
            }
        }
    }
    if !terminated {
        return Err(WfdbError::MissingTerminator);
    }
    // Cumulative deltas are non-decreasing unless a negative SKIP rewound the
    // clock; keep the guarantee by sorting stably.
    if events.windows(2).any(|w| w[0].sample_index > w[1].sample_index) {
        events.sort_by_key(|e| e.sample_index);
    }
    Ok((events, warnings))
}

/// Encode events back into the binary stream (test fixtures only).
#[cfg(test)]
pub fn write_annotations(events: &[AnnotationEvent]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut time: u64 = 0;
    for ev in events {
        let mut delta = ev.sample_index - time;
        time = ev.sample_index;
        while delta > 1023 {
            // Emit a SKIP escape for the excess.
            let excess = (delta - 1023) as i64;
            out.extend_from_slice(&(u16::from(SKIP) << 10).to_le_bytes());
            out.extend_from_slice(&(((excess >> 16) & 0xFFFF) as u16).to_le_bytes());
            out.extend_from_slice(&((excess & 0xFFFF) as u16).to_le_bytes());
            delta = 1023;
        }
        let word = (u16::from(ev.code) << 10) | delta as u16;
        out.extend_from_slice(&word.to_le_bytes());
        if let Some(aux) = &ev.aux {
            let n = aux.len();
            let word = (u16::from(AUX) << 10) | n as u16;
            out.extend_from_slice(&word.to_le_bytes());
            out.extend_from_slice(aux.as_bytes());
            if n % 2 == 1 {
                out.push(0);
            }
        }
    }
    out.extend_from_slice(&0u16.to_le_bytes());
    out
}
