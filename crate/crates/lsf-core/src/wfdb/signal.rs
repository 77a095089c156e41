//! Format-212 signal codec: two 12-bit two's-complement samples packed into
//! each 3-byte group.
//!
//! ```text
//! byte 0: low 8 bits of sample 1
//! byte 1: high 4 bits of sample 2 (upper nibble) | high 4 bits of sample 1 (lower nibble)
//! byte 2: low 8 bits of sample 2
//! ```

use super::WfdbError;

/// Sign-extend a 12-bit value to i32.
#[inline]
pub fn sign_extend12(v: u16) -> i32 {
    let v = i32::from(v & 0x0FFF);
    if v & 0x0800 != 0 {
        v - 0x1000
    } else {
        v
    }
}

/// Decode `n_pairs` sample pairs from a format-212 byte stream. Returns the
/// first and second sample of each 3-byte group as two parallel streams.
pub fn decode_format212(bytes: &[u8], n_pairs: usize) -> Result<(Vec<i32>, Vec<i32>), WfdbError> {
    let needed = n_pairs * 3;
    if bytes.len() < needed {
        return Err(WfdbError::TruncatedSignal {
            offset: bytes.len(),
        });
    }
    let mut first = Vec::with_capacity(n_pairs);
    let mut second = Vec::with_capacity(n_pairs);
    for group in bytes[..needed].chunks_exact(3) {
        let b0 = u16::from(group[0]);
        let b1 = u16::from(group[1]);
        let b2 = u16::from(group[2]);
        first.push(sign_extend12((b1 & 0x0F) << 8 | b0));
        second.push(sign_extend12((b1 & 0xF0) << 4 | b2));
    }
    Ok((first, second))
}

/// Pack one sample pair into a 3-byte group. Values must fit in 12 bits
/// signed (-2048..=2047).
#[inline]
pub fn encode_pair(s1: i32, s2: i32) -> [u8; 3] {
    debug_assert!((-2048..=2047).contains(&s1));
    debug_assert!((-2048..=2047).contains(&s2));
    let u1 = (s1 & 0x0FFF) as u16;
    let u2 = (s2 & 0x0FFF) as u16;
    [
        (u1 & 0xFF) as u8,
        (((u2 >> 8) & 0x0F) << 4) as u8 | ((u1 >> 8) & 0x0F) as u8,
        (u2 & 0xFF) as u8,
    ]
}

/// Encode a flat sample stream into format-212 bytes. An odd-length stream is
/// padded with a final zero sample.
pub fn encode_format212(samples: &[i32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len().div_ceil(2) * 3);
    let mut it = samples.chunks(2);
    for pair in &mut it {
        let s1 = pair[0];
        let s2 = if pair.len() > 1 { pair[1] } else { 0 };
        out.extend_from_slice(&encode_pair(s1, s2));
    }
    out
}
