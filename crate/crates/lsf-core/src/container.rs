//! Shared binary container envelope for on-disk artifacts (feature caches,
//! model checkpoints, normalization stats).
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset size  field
//! 0      4     magic (ASCII, identifies the artifact kind)
//! 4      2     version (u16)
//! 6      8     payload length (u64)
//! 14     n     payload (kind-specific)
//! 14+n   8     FNV-1a digest of bytes [0, 14+n)
//! ```
//!
//! The trailing digest doubles as the artifact's content digest in stage
//! manifests.

use crate::digest::Fnv1a;
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

#[derive(Debug)]
pub enum ContainerError {
    Io(io::Error),
    /// File too short or length field inconsistent with the file size.
    Truncated,
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    UnsupportedVersion(u16),
    DigestMismatch { stored: u64, computed: u64 },
    /// Payload did not decode to the expected shape.
    Malformed(String),
}

impl fmt::Display for ContainerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "i/o error: {e}"),
            Self::Truncated => write!(f, "container truncated"),
            Self::BadMagic { expected, found } => write!(
                f,
                "bad magic: expected {:?}, found {:?}",
                String::from_utf8_lossy(expected),
                String::from_utf8_lossy(found)
            ),
            Self::UnsupportedVersion(v) => write!(f, "unsupported container version {v}"),
            Self::DigestMismatch { stored, computed } => write!(
                f,
                "digest mismatch: stored {stored:016x}, computed {computed:016x}"
            ),
            Self::Malformed(m) => write!(f, "malformed payload: {m}"),
        }
    }
}

impl std::error::Error for ContainerError {}

impl From<io::Error> for ContainerError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

pub const CONTAINER_VERSION: u16 = 1;

/// Serialize a payload into the envelope. Returns the full file bytes.
pub fn seal(magic: [u8; 4], payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(payload.len() + 22);
    out.extend_from_slice(&magic);
    out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
    let mut h = Fnv1a::new();
    h.update(&out);
    out.extend_from_slice(&h.finish().to_le_bytes());
    out
}

/// Verify the envelope and return (payload, content digest).
pub fn open(magic: [u8; 4], bytes: &[u8]) -> Result<(&[u8], u64), ContainerError> {
    if bytes.len() < 22 {
        return Err(ContainerError::Truncated);
    }
    let found: [u8; 4] = bytes[0..4].try_into().unwrap();
    if found != magic {
        return Err(ContainerError::BadMagic {
            expected: magic,
            found,
        });
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != CONTAINER_VERSION {
        return Err(ContainerError::UnsupportedVersion(version));
    }
    let len = u64::from_le_bytes(bytes[6..14].try_into().unwrap()) as usize;
    if bytes.len() != 14 + len + 8 {
        return Err(ContainerError::Truncated);
    }
    let stored = u64::from_le_bytes(bytes[14 + len..].try_into().unwrap());
    let mut h = Fnv1a::new();
    h.update(&bytes[..14 + len]);
    let computed = h.finish();
    if stored != computed {
        return Err(ContainerError::DigestMismatch { stored, computed });
    }
    Ok((&bytes[14..14 + len], stored))
}

pub fn write_file(path: &Path, magic: [u8; 4], payload: &[u8]) -> Result<u64, ContainerError> {
    let bytes = seal(magic, payload);
    let digest = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
    fs::write(path, &bytes)?;
    Ok(digest)
}

pub fn read_file(path: &Path, magic: [u8; 4]) -> Result<(Vec<u8>, u64), ContainerError> {
    let bytes = fs::read(path)?;
    let (payload, digest) = open(magic, &bytes)?;
    Ok((payload.to_vec(), digest))
}

/// Little-endian payload writer.
#[derive(Debug, Default)]
pub struct PayloadWriter {
    buf: Vec<u8>,
}

impl PayloadWriter {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f64_slice(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }
    pub fn f32_slice(&mut self, vs: &[f32]) {
        for &v in vs {
            self.f32(v);
        }
    }
    pub fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Little-endian payload reader with bounds checking.
pub struct PayloadReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> PayloadReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ContainerError> {
        if self.pos + n > self.buf.len() {
            return Err(ContainerError::Malformed(format!(
                "unexpected end of payload at offset {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u32(&mut self) -> Result<u32, ContainerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn u64(&mut self) -> Result<u64, ContainerError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn f64(&mut self) -> Result<f64, ContainerError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn f32(&mut self) -> Result<f32, ContainerError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>, ContainerError> {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(self.f64()?);
        }
        Ok(v)
    }
    pub fn f32_vec(&mut self, n: usize) -> Result<Vec<f32>, ContainerError> {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(self.f32()?);
        }
        Ok(v)
    }
    pub fn str(&mut self) -> Result<String, ContainerError> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| ContainerError::Malformed("invalid utf-8 string".into()))
    }
    pub fn done(&self) -> Result<(), ContainerError> {
        if self.pos != self.buf.len() {
            return Err(ContainerError::Malformed(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seal_open_roundtrip() {
        let bytes = seal(*b"TEST", b"hello");
        let (payload, _) = open(*b"TEST", &bytes).unwrap();
        assert_eq!(payload, b"hello");
    }

    #[test]
    fn corruption_detected() {
        let mut bytes = seal(*b"TEST", b"hello");
        bytes[15] ^= 0x01;
        assert!(matches!(
            open(*b"TEST", &bytes),
            Err(ContainerError::DigestMismatch { .. })
        ));
    }

    #[test]
    fn wrong_magic_rejected() {
        let bytes = seal(*b"TEST", b"hello");
        assert!(matches!(
            open(*b"XXXX", &bytes),
            Err(ContainerError::BadMagic { .. })
        ));
    }
}
