//! Event-stream files, CSV and JSON artifacts, run manifests.
//!
//! Text events are `channel,ticks` lines; `#` starts a comment. Binary
//! events are 9-byte records: u64 ticks little-endian, then the channel byte.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::photon::{CorrelationHistogram, EventRecord};
use crate::quantum::DensityMatrix;
use crate::trap::Trajectory;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const BINARY_RECORD_BYTES: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventFormat {
    #[default]
    Text,
    Binary,
}

fn check_channel(line: usize, channel: u64) -> Result<u8> {
    if channel > 1 {
        return Err(Error::ChannelRange { line, channel });
    }
    Ok(channel as u8)
}

pub fn parse_event_text(text: &str) -> Result<Vec<EventRecord>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut it = body.split(',');
        let (Some(ch), Some(t), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::Parse { line, msg: format!("expected `channel,ticks`, got {body:?}") });
        };
        let ch: u64 = ch
            .trim()
            .parse()
            .map_err(|e| Error::Parse { line, msg: format!("channel {ch:?}: {e}") })?;
        let t: u64 = t
            .trim()
            .parse()
            .map_err(|e| Error::Parse { line, msg: format!("ticks {t:?}: {e}") })?;
        out.push(EventRecord::new(check_channel(line, ch)?, t));
    }
    out.sort();
    Ok(out)
}

/// Record numbers (1-based) stand in for line numbers in errors.
pub fn parse_event_binary(bytes: &[u8]) -> Result<Vec<EventRecord>> {
    if !bytes.len().is_multiple_of(BINARY_RECORD_BYTES) {
        return Err(Error::Parse {
            line: bytes.len() / BINARY_RECORD_BYTES + 1,
            msg: format!("truncated record ({} trailing bytes)", bytes.len() % BINARY_RECORD_BYTES),
        });
    }
    let mut out = Vec::with_capacity(bytes.len() / BINARY_RECORD_BYTES);
    for (i, rec) in bytes.chunks_exact(BINARY_RECORD_BYTES).enumerate() {
        let t = u64::from_le_bytes(rec[..8].try_into().expect("8 bytes"));
        out.push(EventRecord::new(check_channel(i + 1, rec[8] as u64)?, t));
    }
    out.sort();
    Ok(out)
}

pub fn parse_event_stream(bytes: &[u8], format: EventFormat) -> Result<Vec<EventRecord>> {
    match format {
        EventFormat::Binary => parse_event_binary(bytes),
        EventFormat::Text => {
            let text = std::str::from_utf8(bytes).map_err(|e| {
                let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
                Error::Parse { line, msg: "invalid UTF-8".into() }
            })?;
            parse_event_text(text)
        }
    }
}

pub fn serialize_events(events: &[EventRecord], format: EventFormat) -> Vec<u8> {
    match format {
        EventFormat::Text => {
            let mut s = String::with_capacity(events.len() * 16);
            for e in events {
                let _ = writeln!(s, "{},{}", e.channel, e.timestamp_ticks);
            }
            s.into_bytes()
        }
        EventFormat::Binary => {
            let mut v = Vec::with_capacity(events.len() * BINARY_RECORD_BYTES);
            for e in events {
                v.extend_from_slice(&e.timestamp_ticks.to_le_bytes());
                v.push(e.channel);
            }
            v
        }
    }
}

pub fn histogram_csv(h: &CorrelationHistogram) -> String {
    let mut s = String::from("bin_start_s,bin_end_s,count\n");
    for (i, c) in h.counts.iter().enumerate() {
        let _ = writeln!(s, "{:e},{:e},{:e}", h.bin_edges[i], h.bin_edges[i + 1], c);
    }
    s
}

pub fn trajectory_csv(t: &Trajectory) -> String {
    let mut s = String::from("time_s,position_m\n");
    for (x, y) in t.times.iter().zip(&t.positions) {
        let _ = writeln!(s, "{x:e},{y:e}");
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub dim: usize,
    pub real: Vec<Vec<f64>>,
    pub imag: Vec<Vec<f64>>,
}

impl From<&DensityMatrix> for DensityMatrixJson {
    fn from(rho: &DensityMatrix) -> Self {
        let d = rho.dim();
        let row = |i: usize, f: fn(crate::quantum::C64) -> f64| (0..d).map(|j| f(rho.get(i, j))).collect();
        DensityMatrixJson {
            dim: d,
            real: (0..d).map(|i| row(i, |z| z.re)).collect(),
            imag: (0..d).map(|i| row(i, |z| z.im)).collect(),
        }
    }
}

impl DensityMatrixJson {
    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        let d = self.dim;
        if self.real.len() != d
            || self.imag.len() != d
            || self.real.iter().chain(&self.imag).any(|r| r.len() != d)
        {
            return Err(Error::Dimension(format!("matrix rows do not match dim {d}")));
        }
        let m = crate::quantum::CMatrix::from_fn(d, d, |i, j| crate::quantum::c(self.real[i][j], self.imag[i][j]));
        DensityMatrix::new(m)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub subcommand: String,
    /// SHA-256 of the resolved config bytes that the run consumed.
    pub config_digest: String,
    pub master_seed: u64,
    pub artifact_paths: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config_bytes: &[u8], master_seed: u64) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            subcommand: subcommand.into(),
            config_digest: sha256_hex(config_bytes),
            master_seed,
            artifact_paths: Vec::new(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Accepts a missing `schema_version` as the current one.
pub fn check_schema_version(value: &serde_json::Value) -> Result<()> {
    match value.get("schema_version") {
        None => Ok(()),
        Some(v) => match v.as_u64() {
            Some(n) if n == SCHEMA_VERSION as u64 => Ok(()),
            _ => Err(Error::Config(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}"))),
        },
    }
}

/// Write through a temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_line_example() {
        let ev = parse_event_text("0,1000\n1,1875\n").unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[1].timestamp_ticks - ev[0].timestamp_ticks, 875);
    }

    #[test]
    fn bad_line_is_located() {
        match parse_event_text("0,1\n\n0;2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_event_text("2,5\n") {
            Err(Error::ChannelRange { line: 1, channel: 2 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
