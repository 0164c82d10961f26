//! RFF frame container: a one-line text header followed by a little-endian
//! `f32` payload.
//!
//! Layout:
//!
//! ```text
//! RFF1 <n_lines> <n_samples> <fs_hz> <c_mps> <pitch_mm> <f0_hz>\n
//! <4 * n_lines * n_samples bytes of little-endian f32, line-major>
//! ```
//!
//! The header is ASCII, space-separated, newline-terminated; the payload
//! stores all samples of line 0, then line 1, and so on. Floating-point
//! header fields are written with shortest round-trip formatting, so a
//! write/read cycle reproduces the frame bit for bit.

use std::path::Path;

use elasto_core::{FrameGeometry, RfFrame};

use crate::error::{CliError, Result};

/// Magic token opening every frame file.
pub const MAGIC: &str = "RFF1";

/// Longest header line accepted, in bytes. Generous: a real header is
/// under 100 bytes even with full-precision floats.
const MAX_HEADER: usize = 256;

/// Writes `frame` to `path` in RFF format.
pub fn write_rff(frame: &RfFrame<f32>, path: &Path) -> Result<()> {
    let g = frame.geometry();
    let header = format!(
        "{MAGIC} {} {} {} {} {} {}\n",
        frame.n_lines(),
        frame.n_samples(),
        g.fs_hz,
        g.c_mps,
        g.pitch_mm,
        g.f0_hz
    );
    let mut bytes = Vec::with_capacity(header.len() + 4 * frame.samples().len());
    bytes.extend_from_slice(header.as_bytes());
    for &s in frame.samples() {
        bytes.extend_from_slice(&s.to_le_bytes());
    }
    std::fs::write(path, &bytes).map_err(|e| CliError::io(path, e))
}

/// Reads an RFF frame from `path`.
///
/// Rejects a wrong magic token (naming what was found), a payload whose
/// length disagrees with the header (reporting expected vs actual bytes),
/// and non-finite samples (reporting the byte offset of the first one).
pub fn read_rff(path: &Path) -> Result<RfFrame<f32>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let show = path.display();

    let nl = bytes
        .iter()
        .take(MAX_HEADER)
        .position(|&b| b == b'\n')
        .ok_or_else(|| {
            CliError::data(format!(
                "{show}: no header line within the first {MAX_HEADER} bytes"
            ))
        })?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| CliError::data(format!("{show}: header is not valid ASCII text")))?;

    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&MAGIC) {
        return Err(CliError::data(format!(
            "{show}: bad magic {:?}, expected {MAGIC:?}",
            fields.first().copied().unwrap_or("")
        )));
    }
    if fields.len() != 7 {
        return Err(CliError::data(format!(
            "{show}: header has {} fields, expected 7 (magic n_lines n_samples fs_hz c_mps pitch_mm f0_hz)",
            fields.len()
        )));
    }

    let count = |name: &str, text: &str| -> Result<usize> {
        let v: usize = text
            .parse()
            .map_err(|_| CliError::data(format!("{show}: {name} {text:?} is not a count")))?;
        if v == 0 {
            return Err(CliError::data(format!("{show}: {name} must be positive")));
        }
        Ok(v)
    };
    let positive = |name: &str, text: &str| -> Result<f64> {
        let v: f64 = text
            .parse()
            .map_err(|_| CliError::data(format!("{show}: {name} {text:?} is not a number")))?;
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::data(format!(
                "{show}: {name} must be a positive finite number, got {text}"
            )));
        }
        Ok(v)
    };
    let n_lines = count("n_lines", fields[1])?;
    let n_samples = count("n_samples", fields[2])?;
    let geometry = FrameGeometry {
        fs_hz: positive("fs_hz", fields[3])?,
        c_mps: positive("c_mps", fields[4])?,
        pitch_mm: positive("pitch_mm", fields[5])?,
        f0_hz: positive("f0_hz", fields[6])?,
    };

    let payload = &bytes[nl + 1..];
    let expected = 4usize
        .checked_mul(n_lines)
        .and_then(|v| v.checked_mul(n_samples))
        .ok_or_else(|| CliError::data(format!("{show}: header dimensions overflow")))?;
    if payload.len() != expected {
        return Err(CliError::data(format!(
            "{show}: payload is {} bytes, expected {expected} ({n_lines} lines x {n_samples} samples x 4)",
            payload.len()
        )));
    }

    let mut samples = Vec::with_capacity(n_lines * n_samples);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("chunks_exact(4)"));
        if !v.is_finite() {
            return Err(CliError::data(format!(
                "{show}: non-finite sample {v} at byte offset {}",
                nl + 1 + 4 * i
            )));
        }
        samples.push(v);
    }

    RfFrame::new(n_lines, n_samples, geometry, samples).map_err(CliError::from)
}
