//! 8-bit binary portable graymap (P5) rendering of strain maps.
//!
//! The gray mapping is fixed: black is zero strain, white is the map's
//! 99th-percentile value (nearest-rank), values above it clamp to white
//! and below zero clamp to black. The mapping is monotone in strain, so
//! stiff (low-strain) regions render dark exactly as in conventional
//! elastograms.

use std::path::Path;

use elasto_core::{Grid2, Real};

use crate::error::{CliError, Result};

/// Renders `map` as P5 bytes: one pixel per cell, row-major, `cols` wide.
pub fn render_pgm<T: Real>(map: &Grid2<T>) -> Vec<u8> {
    let white = percentile_99(map.as_slice());
    let header = format!("P5\n{} {}\n255\n", map.cols(), map.rows());
    let mut bytes = Vec::with_capacity(header.len() + map.rows() * map.cols());
    bytes.extend_from_slice(header.as_bytes());
    for &v in map.as_slice() {
        bytes.push(gray(v.widen(), white));
    }
    bytes
}

/// Writes `map` to `path` as a P5 graymap.
pub fn write_pgm<T: Real>(map: &Grid2<T>, path: &Path) -> Result<()> {
    std::fs::write(path, render_pgm(map)).map_err(|e| CliError::io(path, e))
}

/// Nearest-rank 99th percentile of the finite, positive dynamic range.
/// Non-positive maps return 0, which renders everything black.
fn percentile_99<T: Real>(values: &[T]) -> f64 {
    let mut sorted: Vec<f64> = values.iter().map(|v| v.widen()).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("strain maps are finite"));
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((0.99 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1].max(0.0)
}

fn gray(v: f64, white: f64) -> u8 {
    if white <= 0.0 {
        return 0;
    }
    let unit = (v / white).clamp(0.0, 1.0);
    (unit * 255.0).round() as u8
}
