//! CSV serialization of window-grid maps.
//!
//! All CSVs are header-labeled with dot-decimal numbers (independent of
//! the process locale) and newline-terminated. Maps are written wide: one
//! row per window depth, a leading `depth_mm` column, then one column per
//! A-line.

use std::fmt::{Display, Write as _};
use std::path::Path;

use elasto_core::Grid2;

use crate::error::{CliError, Result};

/// Renders a window-grid map as CSV text: `depth_mm,line_0,...,line_N`.
pub fn render_map_csv<E: Display>(axial_mm: &[f64], map: &Grid2<E>) -> String {
    debug_assert_eq!(axial_mm.len(), map.rows());
    let mut text = String::new();
    text.push_str("depth_mm");
    for c in 0..map.cols() {
        let _ = write!(text, ",line_{c}");
    }
    text.push('\n');
    for (r, depth) in axial_mm.iter().enumerate() {
        let _ = write!(text, "{depth}");
        for c in 0..map.cols() {
            let _ = write!(text, ",{}", map.get(r, c));
        }
        text.push('\n');
    }
    text
}

/// Writes a window-grid map to `path` as CSV.
pub fn write_map_csv<E: Display>(path: &Path, axial_mm: &[f64], map: &Grid2<E>) -> Result<()> {
    std::fs::write(path, render_map_csv(axial_mm, map)).map_err(|e| CliError::io(path, e))
}
