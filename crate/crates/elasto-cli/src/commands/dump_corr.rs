//! `dump-corr`: print the correlation curves of one window's lateral
//! candidates.

use std::io::Write;
use std::path::Path;

use elasto_core::correlation_profile_dump;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

use super::read_frame_f64;

/// Dumps the full NCC function of every lateral candidate at window
/// `(line, window)` as CSV rows `shift_j,lag,cc,shift_max_cc` on `out`.
///
/// The axial gate is the one the estimator's own displacement track
/// produces, so the `shift_j = 0` peak equals the correlation the 1D
/// estimator records at this window.
pub fn run_dump_corr(
    pre_path: &Path,
    post_path: &Path,
    line: usize,
    window: usize,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<()> {
    let pre = read_frame_f64(pre_path)?;
    let post = read_frame_f64(post_path)?;
    let profiles = correlation_profile_dump(&pre, &post, line, window, &cfg.estimator)?;

    let mut text = String::from("shift_j,lag,cc,shift_max_cc\n");
    for (si, &shift) in profiles.shifts.iter().enumerate() {
        for (li, &lag) in profiles.lags.iter().enumerate() {
            use std::fmt::Write as _;
            let _ = writeln!(
                text,
                "{shift},{lag},{},{}",
                profiles.curves[si][li], profiles.maxima[si]
            );
        }
    }
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io("<output stream>", e))?;
    Ok(())
}
