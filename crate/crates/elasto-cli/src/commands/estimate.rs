//! `estimate`: run one estimator over a frame pair and serialize the
//! results.

use std::path::Path;

use elasto_core::{estimate_strain_map, EstimateOutput, Method};

use crate::config::RunConfig;
use crate::csvout;
use crate::error::{CliError, Result};
use crate::pgm;

use super::{ensure_dir, read_frame_f64};

/// Reads `pre`/`post`, estimates strain, and writes `strain.csv`,
/// `strain.pgm`, `shifts.csv`, and `quality.csv` into `out_dir`.
///
/// `lateral_n = None` runs the plain 1D estimator; `Some(n)` runs the
/// lateral-search wrapper with radius `n` (radius 0 reduces to the 1D
/// path bit for bit). Returns the output for callers that want to inspect
/// it in-process.
pub fn run_estimate(
    pre_path: &Path,
    post_path: &Path,
    method: Method,
    lateral_n: Option<usize>,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<EstimateOutput<f64>> {
    let pre = read_frame_f64(pre_path)?;
    let post = read_frame_f64(post_path)?;
    if !pre.same_shape(&post) {
        return Err(CliError::data(format!(
            "{} is {} x {} but {} is {} x {} (geometry must match too)",
            pre_path.display(),
            pre.n_lines(),
            pre.n_samples(),
            post_path.display(),
            post.n_lines(),
            post.n_samples()
        )));
    }

    let mut estimator = cfg.estimator.clone();
    if let Some(n) = lateral_n {
        estimator.lateral_radius_n = n;
    }
    let out = estimate_strain_map(&pre, &post, method, lateral_n.is_some(), &estimator)?;

    ensure_dir(out_dir)?;
    csvout::write_map_csv(&out_dir.join("strain.csv"), &out.strain.axial_mm, &out.strain.values)?;
    pgm::write_pgm(&out.strain.values, &out_dir.join("strain.pgm"))?;
    csvout::write_map_csv(&out_dir.join("shifts.csv"), &out.strain.axial_mm, &out.shifts)?;
    csvout::write_map_csv(&out_dir.join("quality.csv"), &out.strain.axial_mm, &out.quality.peak_cc)?;

    println!(
        "estimate [{}]: {} window rows x {} lines, wrote strain.csv strain.pgm shifts.csv quality.csv to {}",
        out.strain.method_tag,
        out.strain.values.rows(),
        out.strain.values.cols(),
        out_dir.display()
    );
    Ok(out)
}
