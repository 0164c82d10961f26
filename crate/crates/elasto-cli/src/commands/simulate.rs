//! `simulate`: synthesize a pre/post frame pair and its analytic ground
//! truth.

use elasto_core::{local_strain_at, window_grid, Grid2};

use crate::config::RunConfig;
use crate::csvout;
use crate::error::{CliError, Result};
use crate::rff;

use super::{ensure_dir, simulate_pair};

/// Writes `pre.rff`, `post.rff`, and `ground_truth.csv` into
/// `cfg.out_dir`.
///
/// The ground truth is the analytic local strain of the deformation model
/// evaluated on the estimator's window grid — the map a perfect estimator
/// would produce. Its rows line up with the `strain.csv` an `estimate`
/// run over these frames emits.
pub fn run_simulate(cfg: &RunConfig) -> Result<()> {
    ensure_dir(&cfg.out_dir)?;
    let pair = simulate_pair(
        cfg,
        cfg.applied_strain,
        cfg.phantom.seed,
        cfg.pre_seed(),
        cfg.post_seed(),
    )?;

    rff::write_rff(&pair.pre.convert(), &cfg.out_dir.join("pre.rff"))?;
    rff::write_rff(&pair.post.convert(), &cfg.out_dir.join("post.rff"))?;

    let grid = window_grid(&pair.pre, &cfg.estimator)?;
    let geometry = pair.pre.geometry();
    let axial_mm: Vec<f64> = (0..grid.n_windows)
        .map(|k| geometry.depth_mm_of_sample(grid.center_sample(k)))
        .collect();
    let deformation = cfg.deformation();
    let mut truth = Grid2::filled(grid.n_windows, pair.pre.n_lines(), 0.0_f64);
    for (k, &depth) in axial_mm.iter().enumerate() {
        for i in 0..pair.pre.n_lines() {
            let x = cfg.transducer.line_x_mm(i);
            let y = depth.min(cfg.phantom.height_mm);
            let s = local_strain_at(&cfg.phantom, &deformation, x, y).map_err(|e| {
                CliError::estimation(format!("ground truth at line {i}, window {k}: {e}"))
            })?;
            truth.set(k, i, s);
        }
    }
    csvout::write_map_csv(&cfg.out_dir.join("ground_truth.csv"), &axial_mm, &truth)?;

    println!(
        "simulate: {} lines x {} samples, applied strain {}, wrote pre.rff post.rff ground_truth.csv to {}",
        pair.pre.n_lines(),
        pair.pre.n_samples(),
        cfg.applied_strain,
        cfg.out_dir.display()
    );
    Ok(())
}
