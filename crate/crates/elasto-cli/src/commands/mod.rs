//! Subcommand implementations.
//!
//! Each `run_*` function is the whole behavior of one subcommand: the
//! binary's `main` only parses arguments, loads the config, and maps the
//! returned error onto an exit code. Keeping them as library functions
//! makes every command drivable from integration tests without spawning
//! processes.

mod compare;
mod dump_corr;
mod estimate;
mod simulate;

pub use compare::run_compare;
pub use dump_corr::run_dump_corr;
pub use estimate::run_estimate;
pub use simulate::run_simulate;

use std::path::Path;

use elasto_core::{
    add_noise, displace_scatterers, generate_scatterers, synthesize_rf, RfFrame,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::rff;

/// A simulated pre/post frame pair, in estimation precision.
pub struct FramePair {
    pub pre: RfFrame<f64>,
    pub post: RfFrame<f64>,
}

/// Synthesizes one pre/post pair under `cfg`, overriding the applied
/// strain and the seeds (sweeps vary them per cell).
///
/// Pipeline: one scatterer field, pre synthesis, deformation, post
/// synthesis, optional rigid column shift of the clean post frame, then
/// independent noise realizations on both frames.
pub fn simulate_pair(
    cfg: &RunConfig,
    applied_strain: f64,
    phantom_seed: u64,
    pre_noise_seed: u64,
    post_noise_seed: u64,
) -> Result<FramePair> {
    let mut phantom = cfg.phantom.clone();
    phantom.seed = phantom_seed;
    let deformation = cfg.deformation_at(applied_strain);

    let field = generate_scatterers::<f64>(&phantom)?;
    let mut pre = synthesize_rf(&field, &cfg.transducer, phantom.height_mm)?;
    let moved = displace_scatterers(&field, &phantom, &deformation)?;
    let mut post = synthesize_rf(&moved, &cfg.transducer, phantom.height_mm)?;
    if cfg.column_shift != 0 {
        post = post.shifted_columns(cfg.column_shift);
    }
    if let Some(snr_db) = cfg.snr_db {
        pre = add_noise(&pre, snr_db, pre_noise_seed)?;
        post = add_noise(&post, snr_db, post_noise_seed)?;
    }
    Ok(FramePair { pre, post })
}

/// Reads an RFF file into estimation precision.
pub fn read_frame_f64(path: &Path) -> Result<RfFrame<f64>> {
    Ok(rff::read_rff(path)?.convert())
}

/// Creates `dir` (and parents) if needed.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
