//! Command-line front end of the elasto toolkit.
//!
//! The `elasto` binary exposes four subcommands over the estimation
//! library:
//!
//! - `simulate --config <file>` — synthesize a pre/post RF frame pair
//!   from a parametric phantom, plus the analytic ground-truth strain.
//! - `estimate --pre <rff> --post <rff> --method {gradient|adaptive}
//!   [--lateral-n <k>] --out <dir>` — estimate a strain map and write
//!   CSV/PGM outputs.
//! - `compare --config <file> --out <dir>` — sweep applied strain across
//!   both estimators and both lateral variants and tabulate SNRe/CNRe and
//!   correlation metrics.
//! - `dump-corr --pre <rff> --post <rff> --line <i> --window <k>` —
//!   print every lateral candidate's correlation function at one window.
//!
//! Frames travel in the RFF container (see [`rff`]), runs are described
//! by a flat key=value config document (see [`config`]), and all failures
//! map onto scriptable exit codes (see [`error::CliError::exit_code`]):
//! 0 success, 2 config error, 3 data error, 4 estimation failure.

pub mod commands;
pub mod config;
pub mod csvout;
pub mod error;
pub mod pgm;
pub mod rff;

pub use commands::{run_compare, run_dump_corr, run_estimate, run_simulate};
pub use config::RunConfig;
pub use error::{CliError, Result};
