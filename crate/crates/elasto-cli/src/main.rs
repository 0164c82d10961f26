use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use elasto_cli::{config::RunConfig, error::Result, run_compare, run_dump_corr, run_estimate, run_simulate};
use elasto_core::Method;

/// Ultrasound elastography toolkit: phantom simulation, strain
/// estimation, and estimator comparison.
#[derive(Parser)]
#[command(name = "elasto", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a pre/post RF frame pair and its ground-truth strain.
    Simulate {
        /// Run configuration (key = value lines); outputs land in its
        /// output.dir.
        #[arg(long)]
        config: PathBuf,
    },
    /// Estimate a strain map from a pre/post frame pair.
    Estimate {
        /// Pre-compression frame (RFF).
        #[arg(long)]
        pre: PathBuf,
        /// Post-compression frame (RFF).
        #[arg(long)]
        post: PathBuf,
        /// Estimator.
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Lateral search radius in lines; omit for the plain 1D path
        /// (0 runs the lateral wrapper with radius 0, which reduces to
        /// 1D bit for bit).
        #[arg(long)]
        lateral_n: Option<usize>,
        /// Output directory for strain.csv, strain.pgm, shifts.csv,
        /// quality.csv.
        #[arg(long)]
        out: PathBuf,
        /// Optional config overriding the estimator defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Sweep applied strain over both estimators and tabulate metrics.
    Compare {
        /// Run configuration (phantom, sweep, ROIs, estimator).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for snr_table.csv, per_line_corr.csv,
        /// corr_profiles.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the correlation curves of one window's lateral candidates.
    DumpCorr {
        /// Pre-compression frame (RFF).
        #[arg(long)]
        pre: PathBuf,
        /// Post-compression frame (RFF).
        #[arg(long)]
        post: PathBuf,
        /// A-line index.
        #[arg(long)]
        line: usize,
        /// Window row index.
        #[arg(long)]
        window: usize,
        /// Optional config overriding the estimator defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Gradient,
    Adaptive,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Gradient => Method::Gradient,
            MethodArg::Adaptive => Method::AdaptiveStretch,
        }
    }
}

fn load_or_default(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config } => {
            let cfg = RunConfig::load(&config)?;
            run_simulate(&cfg)
        }
        Command::Estimate { pre, post, method, lateral_n, out, config } => {
            let cfg = load_or_default(&config)?;
            run_estimate(&pre, &post, method.into(), lateral_n, &cfg, &out).map(|_| ())
        }
        Command::Compare { config, out } => {
            let cfg = RunConfig::load(&config)?;
            run_compare(&cfg, &out)
        }
        Command::DumpCorr { pre, post, line, window, config } => {
            let cfg = load_or_default(&config)?;
            let mut stdout = std::io::stdout().lock();
            run_dump_corr(&pre, &post, line, window, &cfg, &mut stdout)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
