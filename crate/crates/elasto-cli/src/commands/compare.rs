//! `compare`: sweep applied strain across both estimators and both
//! lateral variants, and tabulate quality metrics.

use std::fmt::Write as _;
use std::path::Path;

use elasto_core::{
    cnr_e_pooled, correlation_profile_dump, estimate_strain_map, per_line_mean_max_corr, snr_e,
    EstimateOutput, Method, Roi,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

use super::{ensure_dir, simulate_pair};

const VARIANTS: [(Method, bool); 4] = [
    (Method::Gradient, false),
    (Method::Gradient, true),
    (Method::AdaptiveStretch, false),
    (Method::AdaptiveStretch, true),
];

/// Runs the sweep and writes `snr_table.csv`, `per_line_corr.csv`, and
/// `corr_profiles.csv` into `out_dir`.
///
/// For every applied strain in `cfg.strains_pct` and every method/variant
/// combination, the command simulates `cfg.n_seeds` independent phantom
/// and noise realizations (seeds `phantom.seed + 1000 k`), estimates the
/// strain map, and aggregates metrics across seeds by median:
///
/// - `snr_table.csv` — one row per sweep cell: SNRe averaged over the
///   background ROIs, plus one CNRe column per lesion ROI pooled against
///   all backgrounds.
/// - `per_line_corr.csv` — long format; per-line mean maximum correlation
///   of every cell.
/// - `corr_profiles.csv` — full correlation curves of every lateral
///   candidate at the probe window (first seed of each strain level).
pub fn run_compare(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let lesions = cfg.lesions_mm();

    let mut snr_csv = String::from("applied_strain_pct,method,snr_e");
    for l in 1..=lesions.len() {
        let _ = write!(snr_csv, ",cnr_{l}");
    }
    snr_csv.push('\n');
    let mut line_csv = String::from("applied_strain_pct,method,line,mean_max_corr\n");
    let mut profile_csv =
        String::from("applied_strain_pct,line,window,gate_samples,shift_j,lag,cc,shift_max_cc\n");

    for &pct in &cfg.strains_pct {
        let strain = pct / 100.0;
        // Per variant: SNRs over seeds, per-lesion CNRs over seeds, and
        // per-line correlation profiles over seeds.
        let mut snr_acc: Vec<Vec<f64>> = vec![Vec::new(); VARIANTS.len()];
        let mut cnr_acc: Vec<Vec<Vec<f64>>> =
            vec![vec![Vec::new(); lesions.len()]; VARIANTS.len()];
        let mut line_acc: Vec<Vec<Vec<f64>>> = vec![Vec::new(); VARIANTS.len()];

        for seed_idx in 0..cfg.n_seeds {
            let phantom_seed = cfg.phantom.seed.wrapping_add(1000 * seed_idx as u64);
            let cell = |what: &str| format!("sweep cell {pct}% / {what}");
            let pair = simulate_pair(
                cfg,
                strain,
                phantom_seed,
                phantom_seed.wrapping_add(1),
                phantom_seed.wrapping_add(2),
            )
            .map_err(|e| e.context(cell("simulate")))?;

            for (vi, &(method, lateral)) in VARIANTS.iter().enumerate() {
                let tag = method.tag(lateral);
                let out =
                    estimate_strain_map(&pair.pre, &pair.post, method, lateral, &cfg.estimator)
                        .map_err(|e| CliError::from(e).context(cell(tag)))?;
                let (snr, cnrs) =
                    roi_metrics(cfg, &lesions, &out).map_err(|e| e.context(cell(tag)))?;
                snr_acc[vi].push(snr);
                for (li, c) in cnrs.into_iter().enumerate() {
                    cnr_acc[vi][li].push(c);
                }
                line_acc[vi].push(per_line_mean_max_corr(&out.quality));

                if seed_idx == 0 && vi == 0 {
                    let (probe_line, probe_window) =
                        cfg.probe(pair.pre.n_lines(), out.strain.values.rows());
                    let profiles = correlation_profile_dump(
                        &pair.pre,
                        &pair.post,
                        probe_line,
                        probe_window,
                        &cfg.estimator,
                    )
                    .map_err(|e| CliError::from(e).context(cell("probe")))?;
                    for (si, &shift) in profiles.shifts.iter().enumerate() {
                        for (li, &lag) in profiles.lags.iter().enumerate() {
                            let _ = writeln!(
                                profile_csv,
                                "{pct},{},{},{},{shift},{lag},{},{}",
                                profiles.line_i,
                                profiles.window_k,
                                profiles.gate_samples,
                                profiles.curves[si][li],
                                profiles.maxima[si]
                            );
                        }
                    }
                }
            }
        }

        for (vi, &(method, lateral)) in VARIANTS.iter().enumerate() {
            let tag = method.tag(lateral);
            let _ = write!(snr_csv, "{pct},{tag},{}", median(&mut snr_acc[vi]));
            for acc in cnr_acc[vi].iter_mut() {
                let _ = write!(snr_csv, ",{}", median(acc));
            }
            snr_csv.push('\n');

            let n_lines = line_acc[vi][0].len();
            for line in 0..n_lines {
                let mut per_seed: Vec<f64> =
                    line_acc[vi].iter().map(|seed| seed[line]).collect();
                let _ = writeln!(line_csv, "{pct},{tag},{line},{}", median(&mut per_seed));
            }
        }
    }

    let write = |name: &str, text: &str| -> Result<()> {
        let path = out_dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(path, e))
    };
    write("snr_table.csv", &snr_csv)?;
    write("per_line_corr.csv", &line_csv)?;
    write("corr_profiles.csv", &profile_csv)?;

    println!(
        "compare: {} strain levels x {} methods x {} seed(s), wrote snr_table.csv per_line_corr.csv corr_profiles.csv to {}",
        cfg.strains_pct.len(),
        VARIANTS.len(),
        cfg.n_seeds,
        out_dir.display()
    );
    Ok(())
}

/// SNRe averaged over the configured background ROIs, and one pooled CNRe
/// per lesion ROI.
fn roi_metrics(
    cfg: &RunConfig,
    lesions: &[(f64, f64)],
    out: &EstimateOutput<f64>,
) -> Result<(f64, Vec<f64>)> {
    let axial = &out.strain.axial_mm;
    let n_lines = out.strain.values.cols();
    let backgrounds: Vec<Roi> = cfg
        .backgrounds_mm
        .iter()
        .enumerate()
        .map(|(i, &c)| roi_from_mm(c, cfg, axial, n_lines, &format!("roi.background{}", i + 1)))
        .collect::<Result<_>>()?;

    let mut snr_sum = 0.0;
    for roi in &backgrounds {
        snr_sum += snr_e(&out.strain, roi)?;
    }
    let snr = snr_sum / backgrounds.len() as f64;

    let cnrs: Vec<f64> = lesions
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let roi = roi_from_mm(c, cfg, axial, n_lines, &format!("roi.lesion{}", i + 1))?;
            Ok(cnr_e_pooled(&out.strain, &roi, &backgrounds)?)
        })
        .collect::<Result<_>>()?;
    Ok((snr, cnrs))
}

/// Converts a square ROI around `(cx, cy)` mm into window-grid index
/// ranges: rows whose center depth and lines whose lateral position fall
/// within `roi.half_size_mm` of the center.
fn roi_from_mm(
    (cx, cy): (f64, f64),
    cfg: &RunConfig,
    axial_mm: &[f64],
    n_lines: usize,
    what: &str,
) -> Result<Roi> {
    let half = cfg.roi_half_mm;
    let rows: Vec<usize> = (0..axial_mm.len())
        .filter(|&k| (axial_mm[k] - cy).abs() <= half)
        .collect();
    let cols: Vec<usize> = (0..n_lines)
        .filter(|&i| (cfg.transducer.line_x_mm(i) - cx).abs() <= half)
        .collect();
    match (rows.first(), rows.last(), cols.first(), cols.last()) {
        (Some(&r0), Some(&r1), Some(&c0), Some(&c1)) => Ok(Roi::new(r0..r1 + 1, c0..c1 + 1)),
        _ => Err(CliError::config(format!(
            "{what} at ({cx}, {cy}) mm selects no windows on the {} x {n_lines} grid",
            axial_mm.len()
        ))),
    }
}

/// Median; sorts in place. Even counts average the two middle values.
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("metrics are finite"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
