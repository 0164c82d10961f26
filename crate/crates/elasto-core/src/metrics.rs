//! Quality metrics over strain maps and estimator diagnostics.
//!
//! All statistics are population statistics (divide by `N`), computed in
//! `f64` regardless of the map's sample type.

use crate::error::{Error, Result};
use crate::estimators::{
    estimate_displacement_line, window_grid, EstimatorConfig, QualityRaw, StrainMap,
};
use crate::frame::RfFrame;
use crate::grid::Grid2;
use crate::real::Real;
use crate::xcorr::{ncc, Segment};
use std::ops::Range;

/// Rectangular region of interest in window-grid coordinates (rows are
/// window depths, columns are A-lines).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roi {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

impl Roi {
    pub fn new(rows: Range<usize>, cols: Range<usize>) -> Self {
        Roi { rows, cols }
    }

    /// Checks the region is non-empty and inside an `n_rows x n_cols` map.
    pub fn validate(&self, n_rows: usize, n_cols: usize) -> Result<()> {
        if self.rows.is_empty() || self.cols.is_empty() {
            return Err(Error::config(format!(
                "ROI rows {:?} cols {:?} is empty",
                self.rows, self.cols
            )));
        }
        if self.rows.end > n_rows || self.cols.end > n_cols {
            return Err(Error::config(format!(
                "ROI rows {:?} cols {:?} exceeds the {n_rows} x {n_cols} map",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() || self.cols.is_empty()
    }
}

/// Pooled mean and population variance over the union of `rois`.
/// Regions are expected to be disjoint; overlapping cells would be counted
/// once per region containing them.
pub fn region_stats<T: Real>(values: &Grid2<T>, rois: &[Roi]) -> Result<(f64, f64)> {
    if rois.is_empty() {
        return Err(Error::config("region statistics need at least one ROI"));
    }
    for roi in rois {
        roi.validate(values.rows(), values.cols())?;
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut n = 0usize;
    for roi in rois {
        for r in roi.rows.clone() {
            for c in roi.cols.clone() {
                let v = values.get(r, c).widen();
                sum += v;
                sum_sq += v * v;
                n += 1;
            }
        }
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    Ok((mean, var))
}

/// Elastographic signal-to-noise ratio of a region: `mean / std`.
///
/// A perfectly uniform region has no spread to measure and is reported as
/// degenerate rather than infinite.
pub fn snr_e<T: Real>(map: &StrainMap<T>, roi: &Roi) -> Result<T> {
    let (mean, var) = region_stats(&map.values, std::slice::from_ref(roi))?;
    if var == 0.0 {
        return Err(Error::degenerate(
            "SNRe is undefined on a zero-variance region".to_string(),
        ));
    }
    Ok(T::of(mean / var.sqrt()))
}

/// Elastographic contrast-to-noise ratio between a lesion region and a
/// background region: `|mean_b - mean_l| / sqrt(var_b + var_l)`.
pub fn cnr_e<T: Real>(map: &StrainMap<T>, lesion: &Roi, background: &Roi) -> Result<T> {
    cnr_e_pooled(map, lesion, std::slice::from_ref(background))
}

/// `cnr_e` with the background statistics pooled over several regions,
/// e.g. patches on both sides of a lesion.
pub fn cnr_e_pooled<T: Real>(
    map: &StrainMap<T>,
    lesion: &Roi,
    background: &[Roi],
) -> Result<T> {
    let (mean_l, var_l) = region_stats(&map.values, std::slice::from_ref(lesion))?;
    let (mean_b, var_b) = region_stats(&map.values, background)?;
    let denom = (var_b + var_l).sqrt();
    if denom == 0.0 {
        return Err(Error::degenerate(
            "CNRe is undefined when both regions have zero variance".to_string(),
        ));
    }
    Ok(T::of((mean_b - mean_l).abs() / denom))
}

/// Mean correlation peak per A-line: one value per map column, the average
/// down that line of the peaks the estimator actually used.
pub fn per_line_mean_max_corr<T: Real>(quality: &QualityRaw<T>) -> Vec<T> {
    let g = &quality.peak_cc;
    (0..g.cols())
        .map(|c| {
            let sum: f64 = (0..g.rows()).map(|r| g.get(r, c).widen()).sum();
            T::of(sum / g.rows() as f64)
        })
        .collect()
}

/// Full correlation curves of one window against every lateral candidate.
#[derive(Debug, Clone)]
pub struct CorrelationProfiles<T: Real> {
    pub line_i: usize,
    pub window_k: usize,
    /// Axial gate the dump used, reproduced from the 1D displacement
    /// track of the same line.
    pub gate_samples: isize,
    /// Candidate shifts `j`, ascending; `2n + 1` entries away from the
    /// frame edge, clamped at it.
    pub shifts: Vec<isize>,
    /// Lag axis shared by every curve, `-max_lag ..= max_lag`.
    pub lags: Vec<isize>,
    /// One normalized correlation curve per shift.
    pub curves: Vec<Vec<T>>,
    /// Peak value of each curve (zero for a degenerate candidate).
    pub maxima: Vec<T>,
}

/// Dumps the correlation curves a lateral search would inspect at window
/// `(line_i, window_k)`.
///
/// The axial gate is reproduced by running the 1D displacement track down
/// the line, so the `j = 0` curve's maximum equals the correlation peak
/// the gradient estimator records for the same window.
pub fn correlation_profile_dump<T: Real>(
    pre: &RfFrame<T>,
    post: &RfFrame<T>,
    line_i: usize,
    window_k: usize,
    cfg: &EstimatorConfig,
) -> Result<CorrelationProfiles<T>> {
    if !pre.same_shape(post) {
        return Err(Error::shape(format!(
            "pre frame is {} x {} and post frame {} x {} (geometry must match too)",
            pre.n_lines(),
            pre.n_samples(),
            post.n_lines(),
            post.n_samples()
        )));
    }
    let grid = window_grid(pre, cfg)?;
    if line_i >= pre.n_lines() || window_k >= grid.n_windows {
        return Err(Error::config(format!(
            "window ({line_i}, {window_k}) outside the {} x {} grid",
            pre.n_lines(),
            grid.n_windows
        )));
    }

    let track = estimate_displacement_line(pre.line(line_i), post.line(line_i), &grid)?;
    let carried = if window_k == 0 {
        0.0
    } else {
        track.displacements[window_k - 1].widen()
    };
    let start = grid.start(window_k);
    let len = grid.len_samples;
    let lo = -(start as isize);
    let hi = (pre.n_samples() - len) as isize - start as isize;
    let gate = (carried.round() as isize).clamp(lo, hi);
    let gs = (start as isize + gate) as usize;
    let pre_seg = Segment::new(&pre.line(line_i)[start..start + len], start)?;

    let n = cfg.lateral_radius_n as isize;
    let max_lag = grid.max_lag_samples;
    let flat_len = 2 * max_lag + 1;
    let mut profiles = CorrelationProfiles {
        line_i,
        window_k,
        gate_samples: gate,
        shifts: Vec::new(),
        lags: (-(max_lag as isize)..=max_lag as isize).collect(),
        curves: Vec::new(),
        maxima: Vec::new(),
    };
    for j in -n..=n {
        let li = line_i as isize + j;
        if li < 0 || li as usize >= post.n_lines() {
            continue;
        }
        let line = post.line(li as usize);
        let post_seg = Segment::new(&line[gs..gs + len], gs)?;
        match ncc(&pre_seg, &post_seg, max_lag) {
            Ok(r) => {
                profiles.maxima.push(r.peak_value);
                profiles.curves.push(r.full);
            }
            Err(Error::DegenerateInput { .. }) => {
                profiles.maxima.push(T::zero());
                profiles.curves.push(vec![T::zero(); flat_len]);
            }
            Err(e) => return Err(e),
        }
        profiles.shifts.push(j);
    }
    Ok(profiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{estimate_strain_map, Method};
    use crate::frame::FrameGeometry;
    use approx::assert_relative_eq;

    fn map_of(rows: usize, cols: usize, values: Vec<f64>) -> StrainMap<f64> {
        StrainMap {
            values: Grid2::from_vec(rows, cols, values),
            axial_mm: (0..rows).map(|r| r as f64).collect(),
            method_tag: "test".to_string(),
        }
    }

    #[test]
    fn snr_matches_hand_computed_ratio() {
        // mean 0.02, population std sqrt(2e-6): SNRe = 14.1421356...
        let map = map_of(2, 2, vec![0.018, 0.020, 0.022, 0.020]);
        let snr = snr_e(&map, &Roi::new(0..2, 0..2)).unwrap();
        assert_relative_eq!(snr, 14.142135623730951, max_relative = 1e-12);
    }

    #[test]
    fn snr_is_degenerate_on_uniform_region() {
        let map = map_of(2, 2, vec![0.02; 4]);
        assert!(matches!(
            snr_e(&map, &Roi::new(0..2, 0..2)).unwrap_err(),
            Error::DegenerateInput { .. }
        ));
    }

    #[test]
    fn cnr_matches_hand_computed_ratio() {
        // background mean 0.020 / std 0.002, lesion mean 0.005 / std
        // 0.002: CNRe = 0.015 / sqrt(8e-6) = 5.3033...
        let map = map_of(
            2,
            4,
            vec![0.018, 0.022, 0.003, 0.007, 0.022, 0.018, 0.007, 0.003],
        );
        let background = Roi::new(0..2, 0..2);
        let lesion = Roi::new(0..2, 2..4);
        let cnr = cnr_e(&map, &lesion, &background).unwrap();
        assert_relative_eq!(cnr, 5.303300858899106, max_relative = 1e-12);
    }

    #[test]
    fn pooled_background_means_and_variances_combine() {
        let map = map_of(
            2,
            4,
            vec![0.018, 0.022, 0.003, 0.007, 0.022, 0.018, 0.007, 0.003],
        );
        let lesion = Roi::new(0..2, 2..4);
        let split = [Roi::new(0..2, 0..1), Roi::new(0..2, 1..2)];
        let pooled = cnr_e_pooled(&map, &lesion, &split).unwrap();
        let whole = cnr_e(&map, &lesion, &Roi::new(0..2, 0..2)).unwrap();
        assert_relative_eq!(pooled, whole, max_relative = 1e-12);
    }

    #[test]
    fn roi_bounds_are_enforced() {
        let map = map_of(2, 2, vec![0.0; 4]);
        assert!(matches!(
            snr_e(&map, &Roi::new(0..3, 0..2)).unwrap_err(),
            Error::InvalidConfig { .. }
        ));
        assert!(matches!(
            snr_e(&map, &Roi::new(1..1, 0..2)).unwrap_err(),
            Error::InvalidConfig { .. }
        ));
    }

    #[test]
    fn per_line_mean_is_a_column_average() {
        let quality = QualityRaw {
            peak_cc: Grid2::from_vec(2, 3, vec![1.0, 0.8, 0.6, 0.5, 0.4, 0.2]),
        };
        let means = per_line_mean_max_corr(&quality);
        assert_eq!(means.len(), 3);
        assert_relative_eq!(means[0], 0.75, max_relative = 1e-12);
        assert_relative_eq!(means[1], 0.6, max_relative = 1e-12);
        assert_relative_eq!(means[2], 0.4, max_relative = 1e-12);
    }

    fn noisy_frame(n_lines: usize, n_samples: usize, salt: f64) -> RfFrame<f64> {
        let geom = FrameGeometry { fs_hz: 40.0e6, c_mps: 1540.0, pitch_mm: 0.3125, f0_hz: 5.0e6 };
        let samples: Vec<f64> = (0..n_lines * n_samples)
            .map(|k| {
                let t = k as f64;
                (0.51 * t + salt).sin() + 0.4 * (0.173 * t + 2.3 * salt).sin()
            })
            .collect();
        RfFrame::new(n_lines, n_samples, geom, samples).unwrap()
    }

    #[test]
    fn profile_dump_matches_estimator_quality_at_j_zero() {
        let pre = noisy_frame(7, 600, 0.0);
        let post = noisy_frame(7, 600, 0.02);
        let cfg = EstimatorConfig {
            window_mm: 2.0,
            shift_mm: 1.0,
            lateral_radius_n: 2,
            ..EstimatorConfig::default()
        };
        let dump = correlation_profile_dump(&pre, &post, 3, 2, &cfg).unwrap();
        assert_eq!(dump.shifts, vec![-2, -1, 0, 1, 2]);
        assert_eq!(dump.curves.len(), 5);
        for curve in &dump.curves {
            assert_eq!(curve.len(), dump.lags.len());
        }
        // The j = 0 maximum is the exact peak the 1D gradient estimator
        // recorded for the same window.
        let out = estimate_strain_map(&pre, &post, Method::Gradient, false, &cfg).unwrap();
        let j0 = dump.shifts.iter().position(|&j| j == 0).unwrap();
        assert_eq!(dump.maxima[j0], *out.quality.peak_cc.get(2, 3));
    }

    #[test]
    fn profile_dump_clamps_at_frame_edge() {
        let pre = noisy_frame(4, 600, 0.0);
        let cfg = EstimatorConfig {
            window_mm: 2.0,
            shift_mm: 1.0,
            lateral_radius_n: 3,
            ..EstimatorConfig::default()
        };
        let dump = correlation_profile_dump(&pre, &pre, 0, 0, &cfg).unwrap();
        assert_eq!(dump.shifts, vec![0, 1, 2, 3]);
    }

    #[test]
    fn profile_dump_validates_window_coordinates() {
        let pre = noisy_frame(4, 600, 0.0);
        let cfg = EstimatorConfig { window_mm: 2.0, shift_mm: 1.0, ..EstimatorConfig::default() };
        assert!(matches!(
            correlation_profile_dump(&pre, &pre, 9, 0, &cfg).unwrap_err(),
            Error::InvalidConfig { .. }
        ));
    }
}
