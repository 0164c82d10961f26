//! Axial strain estimators.
//!
//! # Overview
//!
//! Two estimators share a common windowing scheme (gated windows of
//! `window_mm` advanced by `shift_mm` down each A-line, correlation peaks
//! warm-started from the previous window):
//!
//! * **Gradient**: per-window displacement from the refined ZNCC peak lag,
//!   differentiated across adjacent windows. Robust but a single bad peak
//!   corrupts the two strain rows that difference it.
//! * **Adaptive stretching**: the post segment is temporally stretched by a
//!   candidate factor `alpha` before correlation; the factor maximizing the
//!   correlation peak gives the window's strain directly as `1 - alpha`.
//!   Compression shortens echo round trips, so matching post data must be
//!   stretched (`alpha < 1` reads `alpha * len` post samples and maps them
//!   onto the `len`-sample pre window).
//!
//! Either estimator can run per A-line (1D) or wrapped by a lateral search
//! (1.5D): before estimating window `(i, k)`, candidate post lines
//! `i + j` within `+-lateral_radius_n` are ranked by the median of
//! per-sub-window correlation maxima, and the estimator runs against the
//! winning line. Scatterers pushed sideways by Poisson expansion then stay
//! in view instead of decorrelating the match.
//!
//! # Conventions
//!
//! Displacement is the signed delay of post relative to pre (positive =
//! later echo). Compression moves echoes earlier with depth, so raw
//! displacements decrease; gradient strain negates the finite difference,
//! making compression positive for both estimators.

use crate::error::{Error, Result};
use crate::frame::RfFrame;
use crate::grid::Grid2;
use crate::real::Real;
use crate::xcorr::{ncc, subwindow_median_max, Segment};
use rayon::prelude::*;

/// Strain estimation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Gradient,
    AdaptiveStretch,
}

impl Method {
    /// Stable tag naming the method / lateral-search combination, used in
    /// report tables.
    pub fn tag(&self, use_lateral: bool) -> &'static str {
        match (self, use_lateral) {
            (Method::Gradient, false) => "gradient-1d",
            (Method::Gradient, true) => "gradient-1.5d",
            (Method::AdaptiveStretch, false) => "adaptive-1d",
            (Method::AdaptiveStretch, true) => "adaptive-1.5d",
        }
    }
}

/// Estimator parameters. Lengths are millimetres; the window grid converts
/// them to samples against a frame's geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Axial correlation window length.
    pub window_mm: f64,
    /// Axial advance between window rows.
    pub shift_mm: f64,
    /// Half-width of the displacement search around the warm-started gate;
    /// clamped to half a window in samples.
    pub max_lag_mm: f64,
    /// Lateral search radius in lines (`n`); 0 restricts candidates to the
    /// current line.
    pub lateral_radius_n: usize,
    /// Sub-windows per window for lateral candidate scoring.
    pub n_sub: usize,
    /// Narrowed-search acceptance threshold; a best candidate scoring below
    /// it triggers a full `+-n` rescan.
    pub corr_threshold: f64,
    /// Lower bound of the stretch-factor search range (upper bound is 1).
    pub alpha_min: f64,
    /// Coarse grid step over `[alpha_min, 1]`.
    pub alpha_coarse_step: f64,
    /// Golden-section refinement iterations inside the best coarse bracket.
    pub alpha_refine_iters: usize,
}

impl Default for EstimatorConfig {
    /// 3 mm windows shifted by 0.5 mm, +-0.6 mm displacement search,
    /// lateral radius 6 with 3 sub-windows and a 0.5 acceptance threshold,
    /// and a stretch search over [0.80, 1.0] (0.005 coarse step, 12
    /// golden-section iterations, ~2e-5 final bracket).
    fn default() -> Self {
        EstimatorConfig {
            window_mm: 3.0,
            shift_mm: 0.5,
            max_lag_mm: 0.6,
            lateral_radius_n: 6,
            n_sub: 3,
            corr_threshold: 0.5,
            alpha_min: 0.80,
            alpha_coarse_step: 0.005,
            alpha_refine_iters: 12,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("window_mm", self.window_mm),
            ("shift_mm", self.shift_mm),
            ("max_lag_mm", self.max_lag_mm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if self.n_sub == 0 {
            return Err(Error::config("n_sub must be at least 1"));
        }
        if !(self.corr_threshold.is_finite() && (-1.0..=1.0).contains(&self.corr_threshold)) {
            return Err(Error::config(format!(
                "corr_threshold must lie in [-1, 1], got {}",
                self.corr_threshold
            )));
        }
        if !(self.alpha_min.is_finite() && self.alpha_min > 0.0 && self.alpha_min < 1.0) {
            return Err(Error::config(format!(
                "alpha_min must lie in (0, 1), got {}",
                self.alpha_min
            )));
        }
        if !(self.alpha_coarse_step.is_finite()
            && self.alpha_coarse_step > 0.0
            && self.alpha_coarse_step <= 1.0 - self.alpha_min)
        {
            return Err(Error::config(format!(
                "alpha_coarse_step must lie in (0, 1 - alpha_min], got {}",
                self.alpha_coarse_step
            )));
        }
        Ok(())
    }
}

/// Sample-domain window layout shared by every estimator output: window
/// `k` gates samples `[k * stride, k * stride + len)` of an A-line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowGrid {
    pub n_windows: usize,
    pub len_samples: usize,
    pub stride_samples: usize,
    pub max_lag_samples: usize,
    pub n_samples: usize,
}

impl WindowGrid {
    /// Builds a grid directly in sample units.
    pub fn from_samples(
        len_samples: usize,
        stride_samples: usize,
        max_lag_samples: usize,
        n_samples: usize,
    ) -> Result<Self> {
        if len_samples < 2 {
            return Err(Error::config(format!(
                "window length must be at least 2 samples, got {len_samples}"
            )));
        }
        if stride_samples == 0 {
            return Err(Error::config("window stride must be at least 1 sample"));
        }
        if len_samples > n_samples {
            return Err(Error::config(format!(
                "window of {len_samples} samples does not fit a {n_samples}-sample line"
            )));
        }
        if max_lag_samples == 0 || max_lag_samples >= len_samples {
            return Err(Error::config(format!(
                "max lag {max_lag_samples} must lie in [1, window length)"
            )));
        }
        Ok(WindowGrid {
            n_windows: (n_samples - len_samples) / stride_samples + 1,
            len_samples,
            stride_samples,
            max_lag_samples,
            n_samples,
        })
    }

    /// First sample of window `k`.
    #[inline]
    pub fn start(&self, k: usize) -> usize {
        k * self.stride_samples
    }

    /// Center of window `k` as a fractional sample index.
    #[inline]
    pub fn center_sample(&self, k: usize) -> f64 {
        self.start(k) as f64 + (self.len_samples as f64 - 1.0) / 2.0
    }
}

/// Converts the millimetre window parameters to a sample-domain grid for
/// `frame`. With the default geometry (40 MHz, 1540 m/s) the default
/// 3.0 / 0.5 mm windows become 156-sample windows advanced by 26 samples.
pub fn window_grid<T: Real>(frame: &RfFrame<T>, cfg: &EstimatorConfig) -> Result<WindowGrid> {
    cfg.validate()?;
    let spmm = frame.geometry().samples_per_mm();
    let len = (cfg.window_mm * spmm).round() as usize;
    let stride = ((cfg.shift_mm * spmm).round() as usize).max(1);
    let max_lag = ((cfg.max_lag_mm * spmm).round() as usize).clamp(1, (len / 2).max(1));
    WindowGrid::from_samples(len, stride, max_lag, frame.n_samples())
}

/// Per-window displacement track of one A-line pair.
#[derive(Debug, Clone)]
pub struct DisplacementLine<T: Real> {
    /// Signed delay of post relative to pre per window, samples.
    pub displacements: Vec<T>,
    /// Correlation peak value per window.
    pub peak_cc: Vec<T>,
    /// Windows whose correlation was degenerate; their displacement is
    /// copied from the previous window (0 for the first).
    pub degenerate: Vec<bool>,
}

/// Tracks per-window displacement down one line pair with a warm-started
/// gate: window `k + 1` searches `+-max_lag` around window `k`'s
/// displacement, which follows accumulating delay without widening the
/// search.
pub fn estimate_displacement_line<T: Real>(
    pre_line: &[T],
    post_line: &[T],
    grid: &WindowGrid,
) -> Result<DisplacementLine<T>> {
    if pre_line.len() != post_line.len() {
        return Err(Error::shape(format!(
            "pre line has {} samples, post line {}",
            pre_line.len(),
            post_line.len()
        )));
    }
    if pre_line.len() != grid.n_samples {
        return Err(Error::config(format!(
            "window grid was built for {}-sample lines, got {}",
            grid.n_samples,
            pre_line.len()
        )));
    }
    let mut out = DisplacementLine {
        displacements: Vec::with_capacity(grid.n_windows),
        peak_cc: Vec::with_capacity(grid.n_windows),
        degenerate: Vec::with_capacity(grid.n_windows),
    };
    let mut offset = T::zero();
    for k in 0..grid.n_windows {
        let start = grid.start(k);
        let pre_seg = Segment::new(&pre_line[start..start + grid.len_samples], start)?;
        let gate = clamp_gate(offset.widen(), start, grid.len_samples, post_line.len());
        let (disp, cc, degen) = gradient_window(&pre_seg, post_line, gate, offset, grid)?;
        offset = disp;
        out.displacements.push(disp);
        out.peak_cc.push(cc);
        out.degenerate.push(degen);
    }
    Ok(out)
}

/// Differences adjacent window displacements into per-row strain.
///
/// Compression moves echoes earlier with depth (displacement decreases),
/// so strain is the negated finite difference
/// `(d[k] - d[k+1]) / stride`. The last row replicates its predecessor,
/// keeping gradient output on the same row grid as the adaptive estimator.
pub fn gradient_strain_line<T: Real>(displacements: &[T], grid: &WindowGrid) -> Vec<T> {
    let n = displacements.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![T::zero()];
    }
    let stride = T::of(grid.stride_samples as f64);
    let mut out = Vec::with_capacity(n);
    for k in 0..n - 1 {
        out.push((displacements[k] - displacements[k + 1]) / stride);
    }
    out.push(out[n - 2]);
    out
}

/// Outcome of the stretch-factor search for one window.
#[derive(Debug, Clone, Copy)]
pub struct StretchResult<T: Real> {
    /// Best stretch factor in `[alpha_min, 1]`.
    pub alpha: T,
    /// Window strain, `1 - alpha`.
    pub strain: T,
    /// Correlation peak at the best factor.
    pub peak_cc: T,
    /// Residual lag (stretched-sample units) of the best match relative to
    /// the gate at `start`.
    pub residual_lag: T,
}

/// Finds the temporal stretch factor that best re-aligns a post segment
/// with `pre_seg`.
///
/// For each candidate `alpha`, post samples are read from `start` at
/// positions `start + alpha * m` (linear interpolation) to build a
/// `pre`-length stretched segment, and its ZNCC peak against `pre_seg`
/// over `+-search_lag` is the candidate's score. A coarse scan of
/// `[alpha_min, 1]` at `alpha_coarse_step` brackets the optimum;
/// golden-section iterations refine it. The best *evaluated* factor is
/// returned, so an identical pre/post pair yields exactly `alpha = 1`,
/// strain 0.
pub fn adaptive_stretch_segment<T: Real>(
    pre_seg: &Segment<'_, T>,
    post_line: &[T],
    start: usize,
    search_lag: usize,
    cfg: &EstimatorConfig,
) -> Result<StretchResult<T>> {
    cfg.validate()?;
    let len = pre_seg.len();
    if start + len > post_line.len() {
        return Err(Error::config(format!(
            "stretch gate [{start}, {}) exceeds the {}-sample post line",
            start + len,
            post_line.len()
        )));
    }
    let lag = search_lag.clamp(1, len - 1);
    let mut scratch: Vec<T> = Vec::with_capacity(len);
    let mut best: Option<(T, f64, T)> = None; // (cc, alpha, residual lag)

    let consider =
        |alpha: f64, scratch: &mut Vec<T>, best: &mut Option<(T, f64, T)>| -> Result<T> {
            match stretch_score(pre_seg, post_line, start, alpha, lag, scratch) {
                Ok((cc, r)) => {
                    if best.is_none_or(|(bcc, _, _)| cc > bcc) {
                        *best = Some((cc, alpha, r));
                    }
                    Ok(cc)
                }
                // A flat stretched read carries no signal; score it below
                // any real correlation and move on.
                Err(Error::DegenerateInput { .. }) => Ok(T::of(-2.0)),
                Err(e) => Err(e),
            }
        };

    let n_coarse = ((1.0 - cfg.alpha_min) / cfg.alpha_coarse_step).round().max(1.0) as usize;
    for i in 0..=n_coarse {
        let alpha = if i == n_coarse {
            1.0
        } else {
            (cfg.alpha_min + i as f64 * cfg.alpha_coarse_step).min(1.0)
        };
        consider(alpha, &mut scratch, &mut best)?;
    }
    let coarse_best = match best {
        Some((_, alpha, _)) => alpha,
        None => {
            return Err(Error::degenerate(
                "every stretch candidate was degenerate for this window".to_string(),
            ))
        }
    };

    // Golden-section refinement inside the winning coarse bracket. The
    // global best over all evaluations is kept, so refinement can only
    // improve on the coarse answer.
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = (coarse_best - cfg.alpha_coarse_step).max(cfg.alpha_min);
    let mut b = (coarse_best + cfg.alpha_coarse_step).min(1.0);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = consider(x1, &mut scratch, &mut best)?;
    let mut f2 = consider(x2, &mut scratch, &mut best)?;
    for _ in 0..cfg.alpha_refine_iters {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = consider(x1, &mut scratch, &mut best)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = consider(x2, &mut scratch, &mut best)?;
        }
    }

    let (cc, alpha, r) = best.expect("coarse stage guaranteed a candidate");
    Ok(StretchResult {
        alpha: T::of(alpha),
        strain: T::of(1.0 - alpha),
        peak_cc: cc,
        residual_lag: r,
    })
}

/// Lateral candidate choice for one window.
#[derive(Debug, Clone, Copy)]
pub struct LateralChoice<T: Real> {
    /// Chosen post-line shift `j` (post line `i + j`).
    pub shift_j: isize,
    /// Sub-window median score of the chosen candidate.
    pub score: T,
    /// Score of the incumbent shift `prev_shift_j`, when it was evaluable;
    /// lets the caller demand a margin before hopping lines.
    pub prev_score: Option<T>,
    /// True when every candidate was degenerate; `shift_j` then carries
    /// `prev_shift_j` forward.
    pub degenerate: bool,
    /// True when the narrowed search scored below `corr_threshold` and the
    /// full `+-n` scan decided the shift.
    pub used_fallback: bool,
}

/// Ranks candidate post lines for window `(line_i, window_k)`.
///
/// The narrowed candidate set is `{prev - 1, prev, prev + 1, 0}` clamped
/// to `|j| <= n` and the frame edge; if its best sub-window median score
/// falls below `corr_threshold`, every shift in `+-n` is rescanned.
/// Ties break toward the smaller `|j|`, then toward `prev_shift_j`.
/// `axial_offset_samples` gates each candidate's post segment at the
/// accumulated axial delay so deep windows compare like with like, and
/// `pred_alpha` (the stretch factor tracked so far down the line, 1.0
/// when unknown) compensates each candidate read for the compression
/// accumulating *within* the window. Without that compensation the
/// intra-window delay spread reaches half an RF period by ~6% strain and
/// the raw correlation of every candidate collapses into noise; with it,
/// the correct line keeps a clear margin across the whole strain range.
///
/// Because candidates are pre-aligned axially, each sub-window only
/// searches the small residual lag budget. Giving sub-windows the full
/// displacement search range would let the RF carrier of an unrelated
/// line find some aligning lag and score far too well, washing out the
/// lateral contrast the search relies on.
#[allow(clippy::too_many_arguments)]
pub fn lateral_search_segment<T: Real>(
    pre: &RfFrame<T>,
    post: &RfFrame<T>,
    line_i: usize,
    window_k: usize,
    prev_shift_j: isize,
    axial_offset_samples: isize,
    pred_alpha: f64,
    grid: &WindowGrid,
    cfg: &EstimatorConfig,
) -> Result<LateralChoice<T>> {
    let n = cfg.lateral_radius_n as isize;
    if prev_shift_j.abs() > n {
        return Err(Error::config(format!(
            "previous shift {prev_shift_j} exceeds the lateral radius {n}"
        )));
    }
    if line_i >= pre.n_lines() || window_k >= grid.n_windows {
        return Err(Error::config(format!(
            "window ({line_i}, {window_k}) outside the {} x {} grid",
            pre.n_lines(),
            grid.n_windows
        )));
    }
    let start = grid.start(window_k);
    let len = grid.len_samples;
    let pre_seg = Segment::new(&pre.line(line_i)[start..start + len], start)?;
    let gate = clamp_gate(axial_offset_samples as f64, start, len, post.n_samples());
    let gs = (start as isize + gate) as usize;
    let sub_lag = residual_search_lag(grid, cfg);
    let alpha = pred_alpha.clamp(cfg.alpha_min, 1.0);

    let in_bounds = |j: isize| {
        j.abs() <= n && line_i as isize + j >= 0 && ((line_i as isize + j) as usize) < post.n_lines()
    };
    // score = None marks a degenerate candidate.
    let mut scratch: Vec<T> = Vec::with_capacity(len);
    let mut score_of = |j: isize| -> Result<Option<T>> {
        let line = post.line((line_i as isize + j) as usize);
        stretched_read(line, gs, alpha, len, &mut scratch);
        let post_seg = match Segment::new(&scratch, gs) {
            Ok(s) => s,
            Err(_) => return Ok(None),
        };
        match subwindow_median_max(&pre_seg, &post_seg, cfg.n_sub, sub_lag) {
            Ok(s) => Ok(Some(s)),
            Err(Error::DegenerateInput { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut prev_score: Option<T> = None;
    let mut pick = |candidates: &[isize]| -> Result<Option<(isize, T)>> {
        let mut best: Option<(isize, T)> = None;
        for &j in candidates {
            if let Some(s) = score_of(j)? {
                if j == prev_shift_j {
                    prev_score = Some(s);
                }
                let replace = match best {
                    None => true,
                    Some((bj, bs)) => {
                        s > bs
                            || (s == bs
                                && (j.abs() < bj.abs()
                                    || (j.abs() == bj.abs()
                                        && (j - prev_shift_j).abs() < (bj - prev_shift_j).abs())))
                    }
                };
                if replace {
                    best = Some((j, s));
                }
            }
        }
        Ok(best)
    };

    let mut narrow: Vec<isize> = Vec::with_capacity(4);
    for j in [prev_shift_j - 1, prev_shift_j, prev_shift_j + 1, 0] {
        if in_bounds(j) && !narrow.contains(&j) {
            narrow.push(j);
        }
    }
    narrow.sort_unstable();

    if let Some((j, s)) = pick(&narrow)? {
        if s.widen() >= cfg.corr_threshold {
            return Ok(LateralChoice {
                shift_j: j,
                score: s,
                prev_score,
                degenerate: false,
                used_fallback: false,
            });
        }
    }
    let full: Vec<isize> = (-n..=n).filter(|&j| in_bounds(j)).collect();
    match pick(&full)? {
        Some((j, s)) => Ok(LateralChoice {
            shift_j: j,
            score: s,
            prev_score,
            degenerate: false,
            used_fallback: true,
        }),
        None => Ok(LateralChoice {
            shift_j: prev_shift_j,
            score: T::zero(),
            prev_score: None,
            degenerate: true,
            used_fallback: true,
        }),
    }
}

/// An axial strain map over the window grid: rows are window depths, one
/// column per A-line.
#[derive(Debug, Clone)]
pub struct StrainMap<T: Real> {
    pub values: Grid2<T>,
    /// Depth of each window-row centre, mm.
    pub axial_mm: Vec<f64>,
    /// Method / variant tag, e.g. `adaptive-1.5d`.
    pub method_tag: String,
}

/// Chosen lateral shift per window (all zeros for 1D runs).
pub type LateralShiftMap = Grid2<i32>;

/// Raw per-window quality: the correlation peak the estimator actually
/// used at each window.
#[derive(Debug, Clone)]
pub struct QualityRaw<T: Real> {
    pub peak_cc: Grid2<T>,
}

/// Full output of a strain estimation run.
#[derive(Debug, Clone)]
pub struct EstimateOutput<T: Real> {
    pub strain: StrainMap<T>,
    pub shifts: LateralShiftMap,
    pub quality: QualityRaw<T>,
}

/// Estimates the axial strain map of a pre/post frame pair.
///
/// Lines are independent and processed in parallel; within a line, windows
/// run top-down so each window inherits the previous one's axial offset
/// (and lateral shift when `use_lateral`). With `use_lateral = false` or
/// `lateral_radius_n = 0` the output is identical to the plain 1D
/// estimator, bit for bit.
pub fn estimate_strain_map<T: Real>(
    pre: &RfFrame<T>,
    post: &RfFrame<T>,
    method: Method,
    use_lateral: bool,
    cfg: &EstimatorConfig,
) -> Result<EstimateOutput<T>> {
    cfg.validate()?;
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
    let columns: Result<Vec<LineOutput<T>>> = (0..pre.n_lines())
        .into_par_iter()
        .map(|i| process_line(pre, post, i, &grid, method, use_lateral, cfg))
        .collect();
    let columns = columns?;

    let strain_cols: Vec<Vec<T>> = columns.iter().map(|c| c.strains.clone()).collect();
    let shift_cols: Vec<Vec<i32>> = columns.iter().map(|c| c.shifts.clone()).collect();
    let cc_cols: Vec<Vec<T>> = columns.iter().map(|c| c.peak_cc.clone()).collect();
    let axial_mm = (0..grid.n_windows)
        .map(|k| pre.geometry().depth_mm_of_sample(grid.center_sample(k)))
        .collect();

    Ok(EstimateOutput {
        strain: StrainMap {
            values: Grid2::from_columns(&strain_cols),
            axial_mm,
            method_tag: method.tag(use_lateral).to_string(),
        },
        shifts: Grid2::from_columns(&shift_cols),
        quality: QualityRaw { peak_cc: Grid2::from_columns(&cc_cols) },
    })
}

// ==================== per-line machinery ====================

struct LineOutput<T: Real> {
    strains: Vec<T>,
    shifts: Vec<i32>,
    peak_cc: Vec<T>,
}

/// Clamps a fractional gate offset so `[start + gate, start + gate + len)`
/// stays inside the line.
#[inline]
fn clamp_gate(offset: f64, start: usize, len: usize, line_len: usize) -> isize {
    let lo = -(start as isize);
    let hi = (line_len - len) as isize - start as isize;
    (offset.round() as isize).clamp(lo, hi)
}

/// One gradient window step at a fixed gate. Returns
/// `(displacement, peak correlation, degenerate)`; a degenerate window
/// copies the carried displacement and scores zero.
fn gradient_window<T: Real>(
    pre_seg: &Segment<'_, T>,
    post_line: &[T],
    gate: isize,
    carried: T,
    grid: &WindowGrid,
) -> Result<(T, T, bool)> {
    let gs = (pre_seg.start_index() as isize + gate) as usize;
    let post_seg = match Segment::new(&post_line[gs..gs + grid.len_samples], gs) {
        Ok(s) => s,
        Err(_) => return Ok((carried, T::zero(), true)),
    };
    match ncc(pre_seg, &post_seg, grid.max_lag_samples) {
        Ok(r) => {
            let disp = T::of(gate as f64) + r.refined_lag();
            Ok((disp, r.peak_value, false))
        }
        Err(Error::DegenerateInput { .. }) => Ok((carried, T::zero(), true)),
        Err(e) => Err(e),
    }
}

/// Residual lag budget for the stretch search: the warm-started gate
/// absorbs accumulated delay, so only the per-window increment (at most
/// about `stride * (1 - alpha_min)` samples) plus jitter needs covering.
fn residual_search_lag(grid: &WindowGrid, cfg: &EstimatorConfig) -> usize {
    let scaled = (1.5 * grid.stride_samples as f64 * (1.0 - cfg.alpha_min)).round() as usize;
    scaled.clamp(4, grid.max_lag_samples).min(grid.len_samples - 1)
}

/// Correlation floor below which a window's fit is considered off track.
/// An on-track stretch fit correlates >= ~0.8 even at 16% strain, while a
/// cycle-skipped track rides a false ridge at ~0.5-0.65, so 0.7 separates
/// the two regimes: below it the gate is re-acquired over the reachable
/// delay range and the fit is not trusted to update the lateral stretch
/// prediction. (Distinct from `corr_threshold`, which governs the
/// narrowed lateral search fallback.)
const TRACK_CC_FLOOR: f64 = 0.7;

/// Hysteresis for lateral line switches: a challenger must beat the
/// incumbent line's score by this much before the track hops. Candidate
/// scores on decorrelated windows scatter by a few hundredths, so without
/// a margin the argmax wanders line to line through exactly the regions
/// where staying put costs nothing.
const SWITCH_MARGIN: f64 = 0.02;


fn process_line<T: Real>(
    pre: &RfFrame<T>,
    post: &RfFrame<T>,
    line_i: usize,
    grid: &WindowGrid,
    method: Method,
    use_lateral: bool,
    cfg: &EstimatorConfig,
) -> Result<LineOutput<T>> {
    let n_samples = pre.n_samples();
    let resid_lag = residual_search_lag(grid, cfg);
    let mut shifts = Vec::with_capacity(grid.n_windows);
    let mut peak_cc = Vec::with_capacity(grid.n_windows);
    let mut displacements: Vec<T> = Vec::with_capacity(grid.n_windows);
    let mut strains: Vec<T> = Vec::with_capacity(grid.n_windows);

    let mut offset = T::zero();
    let mut prev_j: isize = 0;
    let mut prev_strain = T::zero();
    // Stretch factor predicted from the windows above; compensates the
    // lateral candidate reads. 1.0 until the line has produced an estimate.
    let mut pred_alpha = 1.0f64;

    for k in 0..grid.n_windows {
        let start = grid.start(k);
        let pre_seg = Segment::new(&pre.line(line_i)[start..start + grid.len_samples], start)?;
        let gate = clamp_gate(offset.widen(), start, grid.len_samples, n_samples);

        let j = if use_lateral && cfg.lateral_radius_n > 0 {
            if k == 0 {
                // Neither a stretch prediction nor a shift seed exists yet,
                // and raw scoring decorrelates at high strain. Bootstrap by
                // fitting a stretch factor against every candidate line:
                // the best-correlating candidate seeds both the prediction
                // and the warm shift (the first narrowed set is centered on
                // it, so a true shift beyond +-1 stays reachable).
                let mut best_cc = f64::MIN;
                for cj in -(cfg.lateral_radius_n as isize)..=cfg.lateral_radius_n as isize {
                    let li = line_i as isize + cj;
                    if li < 0 || li as usize >= post.n_lines() {
                        continue;
                    }
                    match adaptive_stretch_segment(
                        &pre_seg,
                        post.line(li as usize),
                        start,
                        resid_lag,
                        cfg,
                    ) {
                        Ok(sr) if sr.peak_cc.widen() > best_cc => {
                            best_cc = sr.peak_cc.widen();
                            pred_alpha = sr.alpha.widen();
                            prev_j = cj;
                        }
                        Ok(_) | Err(Error::DegenerateInput { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            let choice =
                lateral_search_segment(pre, post, line_i, k, prev_j, gate, pred_alpha, grid, cfg)?;
            let hop_earned = choice.score.widen() >= cfg.corr_threshold
                && choice
                    .prev_score
                    .is_none_or(|ps| choice.score.widen() >= ps.widen() + SWITCH_MARGIN);
            if choice.shift_j != prev_j && !hop_earned {
                // In decorrelated windows the candidate ranking is a noise
                // lottery, and every unearned hop swaps in off-track line
                // content; unless the challenger is trustworthy on its own,
                // stay on the incumbent line until it wins by a clear
                // margin.
                prev_j
            } else {
                prev_j = choice.shift_j;
                choice.shift_j
            }
        } else {
            0
        };
        shifts.push(j as i32);
        let post_line = post.line((line_i as isize + j) as usize);

        match method {
            Method::Gradient => {
                let (disp, cc, _degen) = gradient_window(&pre_seg, post_line, gate, offset, grid)?;
                displacements.push(disp);
                peak_cc.push(cc);
                offset = disp;
                // Low-correlation windows would feed garbage slopes into
                // the lateral prediction; keep the last trusted one.
                if cc.widen() >= TRACK_CC_FLOOR {
                    if let [.., d_prev, d_last] = displacements[..] {
                        let slope = (d_prev.widen() - d_last.widen()) / grid.stride_samples as f64;
                        pred_alpha = (1.0 - slope).clamp(cfg.alpha_min, 1.0);
                    }
                }
            }
            Method::AdaptiveStretch => {
                let gs = (start as isize + gate) as usize;
                let fit = adaptive_stretch_segment(&pre_seg, post_line, gs, resid_lag, cfg)
                    .and_then(|narrow| {
                        if narrow.peak_cc.widen() >= TRACK_CC_FLOOR
                            || grid.max_lag_samples <= resid_lag
                        {
                            return Ok(narrow);
                        }
                        // The residual budget assumes the gate is on track; a
                        // low peak says it may have cycle-skipped (e.g. at a
                        // stiff-inclusion boundary), so re-acquire over the
                        // full displacement search range before the gate
                        // error outgrows it. Jump only onto a confident lock:
                        // in genuinely ambiguous windows the wide scan often
                        // finds a marginally better false peak, and following
                        // it would derail an on-track gate.
                        let wide = adaptive_stretch_segment(
                            &pre_seg,
                            post_line,
                            gs,
                            grid.max_lag_samples,
                            cfg,
                        )?;
                        let confident = wide.peak_cc.widen() >= TRACK_CC_FLOOR;
                        Ok(if confident && wide.peak_cc > narrow.peak_cc { wide } else { narrow })
                    });
                match fit {
                    Ok(sr) => {
                        strains.push(sr.strain);
                        peak_cc.push(sr.peak_cc);
                        prev_strain = sr.strain;
                        // Post position matching the next pre window start:
                        // gate + alpha * residual + stride * (alpha - 1).
                        let alpha = sr.alpha.widen();
                        if sr.peak_cc.widen() >= TRACK_CC_FLOOR {
                            pred_alpha = alpha;
                        }
                        offset = T::of(
                            gate as f64
                                + alpha * sr.residual_lag.widen()
                                + grid.stride_samples as f64 * (alpha - 1.0),
                        );
                    }
                    Err(Error::DegenerateInput { .. }) => {
                        strains.push(prev_strain);
                        peak_cc.push(T::zero());
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }

    if method == Method::Gradient {
        strains = gradient_strain_line(&displacements, grid);
    }
    Ok(LineOutput { strains, shifts, peak_cc })
}

/// Reads `len` samples from `line` starting at `start`, advancing `alpha`
/// positions per output sample (linear interpolation). At `alpha = 1` the
/// read reproduces the raw samples exactly.
fn stretched_read<T: Real>(line: &[T], start: usize, alpha: f64, len: usize, out: &mut Vec<T>) {
    out.clear();
    for m in 0..len {
        let pos = start as f64 + alpha * m as f64;
        let i0 = pos.floor() as usize;
        let frac = pos - i0 as f64;
        let v = if frac == 0.0 {
            line[i0].widen()
        } else {
            line[i0].widen() * (1.0 - frac) + line[i0 + 1].widen() * frac
        };
        out.push(T::of(v));
    }
}

/// Stretched-read correlation score for one candidate factor.
fn stretch_score<T: Real>(
    pre_seg: &Segment<'_, T>,
    post_line: &[T],
    start: usize,
    alpha: f64,
    search_lag: usize,
    scratch: &mut Vec<T>,
) -> Result<(T, T)> {
    stretched_read(post_line, start, alpha, pre_seg.len(), scratch);
    let stretched = Segment::new(scratch, start)?;
    let r = ncc(pre_seg, &stretched, search_lag)?;
    Ok((r.peak_value, r.refined_lag()))
}
