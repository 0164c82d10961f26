//! Zero-normalized cross-correlation engine.
//!
//! # Overview
//!
//! Everything the strain estimators do reduces to locating the peak of a
//! zero-normalized cross-correlation (ZNCC) function between two RF
//! segments. This module provides:
//!
//! * [`ncc`] — direct-sum ZNCC over a symmetric lag range, with the
//!   correlation coefficient computed per overlapping region (true Pearson
//!   coefficient, guaranteed in `[-1, 1]`),
//! * [`ncc_fft`] — the same function computed through an FFT of the cross
//!   terms; an independent algebraic route used to cross-check the direct
//!   sums,
//! * [`refine_peak`] — closed-form parabolic sub-sample peak interpolation,
//! * [`subwindow_median_max`] — the median of per-sub-window correlation
//!   maxima, a robust similarity score for lateral candidate ranking that
//!   tolerates one decorrelated sub-window out of three.
//!
//! # Lag convention
//!
//! `full_function[lag]` correlates `a[k]` against `b[k + lag]`: a peak at a
//! *positive* lag means `b` is `a` delayed by that many samples.

use crate::error::{Error, Result};
use crate::real::Real;
use rustfft::{num_complex::Complex, FftPlanner};

/// A gated view into one A-line.
///
/// `start_index` records where the segment begins within its parent line so
/// estimators can convert segment-relative lags back to absolute sample
/// positions. Construction validates length (>= 2) and sample finiteness.
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a, T: Real> {
    samples: &'a [T],
    start_index: usize,
}

impl<'a, T: Real> Segment<'a, T> {
    /// Wraps `samples`, rejecting segments shorter than 2 samples or
    /// containing non-finite values.
    pub fn new(samples: &'a [T], start_index: usize) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::degenerate(format!(
                "segment needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::degenerate(
                "segment contains non-finite samples".to_string(),
            ));
        }
        Ok(Segment { samples, start_index })
    }

    pub fn samples(&self) -> &'a [T] {
        self.samples
    }

    pub fn start_index(&self) -> usize {
        self.start_index
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sub-segment by segment-relative range; inherits the parent's
    /// validity, so no re-validation is needed.
    fn slice(&self, start: usize, len: usize) -> Segment<'a, T> {
        Segment {
            samples: &self.samples[start..start + len],
            start_index: self.start_index + start,
        }
    }
}

/// A correlation function over a symmetric lag range plus its peak.
#[derive(Debug, Clone)]
pub struct CorrelationResult<T: Real> {
    /// Half-width of the lag range; `full` covers `-max_lag ..= +max_lag`.
    pub max_lag: usize,
    /// Peak lag in samples. [`ncc`] fills the integer argmax; callers add
    /// [`refine_peak`]'s sub-sample offset (or use [`Self::refined_lag`]).
    pub peak_lag: T,
    /// Correlation coefficient at the peak, in `[-1, 1]`.
    pub peak_value: T,
    /// The correlation coefficient at each lag, index `i` holding lag
    /// `i - max_lag`.
    pub full: Vec<T>,
}

impl<T: Real> CorrelationResult<T> {
    /// Index into `full` of the integer peak.
    pub fn peak_index(&self) -> usize {
        (self.peak_lag.widen().round() as isize + self.max_lag as isize) as usize
    }

    /// Peak lag with parabolic sub-sample refinement applied.
    pub fn refined_lag(&self) -> T {
        self.peak_lag + refine_peak(&self.full, self.peak_index())
    }
}

// ==================== direct-sum ZNCC ====================

/// Zero-normalized cross-correlation of two equal-length segments over
/// lags `-max_lag ..= +max_lag`, computed by direct summation.
///
/// Each lag's coefficient is the Pearson correlation of the overlapping
/// regions (means and norms taken over the overlap only), so every value
/// lies in `[-1, 1]` and is invariant to affine amplitude changes of either
/// input. Ties at the peak resolve toward the smaller `|lag|`.
///
/// Errors: segments of unequal length or `max_lag >= len` are
/// configuration errors; a zero-variance segment is a degenerate input.
pub fn ncc<T: Real>(
    a: &Segment<'_, T>,
    b: &Segment<'_, T>,
    max_lag: usize,
) -> Result<CorrelationResult<T>> {
    let len = validate_pair(a, b, max_lag)?;
    let stats_a = PrefixStats::build(a.samples());
    let stats_b = PrefixStats::build(b.samples());

    let mut full = Vec::with_capacity(2 * max_lag + 1);
    for lag in -(max_lag as isize)..=(max_lag as isize) {
        let (lo, hi) = overlap(len, lag);
        let cross = dot(&a.samples()[lo..hi], &b.samples()[(lo as isize + lag) as usize..]);
        full.push(coefficient(
            cross,
            stats_a.range(lo, hi),
            stats_b.range((lo as isize + lag) as usize, (hi as isize + lag) as usize),
        ));
    }
    Ok(finish(full, max_lag))
}

/// [`ncc`] computed through an FFT: the per-lag cross sums come from a
/// single circular correlation, while means and norms use the same prefix
/// sums as the direct route. Used as the independent algebraic cross-check
/// of the direct summation (they agree to ~1e-13 in f64).
pub fn ncc_fft<T: Real>(
    a: &Segment<'_, T>,
    b: &Segment<'_, T>,
    max_lag: usize,
) -> Result<CorrelationResult<T>> {
    let len = validate_pair(a, b, max_lag)?;
    let fft_len = (len + max_lag + 1).next_power_of_two();

    let mut fa: Vec<Complex<f64>> = a
        .samples()
        .iter()
        .map(|&v| Complex::new(v.widen(), 0.0))
        .collect();
    fa.resize(fft_len, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b
        .samples()
        .iter()
        .map(|&v| Complex::new(v.widen(), 0.0))
        .collect();
    fb.resize(fft_len, Complex::new(0.0, 0.0));

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(fft_len);
    fft.process(&mut fa);
    fft.process(&mut fb);
    // conj(A) * B gives z[m] = sum_k a[k] b[k+m] after the inverse
    // transform; negative lags wrap to the tail of the buffer.
    let mut prod: Vec<Complex<f64>> = fa
        .iter()
        .zip(fb.iter())
        .map(|(x, y)| x.conj() * y)
        .collect();
    let ifft = planner.plan_fft_inverse(fft_len);
    ifft.process(&mut prod);
    let scale = 1.0 / fft_len as f64;

    let sa: Vec<f64> = a.samples().iter().map(|v| v.widen()).collect();
    let sb: Vec<f64> = b.samples().iter().map(|v| v.widen()).collect();
    let stats_a = PrefixStats::build(&sa);
    let stats_b = PrefixStats::build(&sb);

    let mut full = Vec::with_capacity(2 * max_lag + 1);
    for lag in -(max_lag as isize)..=(max_lag as isize) {
        let (lo, hi) = overlap(len, lag);
        let idx = lag.rem_euclid(fft_len as isize) as usize;
        let cross = prod[idx].re * scale;
        let c = coefficient(
            cross,
            stats_a.range(lo, hi),
            stats_b.range((lo as isize + lag) as usize, (hi as isize + lag) as usize),
        );
        full.push(T::of(c));
    }
    Ok(finish(full, max_lag))
}

/// Closed-form parabolic interpolation of a correlation peak.
///
/// Fits a parabola through `full[peak_index - 1 ..= peak_index + 1]` and
/// returns the vertex offset from `peak_index`, clamped to `[-0.5, 0.5]`.
/// A peak on the range boundary (or a flat triple) returns offset zero.
pub fn refine_peak<T: Real>(full: &[T], peak_index: usize) -> T {
    if peak_index == 0 || peak_index + 1 >= full.len() {
        return T::zero();
    }
    let a = full[peak_index - 1];
    let b = full[peak_index];
    let c = full[peak_index + 1];
    let num = c - a;
    let den = T::of(2.0) * (T::of(2.0) * b - a - c);
    if den.abs() < T::of(1e-12) {
        return T::zero();
    }
    let half = T::of(0.5);
    (num / den).max(-half).min(half)
}

/// Median of per-sub-window ZNCC maxima.
///
/// Splits both segments into `n_sub` equal contiguous sub-windows (any
/// remainder samples at the tail are ignored), computes each pair's
/// correlation peak value over `+-max_lag` (clamped so the lag range fits
/// the sub-window), and returns the median of the maxima — the lower of
/// the two middle values when `n_sub` is even.
///
/// Errors: sub-windows shorter than 8 samples are a configuration error;
/// a zero-variance sub-window makes the whole score degenerate.
pub fn subwindow_median_max<T: Real>(
    a: &Segment<'_, T>,
    b: &Segment<'_, T>,
    n_sub: usize,
    max_lag: usize,
) -> Result<T> {
    if n_sub == 0 {
        return Err(Error::config("n_sub must be at least 1".to_string()));
    }
    if a.len() != b.len() {
        return Err(Error::config(format!(
            "sub-window scoring needs equal-length segments, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let sub_len = a.len() / n_sub;
    if sub_len < 8 {
        return Err(Error::config(format!(
            "sub-window length {} is below the 8-sample minimum ({} samples / {} sub-windows)",
            sub_len,
            a.len(),
            n_sub
        )));
    }
    let sub_lag = max_lag.min(sub_len - 1);
    let mut maxima = Vec::with_capacity(n_sub);
    for k in 0..n_sub {
        let sa = a.slice(k * sub_len, sub_len);
        let sb = b.slice(k * sub_len, sub_len);
        maxima.push(ncc(&sa, &sb, sub_lag)?.peak_value);
    }
    Ok(median_lower(&mut maxima))
}

// ==================== internals ====================

/// Lower median: middle element for odd counts, the lower of the two middle
/// elements for even counts.
fn median_lower<T: Real>(values: &mut [T]) -> T {
    debug_assert!(!values.is_empty());
    values.sort_by(|x, y| x.partial_cmp(y).expect("finite correlation values"));
    values[(values.len() - 1) / 2]
}

fn validate_pair<T: Real>(
    a: &Segment<'_, T>,
    b: &Segment<'_, T>,
    max_lag: usize,
) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::config(format!(
            "correlation needs equal-length segments, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let len = a.len();
    if max_lag >= len {
        return Err(Error::config(format!(
            "max_lag {max_lag} must be smaller than the segment length {len}"
        )));
    }
    for (name, seg) in [("first", a), ("second", b)] {
        if !has_variance(seg.samples()) {
            return Err(Error::degenerate(format!(
                "{name} segment has zero variance (no signal to correlate)"
            )));
        }
    }
    Ok(len)
}

fn has_variance<T: Real>(samples: &[T]) -> bool {
    samples.windows(2).any(|w| w[0] != w[1])
}

/// Overlap of `a[k]` vs `b[k + lag]` as a half-open index range on `a`.
#[inline]
fn overlap(len: usize, lag: isize) -> (usize, usize) {
    let lo = (-lag).max(0) as usize;
    let hi = ((len as isize - lag).min(len as isize)).max(0) as usize;
    (lo, hi)
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| x.widen() * y.widen())
        .sum()
}

/// Prefix sums of values and squares, widened to f64 so per-overlap means
/// and norms cost O(1) per lag without precision loss for f32 inputs.
struct PrefixStats {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl PrefixStats {
    fn build<T: Real>(samples: &[T]) -> Self {
        let mut sum = Vec::with_capacity(samples.len() + 1);
        let mut sum_sq = Vec::with_capacity(samples.len() + 1);
        let (mut s, mut q) = (0.0_f64, 0.0_f64);
        sum.push(s);
        sum_sq.push(q);
        for &v in samples {
            let v = v.widen();
            s += v;
            q += v * v;
            sum.push(s);
            sum_sq.push(q);
        }
        PrefixStats { sum, sum_sq }
    }

    /// `(sum, sum of squares, count)` over `[lo, hi)`.
    fn range(&self, lo: usize, hi: usize) -> (f64, f64, f64) {
        (
            self.sum[hi] - self.sum[lo],
            self.sum_sq[hi] - self.sum_sq[lo],
            (hi - lo) as f64,
        )
    }
}

/// Pearson coefficient of one overlap from its raw sums. Overlaps with no
/// local variance carry no alignment information and score zero.
fn coefficient<T: Real>(cross: f64, (sa, qa, n): (f64, f64, f64), (sb, qb, _): (f64, f64, f64)) -> T {
    let var_a = (qa - sa * sa / n).max(0.0);
    let var_b = (qb - sb * sb / n).max(0.0);
    if var_a <= 0.0 || var_b <= 0.0 {
        return T::zero();
    }
    let num = cross - sa * sb / n;
    let c = (num / (var_a * var_b).sqrt()).clamp(-1.0, 1.0);
    T::of(c)
}

/// Peak selection shared by both routes: highest value, ties toward the
/// smaller `|lag|` (then the earlier lag in scan order).
fn finish<T: Real>(full: Vec<T>, max_lag: usize) -> CorrelationResult<T> {
    let mut best = 0usize;
    for i in 1..full.len() {
        let lag_i = (i as isize - max_lag as isize).abs();
        let lag_b = (best as isize - max_lag as isize).abs();
        if full[i] > full[best] || (full[i] == full[best] && lag_i < lag_b) {
            best = i;
        }
    }
    CorrelationResult {
        max_lag,
        peak_lag: T::of(best as f64 - max_lag as f64),
        peak_value: full[best],
        full,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPSILON: f64 = 1e-9;

    fn base_signal(n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let t = k as f64;
                (0.3 * t).sin() + 0.5 * (0.11 * t + 1.0).sin() + 0.2 * (0.05 * t).cos()
            })
            .collect()
    }

    #[test]
    fn ncc_recovers_constructed_shift() {
        // b is a delayed by exactly 7 samples: peak lag must be +7.
        let base = base_signal(200);
        let a = Segment::new(&base[40..104], 40).unwrap();
        let b = Segment::new(&base[33..97], 33).unwrap();
        let r = ncc(&a, &b, 16).unwrap();
        assert_eq!(r.peak_lag, 7.0);
        assert!(r.peak_value > 1.0 - EPSILON);
    }

    #[test]
    fn ncc_self_correlation_peaks_at_zero_with_unit_value() {
        let base = base_signal(80);
        let a = Segment::new(&base[8..72], 8).unwrap();
        let r = ncc(&a, &a, 10).unwrap();
        assert_eq!(r.peak_lag, 0.0);
        assert!((r.peak_value - 1.0).abs() < 1e-12);
        assert!(r.full.iter().all(|&v| (-1.0..=1.0).contains(&v)));
        assert_eq!(r.full.len(), 21);
    }

    #[test]
    fn ncc_symmetry_for_unique_peak() {
        let base = base_signal(200);
        let a = Segment::new(&base[40..104], 0).unwrap();
        let b = Segment::new(&base[35..99], 0).unwrap();
        let fwd = ncc(&a, &b, 12).unwrap();
        let rev = ncc(&b, &a, 12).unwrap();
        assert_eq!(fwd.peak_lag, -rev.peak_lag);
    }

    #[test]
    fn ncc_rejects_zero_variance_segment() {
        let flat = vec![3.25_f64; 32];
        let base = base_signal(32);
        let a = Segment::new(&flat, 0).unwrap();
        let b = Segment::new(&base, 0).unwrap();
        assert!(matches!(
            ncc(&a, &b, 4).unwrap_err(),
            Error::DegenerateInput { .. }
        ));
    }

    #[test]
    fn ncc_rejects_oversized_lag_range() {
        let base = base_signal(16);
        let a = Segment::new(&base, 0).unwrap();
        assert!(matches!(
            ncc(&a, &a, 16).unwrap_err(),
            Error::InvalidConfig { .. }
        ));
    }

    #[test]
    fn ncc_is_invariant_to_affine_amplitude_changes() {
        let base = base_signal(100);
        let scaled: Vec<f64> = base.iter().map(|v| 3.7 * v - 1.25).collect();
        let a = Segment::new(&base[10..74], 0).unwrap();
        let b = Segment::new(&base[4..68], 0).unwrap();
        let a2 = Segment::new(&scaled[10..74], 0).unwrap();
        let r1 = ncc(&a, &b, 9).unwrap();
        let r2 = ncc(&a2, &b, 9).unwrap();
        assert_eq!(r1.peak_lag, r2.peak_lag);
        for (x, y) in r1.full.iter().zip(r2.full.iter()) {
            assert!((x - y).abs() < EPSILON);
        }
    }

    #[test]
    fn fft_route_matches_direct_sums() {
        let base = base_signal(150);
        let a = Segment::new(&base[20..120], 0).unwrap();
        let b = Segment::new(&base[13..113], 0).unwrap();
        let d = ncc(&a, &b, 20).unwrap();
        let f = ncc_fft(&a, &b, 20).unwrap();
        for (x, y) in d.full.iter().zip(f.full.iter()) {
            assert!((x - y).abs() < 1e-6, "direct {x} vs fft {y}");
        }
        assert_eq!(d.peak_lag, f.peak_lag);
    }

    #[test]
    fn refine_peak_symmetric_triple_is_centered() {
        let full = vec![0.1, 0.8, 1.0, 0.8, 0.2];
        assert_eq!(refine_peak(&full, 2), 0.0);
    }

    #[test]
    fn refine_peak_matches_closed_form_vertex() {
        // (a, b, c) = (0.7, 1.0, 0.9): vertex at (c - a) / (2 (2b - a - c)) = +0.25.
        let full = vec![0.7_f64, 1.0, 0.9];
        assert!((refine_peak(&full, 1) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn refine_peak_boundary_returns_zero_offset() {
        let full = vec![1.0, 0.9, 0.8];
        assert_eq!(refine_peak(&full, 0), 0.0);
        assert_eq!(refine_peak(&full, 2), 0.0);
    }

    #[test]
    fn refine_peak_offset_is_clamped_to_half_sample() {
        // Nearly-flat then falling: raw vertex beyond +-0.5 gets clamped.
        let full = vec![0.999999, 1.0, 0.999999999];
        let off: f64 = refine_peak(&full, 1);
        assert!(off.abs() <= 0.5);
    }

    #[test]
    fn refined_lag_lands_on_fractional_shift() {
        // Sample a smooth band-limited signal at a fractional delay of 4.3
        // samples; the refined lag should land within 0.15 of it.
        let f = |t: f64| (0.4 * t).sin() + 0.3 * (0.13 * t).sin();
        let a: Vec<f64> = (0..96).map(|k| f(k as f64)).collect();
        let b: Vec<f64> = (0..96).map(|k| f(k as f64 - 4.3)).collect();
        let sa = Segment::new(&a, 0).unwrap();
        let sb = Segment::new(&b, 0).unwrap();
        let r = ncc(&sa, &sb, 10).unwrap();
        assert_eq!(r.peak_lag, 4.0);
        assert!((r.refined_lag() - 4.3).abs() < 0.15, "got {}", r.refined_lag());
    }

    #[test]
    fn median_lower_matches_examples() {
        let mut odd = vec![0.90, 0.85, 0.20, 0.88, 0.87];
        assert_eq!(median_lower(&mut odd), 0.87);
        let mut even = vec![0.4, 0.1, 0.3, 0.2];
        assert_eq!(median_lower(&mut even), 0.2);
    }

    #[test]
    fn subwindow_median_identical_segments_score_one() {
        let base = base_signal(156);
        let a = Segment::new(&base, 0).unwrap();
        let s = subwindow_median_max(&a, &a, 3, 8).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subwindow_median_tolerates_one_corrupted_subwindow() {
        // Corrupt the middle third of b; the median over 3 sub-windows
        // must stay near 1 while the corrupted sub-window alone would not.
        let base = base_signal(156);
        let mut corrupted = base.clone();
        for (i, v) in corrupted.iter_mut().enumerate().take(104).skip(52) {
            *v = ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5;
        }
        let a = Segment::new(&base, 0).unwrap();
        let b = Segment::new(&corrupted, 0).unwrap();
        let s = subwindow_median_max(&a, &b, 3, 8).unwrap();
        assert!(s > 0.999, "median of maxima should ignore the outlier, got {s}");
    }

    #[test]
    fn subwindow_median_rejects_short_subwindows() {
        let base = base_signal(20);
        let a = Segment::new(&base, 0).unwrap();
        assert!(matches!(
            subwindow_median_max(&a, &a, 3, 4).unwrap_err(),
            Error::InvalidConfig { .. }
        ));
    }

    #[test]
    fn segment_rejects_non_finite_and_short_input() {
        assert!(Segment::new(&[1.0_f64], 0).is_err());
        assert!(Segment::new(&[1.0_f64, f64::INFINITY], 0).is_err());
    }
}
