//! RF frame container and acquisition geometry.

use crate::error::{Error, Result};
use crate::real::Real;

/// Acquisition geometry attached to every RF frame.
///
/// Units: Hz for frequencies, m/s for sound speed, mm for pitch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameGeometry {
    /// Sampling rate of each A-line, Hz.
    pub fs_hz: f64,
    /// Speed of sound assumed for depth conversion, m/s.
    pub c_mps: f64,
    /// Lateral spacing between adjacent A-lines, mm.
    pub pitch_mm: f64,
    /// Transducer center frequency, Hz.
    pub f0_hz: f64,
}

impl FrameGeometry {
    /// Round-trip sample density: samples per millimetre of depth.
    ///
    /// An echo from depth `d` mm arrives after `2 d / c` seconds, i.e. at
    /// sample `d * samples_per_mm()`.
    #[inline]
    pub fn samples_per_mm(&self) -> f64 {
        2.0 * self.fs_hz / (1000.0 * self.c_mps)
    }

    /// Depth in millimetres corresponding to a (possibly fractional)
    /// sample index.
    #[inline]
    pub fn depth_mm_of_sample(&self, sample: f64) -> f64 {
        sample / self.samples_per_mm()
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fs_hz", self.fs_hz),
            ("c_mps", self.c_mps),
            ("pitch_mm", self.pitch_mm),
            ("f0_hz", self.f0_hz),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::spec(format!(
                    "frame geometry field {name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A beamformed RF frame: `n_lines` A-lines of `n_samples` samples each.
///
/// Samples are stored line-major (line 0 first). Every sample is finite;
/// construction rejects NaN and infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct RfFrame<T: Real> {
    n_lines: usize,
    n_samples: usize,
    geometry: FrameGeometry,
    samples: Vec<T>,
}

impl<T: Real> RfFrame<T> {
    /// Builds a frame from line-major samples, validating shape, geometry,
    /// and sample finiteness.
    pub fn new(
        n_lines: usize,
        n_samples: usize,
        geometry: FrameGeometry,
        samples: Vec<T>,
    ) -> Result<Self> {
        if n_lines == 0 || n_samples == 0 {
            return Err(Error::spec(format!(
                "frame must have at least one line and one sample, got {n_lines} x {n_samples}"
            )));
        }
        geometry.validate()?;
        if samples.len() != n_lines * n_samples {
            return Err(Error::spec(format!(
                "expected {} samples for a {n_lines} x {n_samples} frame, got {}",
                n_lines * n_samples,
                samples.len()
            )));
        }
        if let Some(pos) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::spec(format!(
                "sample {} of line {} is not finite",
                pos % n_samples,
                pos / n_samples
            )));
        }
        Ok(RfFrame { n_lines, n_samples, geometry, samples })
    }

    pub fn n_lines(&self) -> usize {
        self.n_lines
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn geometry(&self) -> &FrameGeometry {
        &self.geometry
    }

    /// The A-line at index `i`.
    pub fn line(&self, i: usize) -> &[T] {
        &self.samples[i * self.n_samples..(i + 1) * self.n_samples]
    }

    /// All samples, line-major.
    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    /// Mutable view of all samples, line-major. Callers must keep samples
    /// finite; file writers and tests use this for in-place edits.
    pub fn samples_mut(&mut self) -> &mut [T] {
        &mut self.samples
    }

    /// Converts the sample type (e.g. file `f32` to estimation `f64`).
    pub fn convert<U: Real>(&self) -> RfFrame<U> {
        RfFrame {
            n_lines: self.n_lines,
            n_samples: self.n_samples,
            geometry: self.geometry,
            samples: self.samples.iter().map(|s| U::of(s.widen())).collect(),
        }
    }

    /// True when `other` shares line count, sample count, and geometry.
    pub fn same_shape(&self, other: &RfFrame<T>) -> bool {
        self.n_lines == other.n_lines
            && self.n_samples == other.n_samples
            && self.geometry == other.geometry
    }

    /// Copy of the frame with every A-line rigidly moved `shift` lines
    /// laterally: output line `i` is input line `i - shift`, clamped at
    /// the frame edge. A lateral-search estimator run against the shifted
    /// frame should report `shift` everywhere away from the edge, which
    /// makes this the ground-truth fixture for lateral tracking.
    pub fn shifted_columns(&self, shift: isize) -> RfFrame<T> {
        let mut samples = Vec::with_capacity(self.samples.len());
        for i in 0..self.n_lines as isize {
            let src = (i - shift).clamp(0, self.n_lines as isize - 1) as usize;
            samples.extend_from_slice(self.line(src));
        }
        RfFrame { n_lines: self.n_lines, n_samples: self.n_samples, geometry: self.geometry, samples }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> FrameGeometry {
        FrameGeometry { fs_hz: 40.0e6, c_mps: 1540.0, pitch_mm: 0.3125, f0_hz: 5.0e6 }
    }

    #[test]
    fn samples_per_mm_matches_desk_arithmetic() {
        // 2 * 40e6 / (1000 * 1540) = 51.948... samples per mm.
        let g = geom();
        assert!((g.samples_per_mm() - 51.94805194805195).abs() < 1e-12);
        // Echo from 15 mm depth lands at sample 779.22...
        assert!((15.0 * g.samples_per_mm() - 779.2207792207793).abs() < 1e-9);
    }

    #[test]
    fn new_rejects_non_finite_samples() {
        let err = RfFrame::new(1, 3, geom(), vec![0.0_f64, f64::NAN, 1.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec { .. }));
    }

    #[test]
    fn new_rejects_shape_mismatch() {
        let err = RfFrame::new(2, 3, geom(), vec![0.0_f64; 5]).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec { .. }));
    }

    #[test]
    fn line_views_are_line_major() {
        let f = RfFrame::new(2, 2, geom(), vec![1.0_f64, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.line(0), &[1.0, 2.0]);
        assert_eq!(f.line(1), &[3.0, 4.0]);
    }

    #[test]
    fn convert_widens_exactly() {
        let f = RfFrame::new(1, 2, geom(), vec![1.5_f32, -0.25]).unwrap();
        let g: RfFrame<f64> = f.convert();
        assert_eq!(g.samples(), &[1.5_f64, -0.25]);
    }

    #[test]
    fn shifted_columns_moves_lines_and_clamps_edges() {
        let f = RfFrame::new(4, 1, geom(), vec![10.0_f64, 20.0, 30.0, 40.0]).unwrap();
        let s = f.shifted_columns(2);
        // Line i carries former line i - 2; the first two clamp to line 0.
        assert_eq!(s.samples(), &[10.0, 10.0, 10.0, 20.0]);
        let back = f.shifted_columns(-1);
        assert_eq!(back.samples(), &[20.0, 30.0, 40.0, 40.0]);
        assert_eq!(f.shifted_columns(0).samples(), f.samples());
    }
}
