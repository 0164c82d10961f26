//! Ultrasound elastography toolkit: RF frame synthesis from a parametric
//! tissue phantom, axial strain estimation, and strain-image quality
//! metrics.
//!
//! # Pipeline
//!
//! ```text
//! PhantomSpec ── scatterers ── displace ── synthesize ── add_noise ──┐
//!                                                                    ├── estimate_strain_map ── metrics
//! PhantomSpec ──────────────── synthesize ────────────── add_noise ──┘
//! ```
//!
//! [`phantom`] builds pre/post-compression RF frames from a scatterer
//! field deformed by an inclusion-aware spring-column model. [`xcorr`]
//! provides the normalized cross-correlation engine. [`estimators`]
//! tracks per-window displacement and converts it to axial strain with a
//! gradient or adaptive-stretching estimator, optionally wrapped by a
//! lateral (1.5D) search. [`metrics`] scores the resulting strain maps.
//!
//! # Sample types
//!
//! Everything is generic over the RF sample scalar through [`Real`]
//! (implemented for `f32` and `f64`). The `*32`/`*64` aliases below pin
//! the two supported concrete forms; `f32` halves frame memory while all
//! internal accumulation stays in `f64`.
//!
//! # Example
//!
//! ```
//! use elasto_core::{
//!     estimate_strain_map, EstimatorConfig, Method, PhantomSpec, TransducerSpec,
//!     DeformationSpec,
//! };
//! use elasto_core::phantom::{displace_scatterers, generate_scatterers, synthesize_rf};
//!
//! let phantom = PhantomSpec::homogeneous(7);
//! let transducer = TransducerSpec { n_lines: 16, ..TransducerSpec::default() };
//! let field = generate_scatterers::<f64>(&phantom).unwrap();
//! let deform = DeformationSpec::new(0.02, 0.495, phantom.width_mm / 2.0);
//! let moved = displace_scatterers(&field, &phantom, &deform).unwrap();
//!
//! let pre = synthesize_rf(&field, &transducer, phantom.height_mm).unwrap();
//! let post = synthesize_rf(&moved, &transducer, phantom.height_mm).unwrap();
//!
//! let cfg = EstimatorConfig::default();
//! let out = estimate_strain_map(&pre, &post, Method::AdaptiveStretch, false, &cfg).unwrap();
//! assert_eq!(out.strain.values.cols(), 16);
//! ```

pub mod error;
pub mod estimators;
pub mod frame;
pub mod grid;
pub mod metrics;
pub mod phantom;
pub mod real;
pub mod xcorr;

pub use error::{Error, Result};
pub use estimators::{
    adaptive_stretch_segment, estimate_displacement_line, estimate_strain_map,
    gradient_strain_line, lateral_search_segment, window_grid, DisplacementLine,
    EstimateOutput, EstimatorConfig, LateralChoice, LateralShiftMap, Method, QualityRaw,
    StrainMap, StretchResult, WindowGrid,
};
pub use frame::{FrameGeometry, RfFrame};
pub use grid::Grid2;
pub use metrics::{
    cnr_e, cnr_e_pooled, correlation_profile_dump, per_line_mean_max_corr, region_stats,
    snr_e, CorrelationProfiles, Roi,
};
pub use phantom::{
    add_noise, displace_scatterers, generate_scatterers, local_strain_at, modulus_at,
    synthesize_rf, DeformationSpec, InclusionSpec, PhantomSpec, ScattererField, TransducerSpec,
};
pub use real::Real;
pub use xcorr::{ncc, ncc_fft, refine_peak, subwindow_median_max, CorrelationResult, Segment};

/// Single-precision RF frame.
pub type RfFrame32 = frame::RfFrame<f32>;
/// Double-precision RF frame.
pub type RfFrame64 = frame::RfFrame<f64>;
/// Single-precision scatterer field.
pub type ScattererField32 = phantom::ScattererField<f32>;
/// Double-precision scatterer field.
pub type ScattererField64 = phantom::ScattererField<f64>;
/// Single-precision strain map.
pub type StrainMap32 = estimators::StrainMap<f32>;
/// Double-precision strain map.
pub type StrainMap64 = estimators::StrainMap<f64>;
/// Single-precision estimation output bundle.
pub type EstimateOutput32 = estimators::EstimateOutput<f32>;
/// Double-precision estimation output bundle.
pub type EstimateOutput64 = estimators::EstimateOutput<f64>;
