//! Flat key=value run configuration.
//!
//! A config file is a plain text document: one `key = value` assignment
//! per line, `#` starts a comment, blank lines are ignored. Every key has
//! a default (the reference phantom, the standard transducer, 2% applied
//! strain, 40 dB noise, the standard estimator), so the empty document is
//! a valid configuration. Unknown keys are rejected with their line
//! number.
//!
//! Recognized keys:
//!
//! ```text
//! phantom.width_mm              phantom.height_mm
//! phantom.n_scatterers          phantom.background_modulus_kpa
//! phantom.seed                  phantom.inclusions = none
//! phantom.inclusionN = cx_mm, cy_mm, radius_mm, contrast_db
//! transducer.f0_hz              transducer.fractional_bandwidth
//! transducer.beam_width_mm      transducer.n_lines
//! transducer.pitch_mm           transducer.fs_hz
//! transducer.c_mps
//! deformation.applied_strain    deformation.poisson_ratio
//! deformation.column_shift
//! noise.snr_db (or none)        noise.pre_seed    noise.post_seed
//! estimator.window_mm           estimator.shift_mm
//! estimator.max_lag_mm          estimator.lateral_radius_n
//! estimator.n_sub               estimator.corr_threshold
//! estimator.alpha_min           estimator.alpha_coarse_step
//! estimator.alpha_refine_iters
//! compare.strains_pct = 2, 4, 6, 8, 12, 16
//! compare.n_seeds               compare.probe_line
//! compare.probe_window
//! roi.half_size_mm
//! roi.backgroundN = cx_mm, cy_mm
//! roi.lesionN = cx_mm, cy_mm
//! output.dir
//! ```
//!
//! List-valued families (`phantom.inclusionN`, `roi.backgroundN`,
//! `roi.lesionN`) replace their defaults wholesale: the first assignment
//! of a family clears the built-in list, and indices must run 1..k
//! without gaps. `roi.lesionN` defaults to the phantom's inclusion
//! centers.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use elasto_core::{DeformationSpec, EstimatorConfig, InclusionSpec, PhantomSpec, TransducerSpec};

use crate::error::{CliError, Result};

/// Everything a subcommand run needs, gathered from one document.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub phantom: PhantomSpec,
    pub transducer: TransducerSpec,
    pub applied_strain: f64,
    pub poisson_ratio: f64,
    /// Extra rigid lateral shift, in whole lines, applied to the clean
    /// post frame before noise. Ground truth for lateral-search tests.
    pub column_shift: isize,
    /// `None` disables additive noise.
    pub snr_db: Option<f64>,
    pre_seed: Option<u64>,
    post_seed: Option<u64>,
    pub estimator: EstimatorConfig,
    /// Applied-strain sweep of the compare command, percent.
    pub strains_pct: Vec<f64>,
    /// Phantom/noise realizations per sweep cell; cells aggregate by
    /// median.
    pub n_seeds: usize,
    probe_line: Option<usize>,
    probe_window: Option<usize>,
    /// Background ROI centers, mm.
    pub backgrounds_mm: Vec<(f64, f64)>,
    lesions_mm: Option<Vec<(f64, f64)>>,
    /// Half side length of every square ROI, mm.
    pub roi_half_mm: f64,
    /// Destination directory of the simulate command.
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            phantom: PhantomSpec::reference(42),
            transducer: TransducerSpec::default(),
            applied_strain: 0.02,
            poisson_ratio: 0.495,
            column_shift: 0,
            snr_db: Some(40.0),
            pre_seed: None,
            post_seed: None,
            estimator: EstimatorConfig::default(),
            strains_pct: vec![2.0, 4.0, 6.0, 8.0, 12.0, 16.0],
            n_seeds: 1,
            probe_line: None,
            probe_window: None,
            // Background ROIs sit in the pure-soft column bands flanking
            // the inclusions: columns crossing a stiff lesion carry
            // concentrated soft-tissue strain, which would leak lesion
            // geometry into the background statistics.
            backgrounds_mm: vec![(3.5, 10.0), (36.5, 10.0), (3.5, 30.0), (36.5, 30.0)],
            lesions_mm: None,
            // Central ROIs: a 3 mm square well inside the 7.5 mm lesions,
            // clear of the boundary cells where the beam mixes tissue
            // moving at very different speeds.
            roi_half_mm: 1.5,
            out_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    /// Reads and parses a config file.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses a config document, starting from the defaults.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut inclusions: Family<InclusionSpec> = Family::new("phantom.inclusion");
        let mut backgrounds: Family<(f64, f64)> = Family::new("roi.background");
        let mut lesions: Family<(f64, f64)> = Family::new("roi.lesion");

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!("line {line_no}: expected 'key = value', got {line:?}"))
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.apply(key, value, &mut inclusions, &mut backgrounds, &mut lesions)
                .map_err(|e| match e {
                    CliError::Config(msg) => {
                        CliError::config(format!("line {line_no}: key '{key}': {msg}"))
                    }
                    other => other,
                })?;
        }

        if let Some(list) = inclusions.finish()? {
            cfg.phantom.inclusions = list;
        }
        if let Some(list) = backgrounds.finish()? {
            cfg.backgrounds_mm = list;
        }
        if let Some(list) = lesions.finish()? {
            cfg.lesions_mm = Some(list);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(
        &mut self,
        key: &str,
        value: &str,
        inclusions: &mut Family<InclusionSpec>,
        backgrounds: &mut Family<(f64, f64)>,
        lesions: &mut Family<(f64, f64)>,
    ) -> Result<()> {
        if let Some(n) = key.strip_prefix("phantom.inclusion") {
            if !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) {
                let quad = parse_list(value, 4)?;
                return inclusions.insert(
                    n.parse().expect("digits"),
                    InclusionSpec {
                        center_x_mm: quad[0],
                        center_y_mm: quad[1],
                        radius_mm: quad[2],
                        contrast_db: quad[3],
                    },
                );
            }
        }
        if let Some(n) = key.strip_prefix("roi.background") {
            if !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) {
                let pair = parse_list(value, 2)?;
                return backgrounds.insert(n.parse().expect("digits"), (pair[0], pair[1]));
            }
        }
        if let Some(n) = key.strip_prefix("roi.lesion") {
            if !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) {
                let pair = parse_list(value, 2)?;
                return lesions.insert(n.parse().expect("digits"), (pair[0], pair[1]));
            }
        }

        match key {
            "phantom.width_mm" => self.phantom.width_mm = float(value)?,
            "phantom.height_mm" => self.phantom.height_mm = float(value)?,
            "phantom.n_scatterers" => self.phantom.n_scatterers = integer(value)?,
            "phantom.background_modulus_kpa" => {
                self.phantom.background_modulus_kpa = float(value)?
            }
            "phantom.seed" => self.phantom.seed = integer(value)?,
            "phantom.inclusions" => {
                if value != "none" {
                    return Err(CliError::config(format!(
                        "only 'none' is accepted (use phantom.inclusionN for entries), got {value:?}"
                    )));
                }
                self.phantom.inclusions.clear();
            }
            "transducer.f0_hz" => self.transducer.f0_hz = float(value)?,
            "transducer.fractional_bandwidth" => self.transducer.fractional_bandwidth = float(value)?,
            "transducer.beam_width_mm" => self.transducer.beam_width_mm = float(value)?,
            "transducer.n_lines" => self.transducer.n_lines = integer(value)?,
            "transducer.pitch_mm" => self.transducer.pitch_mm = float(value)?,
            "transducer.fs_hz" => self.transducer.fs_hz = float(value)?,
            "transducer.c_mps" => self.transducer.c_mps = float(value)?,
            "deformation.applied_strain" => self.applied_strain = float(value)?,
            "deformation.poisson_ratio" => self.poisson_ratio = float(value)?,
            "deformation.column_shift" => self.column_shift = integer(value)?,
            "noise.snr_db" => {
                self.snr_db = if value == "none" { None } else { Some(float(value)?) }
            }
            "noise.pre_seed" => self.pre_seed = Some(integer(value)?),
            "noise.post_seed" => self.post_seed = Some(integer(value)?),
            "estimator.window_mm" => self.estimator.window_mm = float(value)?,
            "estimator.shift_mm" => self.estimator.shift_mm = float(value)?,
            "estimator.max_lag_mm" => self.estimator.max_lag_mm = float(value)?,
            "estimator.lateral_radius_n" => self.estimator.lateral_radius_n = integer(value)?,
            "estimator.n_sub" => self.estimator.n_sub = integer(value)?,
            "estimator.corr_threshold" => self.estimator.corr_threshold = float(value)?,
            "estimator.alpha_min" => self.estimator.alpha_min = float(value)?,
            "estimator.alpha_coarse_step" => self.estimator.alpha_coarse_step = float(value)?,
            "estimator.alpha_refine_iters" => {
                self.estimator.alpha_refine_iters = integer(value)?
            }
            "compare.strains_pct" => {
                let list = parse_any_list(value)?;
                if list.is_empty() {
                    return Err(CliError::config("sweep must list at least one strain"));
                }
                self.strains_pct = list;
            }
            "compare.n_seeds" => self.n_seeds = integer(value)?,
            "compare.probe_line" => self.probe_line = Some(integer(value)?),
            "compare.probe_window" => self.probe_window = Some(integer(value)?),
            "roi.half_size_mm" => self.roi_half_mm = float(value)?,
            "output.dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(CliError::config("unknown key")),
        }
        Ok(())
    }

    /// Validates the assembled configuration, naming the offending section.
    fn validate(&self) -> Result<()> {
        let section = |name: &str, e: elasto_core::Error| {
            CliError::config(format!("{name}: {e}"))
        };
        self.phantom.validate().map_err(|e| section("phantom.*", e))?;
        self.transducer.validate().map_err(|e| section("transducer.*", e))?;
        self.deformation().validate().map_err(|e| section("deformation.*", e))?;
        self.estimator.validate().map_err(|e| section("estimator.*", e))?;
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(CliError::config("noise.snr_db: must be finite"));
            }
        }
        for &pct in &self.strains_pct {
            if !(pct.is_finite() && (0.0..100.0).contains(&pct)) {
                return Err(CliError::config(format!(
                    "compare.strains_pct: strains are percentages in [0, 100), got {pct}"
                )));
            }
        }
        if self.n_seeds == 0 {
            return Err(CliError::config("compare.n_seeds: must be at least 1"));
        }
        if !(self.roi_half_mm.is_finite() && self.roi_half_mm > 0.0) {
            return Err(CliError::config("roi.half_size_mm: must be positive"));
        }
        if self.backgrounds_mm.is_empty() {
            return Err(CliError::config(
                "roi.background*: at least one background region is required",
            ));
        }
        Ok(())
    }

    /// The configured deformation, centered on the phantom midline.
    pub fn deformation(&self) -> DeformationSpec {
        self.deformation_at(self.applied_strain)
    }

    /// The configured deformation with `applied_strain` overridden (sweep
    /// cells reuse the rest of the configuration).
    pub fn deformation_at(&self, applied_strain: f64) -> DeformationSpec {
        DeformationSpec::new(applied_strain, self.poisson_ratio, self.phantom.width_mm / 2.0)
    }

    /// Noise seed of the pre frame; defaults to `phantom.seed + 1`.
    pub fn pre_seed(&self) -> u64 {
        self.pre_seed.unwrap_or_else(|| self.phantom.seed.wrapping_add(1))
    }

    /// Noise seed of the post frame; defaults to `phantom.seed + 2`.
    pub fn post_seed(&self) -> u64 {
        self.post_seed.unwrap_or_else(|| self.phantom.seed.wrapping_add(2))
    }

    /// Lesion ROI centers: configured ones, or the inclusion centers.
    pub fn lesions_mm(&self) -> Vec<(f64, f64)> {
        match &self.lesions_mm {
            Some(list) => list.clone(),
            None => self
                .phantom
                .inclusions
                .iter()
                .map(|inc| (inc.center_x_mm, inc.center_y_mm))
                .collect(),
        }
    }

    /// Probe address of the compare diagnostics; defaults to the center
    /// of the given grid.
    pub fn probe(&self, n_lines: usize, n_windows: usize) -> (usize, usize) {
        (
            self.probe_line.unwrap_or(n_lines / 2),
            self.probe_window.unwrap_or(n_windows / 2),
        )
    }
}

/// Accumulates an indexed key family (`prefix1`, `prefix2`, ...) that
/// replaces its default list wholesale.
struct Family<V> {
    prefix: &'static str,
    entries: BTreeMap<usize, V>,
}

impl<V> Family<V> {
    fn new(prefix: &'static str) -> Self {
        Family { prefix, entries: BTreeMap::new() }
    }

    fn insert(&mut self, index: usize, value: V) -> Result<()> {
        if index == 0 {
            return Err(CliError::config(format!(
                "{}N indices start at 1",
                self.prefix
            )));
        }
        if self.entries.insert(index, value).is_some() {
            return Err(CliError::config(format!(
                "duplicate key '{}{index}'",
                self.prefix
            )));
        }
        Ok(())
    }

    /// `None` when the family never appeared; otherwise the (gap-checked)
    /// replacement list.
    fn finish(self) -> Result<Option<Vec<V>>> {
        if self.entries.is_empty() {
            return Ok(None);
        }
        let n = self.entries.len();
        if *self.entries.keys().last().expect("non-empty") != n {
            return Err(CliError::config(format!(
                "{}N indices must run 1..{n} without gaps",
                self.prefix
            )));
        }
        Ok(Some(self.entries.into_values().collect()))
    }
}

fn float(value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| CliError::config(format!("invalid number {value:?}")))?;
    if !v.is_finite() {
        return Err(CliError::config(format!("number must be finite, got {value:?}")));
    }
    Ok(v)
}

fn integer<I: std::str::FromStr>(value: &str) -> Result<I> {
    value
        .parse()
        .map_err(|_| CliError::config(format!("invalid integer {value:?}")))
}

/// Parses a comma-separated list of exactly `n` floats.
fn parse_list(value: &str, n: usize) -> Result<Vec<f64>> {
    let list = parse_any_list(value)?;
    if list.len() != n {
        return Err(CliError::config(format!(
            "expected {n} comma-separated numbers, got {}",
            list.len()
        )));
    }
    Ok(list)
}

fn parse_any_list(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(float)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_reference_configuration() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.phantom, PhantomSpec::reference(42));
        assert_eq!(cfg.transducer, TransducerSpec::default());
        assert_eq!(cfg.applied_strain, 0.02);
        assert_eq!(cfg.snr_db, Some(40.0));
        assert_eq!(cfg.pre_seed(), 43);
        assert_eq!(cfg.post_seed(), 44);
        assert_eq!(cfg.strains_pct, vec![2.0, 4.0, 6.0, 8.0, 12.0, 16.0]);
        // Default lesion ROIs sit on the inclusion centers.
        assert_eq!(
            cfg.lesions_mm(),
            vec![(10.0, 30.0), (20.0, 10.0), (30.0, 30.0), (20.0, 20.0)]
        );
    }

    #[test]
    fn comments_blanks_and_overrides_parse() {
        let cfg = RunConfig::parse(
            "# a comment\n\
             \n\
             phantom.seed = 7   # trailing comment\n\
             deformation.applied_strain = 0.08\n\
             estimator.lateral_radius_n = 3\n\
             noise.snr_db = none\n\
             compare.strains_pct = 2, 8\n\
             output.dir = /tmp/run1\n",
        )
        .unwrap();
        assert_eq!(cfg.phantom.seed, 7);
        assert_eq!(cfg.applied_strain, 0.08);
        assert_eq!(cfg.estimator.lateral_radius_n, 3);
        assert_eq!(cfg.snr_db, None);
        assert_eq!(cfg.strains_pct, vec![2.0, 8.0]);
        assert_eq!(cfg.out_dir, PathBuf::from("/tmp/run1"));
        // Noise seeds follow the overridden phantom seed.
        assert_eq!(cfg.pre_seed(), 8);
        assert_eq!(cfg.post_seed(), 9);
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_line() {
        let err = RunConfig::parse("phantom.seed = 1\nphantom.widht_mm = 40\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("phantom.widht_mm"), "{msg}");
    }

    #[test]
    fn inclusion_family_replaces_the_default_list() {
        let cfg = RunConfig::parse(
            "phantom.inclusion1 = 12, 25, 3, 20\nphantom.inclusion2 = 30, 15, 2.5, 40\n",
        )
        .unwrap();
        assert_eq!(cfg.phantom.inclusions.len(), 2);
        assert_eq!(cfg.phantom.inclusions[0].center_x_mm, 12.0);
        assert_eq!(cfg.phantom.inclusions[1].contrast_db, 40.0);

        let cfg = RunConfig::parse("phantom.inclusions = none\n").unwrap();
        assert!(cfg.phantom.inclusions.is_empty());
        assert!(cfg.lesions_mm().is_empty());
    }

    #[test]
    fn family_gaps_and_duplicates_are_rejected() {
        let err = RunConfig::parse("phantom.inclusion2 = 12, 25, 3, 20\n").unwrap_err();
        assert!(err.to_string().contains("without gaps"), "{err}");
        let err = RunConfig::parse(
            "roi.background1 = 3, 20\nroi.background1 = 4, 20\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn validation_errors_carry_the_section_name() {
        let err = RunConfig::parse("phantom.width_mm = -4\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("phantom.*"), "{err}");

        let err = RunConfig::parse("deformation.applied_strain = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("deformation.*"), "{err}");

        let err = RunConfig::parse("compare.n_seeds = 0\n").unwrap_err();
        assert!(err.to_string().contains("compare.n_seeds"), "{err}");
    }

    #[test]
    fn malformed_lines_and_values_are_rejected() {
        assert!(RunConfig::parse("phantom.seed\n").is_err());
        assert!(RunConfig::parse("phantom.seed = abc\n").is_err());
        assert!(RunConfig::parse("phantom.inclusion1 = 1, 2, 3\n").is_err());
        assert!(RunConfig::parse("noise.snr_db = maybe\n").is_err());
    }
}
