//! Run configuration: documented defaults, flat `key=value` overrides.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::MetricWeights;
use crate::optim::SimplexConfig;

/// How per-scene empirical depths are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthSynthesis {
    /// Per-pixel temporal median (default).
    Median,
    /// Mean weighted by the inverse fit error of each scene.
    InverseErrorMean,
}

/// Everything the inversion and pipeline stages need to know. Every field
/// has a default; a config file only lists overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Region radius r; the region models (2r+1)^2 pixels.
    pub region_radius: usize,
    /// Number of bottom types fitted per pixel.
    pub n_bottoms: usize,
    /// Gelbstoff slope S, 1/nm.
    pub s_slope: f64,
    /// Fixed particle backscatter exponent; estimated from the deep-water
    /// mean when absent.
    pub y_override: Option<f64>,
    /// Combined-metric weights (omega0, kappa).
    pub weights: MetricWeights,
    /// Simplex settings for the per-region inversion.
    pub simplex: SimplexConfig,
    /// Dynamic lookup table on/off.
    pub use_lut: bool,
    /// LUT spectral match threshold, radians.
    pub lut_match_threshold: f64,
    /// Hot-start spectral threshold, radians.
    pub hot_start_threshold: f64,
    /// Hot starts on/off.
    pub use_hot_start: bool,
    /// Worker threads for the scene-stack traversal; 1 = sequential and
    /// deterministic.
    pub jobs: usize,
    /// Parameter bounds.
    pub p_range: (f64, f64),
    pub g_range: (f64, f64),
    pub x_range: (f64, f64),
    pub delta_range: (f64, f64),
    pub h_range: (f64, f64),
    pub b_range: (f64, f64),
    pub q_range: (f64, f64),
    /// Optional bottom-spectra directory; the embedded library otherwise.
    pub bottom_library: Option<PathBuf>,
    /// Largest scene-combination size in the pipeline.
    pub max_combination_size: usize,
    /// Weight pipeline medians by combination size, or plain median.
    pub weighted_median: bool,
    /// Empirical depth synthesis across scenes.
    pub depth_synthesis: DepthSynthesis,
    /// Monte-Carlo depth error: number of perturbed inversions.
    pub error_trials: usize,
    /// Multiplier on the injected sensor-noise amplitude.
    pub noise_scale: f64,
    /// Multiplier applied to the final depth-error raster for external
    /// (model/albedo) uncertainties.
    pub error_scale: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            region_radius: 1,
            n_bottoms: 2,
            s_slope: 0.015,
            y_override: None,
            weights: MetricWeights::default(),
            simplex: SimplexConfig::default(),
            use_lut: true,
            lut_match_threshold: 0.5e-3,
            hot_start_threshold: 2.0e-3,
            use_hot_start: true,
            jobs: 1,
            p_range: (1e-3, 0.5),
            g_range: (1e-3, 1.0),
            x_range: (1e-4, 0.25),
            delta_range: (-0.005, 0.01),
            h_range: (0.01, 35.0),
            b_range: (0.0, 0.6),
            q_range: (1e-3, 100.0),
            bottom_library: None,
            max_combination_size: 4,
            weighted_median: true,
            depth_synthesis: DepthSynthesis::Median,
            error_trials: 10,
            noise_scale: 1.0,
            error_scale: 1.0,
        }
    }
}

impl RunConfig {
    /// Pixels per region.
    pub fn n_region_pixels(&self) -> usize {
        let side = 2 * self.region_radius + 1;
        side * side
    }

    /// Parse a flat `key=value` file ('#' comments); unknown keys are
    /// errors.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                why: format!("expected key=value, got '{line}'"),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                why: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Apply one override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num(key: &str, value: &str) -> Result<f64> {
            value.parse().map_err(|_| {
                Error::Usage(format!("config: {key} wants a number, got '{value}'"))
            })
        }
        fn int(key: &str, value: &str) -> Result<usize> {
            value.parse().map_err(|_| {
                Error::Usage(format!("config: {key} wants an integer, got '{value}'"))
            })
        }
        fn flag(key: &str, value: &str) -> Result<bool> {
            match value {
                "true" | "1" | "yes" | "on" => Ok(true),
                "false" | "0" | "no" | "off" => Ok(false),
                _ => Err(Error::Usage(format!(
                    "config: {key} wants true/false, got '{value}'"
                ))),
            }
        }
        match key {
            "region_radius" => self.region_radius = int(key, value)?,
            "n_bottoms" => {
                let n = int(key, value)?;
                if n == 0 {
                    return Err(Error::Usage("config: n_bottoms must be at least 1".into()));
                }
                self.n_bottoms = n;
            }
            "s_slope" => self.s_slope = num(key, value)?,
            "y_override" => self.y_override = Some(num(key, value)?),
            "omega0" => self.weights = MetricWeights::new(num(key, value)?, self.weights.kappa)?,
            "kappa" => self.weights = MetricWeights::new(self.weights.omega0, num(key, value)?)?,
            "max_iterations" => self.simplex.max_iterations = int(key, value)?,
            "f_tolerance" => self.simplex.f_tolerance = num(key, value)?,
            "x_tolerance" => self.simplex.x_tolerance = num(key, value)?,
            "restarts" => self.simplex.restarts = int(key, value)?,
            "initial_simplex_scale" => self.simplex.initial_scale = num(key, value)?,
            "seed" => {
                self.simplex.rng_seed = value.parse().map_err(|_| {
                    Error::Usage(format!("config: seed wants an integer, got '{value}'"))
                })?
            }
            "use_lut" => self.use_lut = flag(key, value)?,
            "lut_match_threshold_mrad" => self.lut_match_threshold = num(key, value)? * 1e-3,
            "hot_start_threshold_mrad" => self.hot_start_threshold = num(key, value)? * 1e-3,
            "use_hot_start" => self.use_hot_start = flag(key, value)?,
            "jobs" => self.jobs = int(key, value)?.max(1),
            "p_min" => self.p_range.0 = num(key, value)?,
            "p_max" => self.p_range.1 = num(key, value)?,
            "g_min" => self.g_range.0 = num(key, value)?,
            "g_max" => self.g_range.1 = num(key, value)?,
            "x_min" => self.x_range.0 = num(key, value)?,
            "x_max" => self.x_range.1 = num(key, value)?,
            "delta_min" => self.delta_range.0 = num(key, value)?,
            "delta_max" => self.delta_range.1 = num(key, value)?,
            "h_min" => self.h_range.0 = num(key, value)?,
            "h_max" => self.h_range.1 = num(key, value)?,
            "b_min" => self.b_range.0 = num(key, value)?,
            "b_max" => self.b_range.1 = num(key, value)?,
            "q_min" => self.q_range.0 = num(key, value)?,
            "q_max" => self.q_range.1 = num(key, value)?,
            "bottom_library" => self.bottom_library = Some(PathBuf::from(value)),
            "max_combination_size" => self.max_combination_size = int(key, value)?.clamp(1, 4),
            "weighted_median" => self.weighted_median = flag(key, value)?,
            "depth_synthesis" => {
                self.depth_synthesis = match value {
                    "median" => DepthSynthesis::Median,
                    "inverse_error_mean" => DepthSynthesis::InverseErrorMean,
                    _ => {
                        return Err(Error::Usage(format!(
                            "config: depth_synthesis wants median|inverse_error_mean, got '{value}'"
                        )))
                    }
                }
            }
            "error_trials" => self.error_trials = int(key, value)?,
            "noise_scale" => self.noise_scale = num(key, value)?,
            "error_scale" => self.error_scale = num(key, value)?,
            _ => return Err(Error::Usage(format!("config: unknown key '{key}'"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_consistent() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.n_region_pixels(), 9);
        assert!(cfg.p_range.0 < cfg.p_range.1);
        assert!(cfg.use_lut);
    }

    #[test]
    fn parses_overrides_and_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "# comment\nregion_radius = 2\nn_bottoms=3\nuse_lut = off\nseed=99\nlut_match_threshold_mrad = 1.5\n",
        )
        .unwrap();
        let cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(cfg.region_radius, 2);
        assert_eq!(cfg.n_region_pixels(), 25);
        assert_eq!(cfg.n_bottoms, 3);
        assert!(!cfg.use_lut);
        assert_eq!(cfg.simplex.rng_seed, 99);
        assert!((cfg.lut_match_threshold - 1.5e-3).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_errors_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "region_radius=1\nmystery_knob=4\n").unwrap();
        let err = RunConfig::from_file(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
        assert!(err.contains("mystery_knob"), "{err}");
    }

    #[test]
    fn malformed_lines_are_errors() {
        let mut cfg = RunConfig::default();
        assert!(cfg
            .apply_text("just words\n", Path::new("cfg"))
            .is_err());
        assert!(cfg.set("omega0", "0.3").is_err());
        assert!(cfg.set("jobs", "-2").is_err());
    }
}
