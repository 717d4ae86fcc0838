//! Tunable defaults shared by the compiler, simulator, losses and metrics.
//! Loadable from TOML; every key is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objectives::LossWeights;
use crate::pose::DiscrepancyParams;
use crate::scl::Elevation;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config value {key}: {reason}")]
    Invalid { key: &'static str, reason: String },
}

/// Polar angle in degrees from the zenith for each elevation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElevationTable {
    pub worms_eye: f64,
    pub low: f64,
    pub eye_level: f64,
    pub high: f64,
    pub birds_eye: f64,
}

impl Default for ElevationTable {
    fn default() -> Self {
        ElevationTable {
            worms_eye: 165.0,
            low: 120.0,
            eye_level: 90.0,
            high: 60.0,
            birds_eye: 15.0,
        }
    }
}

impl ElevationTable {
    pub fn polar_degrees(&self, e: Elevation) -> f64 {
        match e {
            Elevation::WormsEye => self.worms_eye,
            Elevation::Low => self.low,
            Elevation::EyeLevel => self.eye_level,
            Elevation::High => self.high,
            Elevation::BirdsEye => self.birds_eye,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub elevation_polar_deg: ElevationTable,
    /// Azimuth spacing of the eight side sectors, degrees.
    pub side_step_deg: f64,
    /// Maximum acceleration, meters per frame squared.
    pub a_max: f64,
    /// Framing tolerance in normalized device units.
    pub ndc_tolerance: f64,
    /// Largest orientation change micro alignment may apply before it moves
    /// the camera instead, degrees.
    pub orientation_budget_deg: f64,
    /// Allowed relative mismatch of the projected ROI span after the fov fit.
    pub span_tolerance: f64,
    pub default_fov_deg: f64,
    /// Horizontal over vertical image extent.
    pub aspect: f64,
    /// Curve magnitude of subject-aware interpolation.
    pub alpha: f64,
    /// Visibility pass keeps the subject within this NDC bound.
    pub visibility_margin: f64,
    pub frame_rate: f64,
    pub frames: u32,
    pub epsilon: f64,
    pub knn_k: usize,
    pub loss_weights: LossWeights,
    /// Iteration budget of the acceleration projection.
    pub accel_iterations: usize,
    /// Outer rounds alternating acceleration smoothing and geometric passes.
    pub accel_outer_rounds: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            elevation_polar_deg: ElevationTable::default(),
            side_step_deg: 45.0,
            a_max: 0.05,
            ndc_tolerance: 0.02,
            orientation_budget_deg: 25.0,
            span_tolerance: 0.02,
            default_fov_deg: 45.0,
            aspect: 1.0,
            alpha: 0.5,
            visibility_margin: 0.9,
            frame_rate: 30.0,
            frames: 30,
            epsilon: 1.0,
            knn_k: 5,
            loss_weights: LossWeights::default(),
            accel_iterations: 2_000,
            accel_outer_rounds: 200,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn default_fov(&self) -> f64 {
        self.default_fov_deg.to_radians()
    }

    pub fn discrepancy(&self) -> DiscrepancyParams {
        DiscrepancyParams {
            epsilon: self.epsilon,
            normalized: true,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn check(ok: bool, key: &'static str, reason: &str) -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Invalid {
                    key,
                    reason: reason.to_string(),
                })
            }
        }
        let t = &self.elevation_polar_deg;
        for v in [t.worms_eye, t.low, t.eye_level, t.high, t.birds_eye] {
            check(v > 0.0 && v < 180.0, "elevation_polar_deg", "polar angles must lie in (0, 180)")?;
        }
        check(self.side_step_deg.is_finite(), "side_step_deg", "must be finite")?;
        check(self.a_max >= 0.0 && self.a_max.is_finite(), "a_max", "must be finite and >= 0")?;
        check(self.ndc_tolerance > 0.0, "ndc_tolerance", "must be positive")?;
        check(
            self.orientation_budget_deg > 0.0 && self.orientation_budget_deg <= 180.0,
            "orientation_budget_deg",
            "must lie in (0, 180]",
        )?;
        check(self.span_tolerance > 0.0, "span_tolerance", "must be positive")?;
        check(
            self.default_fov_deg > 0.0 && self.default_fov_deg < 180.0,
            "default_fov_deg",
            "must lie in (0, 180)",
        )?;
        check(self.aspect > 0.0 && self.aspect.is_finite(), "aspect", "must be positive")?;
        check(self.alpha.is_finite(), "alpha", "must be finite")?;
        check(
            self.visibility_margin > 0.0 && self.visibility_margin <= 1.0,
            "visibility_margin",
            "must lie in (0, 1]",
        )?;
        check(self.frame_rate > 0.0, "frame_rate", "must be positive")?;
        check(self.frames >= 1, "frames", "must be at least 1")?;
        check(self.epsilon > 0.0 && self.epsilon.is_finite(), "epsilon", "must be positive")?;
        check(self.knn_k >= 1, "knn_k", "must be at least 1")?;
        check(self.loss_weights.validate().is_ok(), "loss_weights", "must be finite and >= 0")?;
        check(self.accel_iterations >= 1, "accel_iterations", "must be at least 1")?;
        check(self.accel_outer_rounds >= 1, "accel_outer_rounds", "must be at least 1")?;
        Ok(())
    }
}
