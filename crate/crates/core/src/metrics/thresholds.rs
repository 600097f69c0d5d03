//! IsMatch thresholds.
//!
//! ```toml
//! lateral = [1.0, 1.8, 3.0]
//! longitudinal = [2.0, 3.6, 6.0]
//!
//! [speed_scaling]
//! low_speed = 1.4
//! min_scale = 0.5
//! ```
//!
//! Array entries are the 3 s, 5 s and 8 s horizons. Omitted keys keep
//! their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Horizon;
use crate::config::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedScaling {
    /// Speed (m/s) at and above which thresholds apply unscaled.
    pub low_speed: f64,
    /// Threshold multiplier for a stationary agent.
    pub min_scale: f64,
}

impl Default for SpeedScaling {
    fn default() -> Self {
        Self {
            low_speed: 1.4,
            min_scale: 0.5,
        }
    }
}

impl SpeedScaling {
    /// Linear from `min_scale` at 0 m/s to 1 at `low_speed`, 1 above.
    pub fn scale(&self, speed: f64) -> f64 {
        if speed >= self.low_speed {
            1.0
        } else {
            let f = (speed / self.low_speed).max(0.0);
            self.min_scale + (1.0 - self.min_scale) * f
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchThresholds {
    pub lateral: [f64; 3],
    pub longitudinal: [f64; 3],
    pub speed_scaling: SpeedScaling,
}

impl Default for MatchThresholds {
    fn default() -> Self {
        Self {
            lateral: [1.0, 1.8, 3.0],
            longitudinal: [2.0, 3.6, 6.0],
            speed_scaling: SpeedScaling::default(),
        }
    }
}

impl MatchThresholds {
    pub fn lateral(&self, h: Horizon) -> f64 {
        self.lateral[h.index()]
    }

    pub fn longitudinal(&self, h: Horizon) -> f64 {
        self.longitudinal[h.index()]
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let t: Self = toml::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [("lateral", self.lateral), ("longitudinal", self.longitudinal)] {
            if !v.iter().all(|t| t.is_finite() && *t > 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "{name} thresholds must be positive and finite, got {v:?}"
                )));
            }
            if !(v[0] <= v[1] && v[1] <= v[2]) {
                return Err(ConfigError::Invalid(format!(
                    "{name} thresholds must be nondecreasing in horizon, got {v:?}"
                )));
            }
        }
        let s = &self.speed_scaling;
        if !(s.low_speed.is_finite() && s.low_speed > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "low_speed must be positive, got {}",
                s.low_speed
            )));
        }
        if !(s.min_scale > 0.0 && s.min_scale <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "min_scale must lie in (0, 1], got {}",
                s.min_scale
            )));
        }
        Ok(())
    }
}
