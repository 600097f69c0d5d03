//! TOML configuration for quantization steps and sensor inclination bounds.
//!
//! ```toml
//! [quantization]
//! range_step = 0.005
//! pose_rotation_step = 0.001
//!
//! [geometry.top]
//! inclination_min = -0.31
//! inclination_max = 0.04
//! ```
//!
//! Every key is optional; omitted keys keep their defaults.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::range_image::{QuantizationProfile, SensorGeometry, SensorId};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclinationBounds {
    pub inclination_min: f64,
    pub inclination_max: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolkitConfig {
    pub quantization: QuantizationProfile,
    pub geometry: BTreeMap<SensorId, InclinationBounds>,
}

impl ToolkitConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.quantization
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for (sensor, b) in &self.geometry {
            if !(b.inclination_min.is_finite()
                && b.inclination_max.is_finite()
                && b.inclination_min < b.inclination_max)
            {
                return Err(ConfigError::Invalid(format!(
                    "{sensor}: inclination bounds [{}, {}] must be finite and increasing",
                    b.inclination_min, b.inclination_max
                )));
            }
        }
        Ok(())
    }

    /// Geometry for `sensor` at the given dimensions with any configured
    /// inclination override applied.
    pub fn geometry_for(&self, sensor: SensorId, height: usize, width: usize) -> SensorGeometry {
        let mut g = SensorGeometry::with_dims(sensor, height, width);
        if let Some(b) = self.geometry.get(&sensor) {
            g.inclination_min = b.inclination_min;
            g.inclination_max = b.inclination_max;
        }
        g
    }
}
