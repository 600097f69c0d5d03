use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ChannelKind;
use crate::grid::Grid;

/// Quantization steps per channel. Defaults are range 5 mm, intensity and
/// elongation 0.01, pose translation 0.1 mm, pose rotation 1 mrad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizationProfile {
    pub range_step: f64,
    pub intensity_step: f64,
    pub elongation_step: f64,
    pub pose_translation_step: f64,
    pub pose_rotation_step: f64,
}

impl Default for QuantizationProfile {
    fn default() -> Self {
        Self {
            range_step: 0.005,
            intensity_step: 0.01,
            elongation_step: 0.01,
            pose_translation_step: 0.0001,
            pose_rotation_step: 0.001,
        }
    }
}

impl QuantizationProfile {
    pub fn step(&self, kind: ChannelKind) -> f64 {
        match kind {
            ChannelKind::Range => self.range_step,
            ChannelKind::Intensity => self.intensity_step,
            ChannelKind::Elongation => self.elongation_step,
            ChannelKind::PoseX | ChannelKind::PoseY | ChannelKind::PoseZ => {
                self.pose_translation_step
            }
        }
    }

    /// Steps for the six image channels in container order.
    pub fn channel_steps(&self) -> [f64; 6] {
        ChannelKind::ALL.map(|k| self.step(k))
    }

    pub fn validate(&self) -> Result<(), QuantizeError> {
        for step in [
            self.range_step,
            self.intensity_step,
            self.elongation_step,
            self.pose_translation_step,
            self.pose_rotation_step,
        ] {
            check_step(step)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantizeError {
    #[error("quantization step must be finite and > 0, got {0}")]
    InvalidStep(f64),
    #[error("non-finite value {value} at valid pixel ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("value {value} at pixel ({row}, {col}) overflows the integer lattice")]
    OutOfRange { row: usize, col: usize, value: f64 },
    #[error("channel is {actual:?} but mask is {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
}

/// Integer lattice representation of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedChannel {
    pub values: Grid<i64>,
    pub step: f64,
    pub valid: Arc<Grid<bool>>,
}

impl QuantizedChannel {
    /// Values at valid pixels in row-major order.
    pub fn valid_values(&self) -> impl Iterator<Item = i64> + '_ {
        self.values
            .as_slice()
            .iter()
            .zip(self.valid.as_slice())
            .filter(|(_, &v)| v)
            .map(|(&q, _)| q)
    }
}

fn check_step(step: f64) -> Result<(), QuantizeError> {
    if step.is_finite() && step > 0.0 {
        Ok(())
    } else {
        Err(QuantizeError::InvalidStep(step))
    }
}

const LATTICE_LIMIT: f64 = 9_223_372_036_854_775_808.0; // 2^63

/// Nearest lattice index, ties away from zero. `None` for non-finite input
/// or indices outside `i64`.
pub(crate) fn quantize_scalar(value: f64, step: f64) -> Option<i64> {
    let q = (value / step).round();
    (q.is_finite() && (-LATTICE_LIMIT..LATTICE_LIMIT).contains(&q)).then_some(q as i64)
}

/// Maps each valid entry to `round(v / step)` (ties away from zero); invalid
/// entries become 0 and are never read.
pub fn quantize_channel(
    channel: &Grid<f64>,
    mask: &Arc<Grid<bool>>,
    step: f64,
) -> Result<QuantizedChannel, QuantizeError> {
    check_step(step)?;
    if channel.dims() != mask.dims() {
        return Err(QuantizeError::DimensionMismatch {
            expected: mask.dims(),
            actual: channel.dims(),
        });
    }
    let mut values = Vec::with_capacity(channel.len());
    for (i, (&v, &valid)) in channel.as_slice().iter().zip(mask.as_slice()).enumerate() {
        if !valid {
            values.push(0);
            continue;
        }
        let (row, col) = channel.coords(i);
        if !v.is_finite() {
            return Err(QuantizeError::NonFinite { row, col, value: v });
        }
        match quantize_scalar(v, step) {
            Some(q) => values.push(q),
            None => return Err(QuantizeError::OutOfRange { row, col, value: v }),
        }
    }
    Ok(QuantizedChannel {
        values: Grid::from_vec(channel.height(), channel.width(), values)
            .expect("length matches dims"),
        step,
        valid: Arc::clone(mask),
    })
}

/// `values * step` on valid pixels, 0.0 elsewhere. Re-quantizing the output
/// with the same step returns `q` for lattice indices below 2^50 in
/// magnitude.
pub fn dequantize_channel(q: &QuantizedChannel) -> Grid<f64> {
    let data = q
        .values
        .as_slice()
        .iter()
        .zip(q.valid.as_slice())
        .map(|(&v, &valid)| if valid { v as f64 * q.step } else { 0.0 })
        .collect();
    Grid::from_vec(q.values.height(), q.values.width(), data).expect("length matches dims")
}
