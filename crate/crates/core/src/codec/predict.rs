//! Previous-valid-pixel predictor.
//!
//! Pixels are visited row-major and rows are concatenated, so the last
//! valid pixel of one row predicts the first valid pixel of the next. The
//! first valid pixel of a channel is predicted as 0. Residuals use wrapping
//! arithmetic, which keeps the transform bijective over all of `i64`.

use std::sync::Arc;

use crate::grid::Grid;
use crate::range_image::QuantizedChannel;

use super::CodecError;

/// One residual per valid pixel, in scan order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResidualStream {
    pub residuals: Vec<i64>,
}

pub fn predict_encode(q: &QuantizedChannel) -> ResidualStream {
    let mut prediction = 0i64;
    let residuals = q
        .valid_values()
        .map(|value| {
            let r = value.wrapping_sub(prediction);
            prediction = value;
            r
        })
        .collect();
    ResidualStream { residuals }
}

/// Inverse of [`predict_encode`] for the same mask.
pub fn predict_decode(
    stream: &ResidualStream,
    mask: &Arc<Grid<bool>>,
    step: f64,
) -> Result<QuantizedChannel, CodecError> {
    let expected = mask.count_true();
    if stream.residuals.len() != expected {
        return Err(CodecError::ResidualCountMismatch {
            channel: None,
            expected,
            actual: stream.residuals.len(),
        });
    }
    let mut values = Vec::with_capacity(mask.len());
    let mut residuals = stream.residuals.iter();
    let mut prediction = 0i64;
    for &valid in mask.as_slice() {
        if valid {
            let r = residuals.next().expect("count checked");
            prediction = prediction.wrapping_add(*r);
            values.push(prediction);
        } else {
            values.push(0);
        }
    }
    Ok(QuantizedChannel {
        values: Grid::from_vec(mask.height(), mask.width(), values).expect("length matches"),
        step,
        valid: Arc::clone(mask),
    })
}
