//! In-memory range-image model: sensor geometries, channels, validity
//! masking and quantization onto integer lattices.

mod quantize;

pub(crate) use quantize::quantize_scalar;
pub use quantize::{
    dequantize_channel, quantize_channel, QuantizationProfile, QuantizeError, QuantizedChannel,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grid::Grid;

/// One of the five vehicle-mounted LiDARs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorId {
    Top,
    FrontLeft,
    FrontRight,
    SideLeft,
    SideRight,
}

impl SensorId {
    pub const ALL: [SensorId; 5] = [
        SensorId::Top,
        SensorId::FrontLeft,
        SensorId::FrontRight,
        SensorId::SideLeft,
        SensorId::SideRight,
    ];

    pub fn code(self) -> u8 {
        match self {
            SensorId::Top => 0,
            SensorId::FrontLeft => 1,
            SensorId::FrontRight => 2,
            SensorId::SideLeft => 3,
            SensorId::SideRight => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// Native (height, width) of this sensor's range images.
    pub fn native_dims(self) -> (usize, usize) {
        match self {
            SensorId::Top => (64, 2650),
            _ => (116, 150),
        }
    }

    /// Placeholder beam inclination bounds in radians; the real beam tables
    /// are not published.
    pub fn default_inclination(self) -> (f64, f64) {
        match self {
            SensorId::Top => (-0.31, 0.04),
            _ => (-1.0, 0.3),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorId::Top => "top",
            SensorId::FrontLeft => "front_left",
            SensorId::FrontRight => "front_right",
            SensorId::SideLeft => "side_left",
            SensorId::SideRight => "side_right",
        }
    }
}

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which LiDAR return a range image holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReturnIndex {
    First,
    Second,
}

impl ReturnIndex {
    pub fn code(self) -> u8 {
        match self {
            ReturnIndex::First => 0,
            ReturnIndex::Second => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ReturnIndex::First),
            1 => Some(ReturnIndex::Second),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorGeometry {
    pub sensor: SensorId,
    pub height: usize,
    pub width: usize,
    pub inclination_min: f64,
    pub inclination_max: f64,
}

impl SensorGeometry {
    /// Native dimensions and default inclination bounds for `sensor`.
    pub fn native(sensor: SensorId) -> Self {
        let (height, width) = sensor.native_dims();
        let (inclination_min, inclination_max) = sensor.default_inclination();
        Self {
            sensor,
            height,
            width,
            inclination_min,
            inclination_max,
        }
    }

    /// Geometry with non-native dimensions, used for small fixtures and for
    /// decoding containers whose header dimensions differ from the sensor's.
    pub fn with_dims(sensor: SensorId, height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            ..Self::native(sensor)
        }
    }

    pub fn is_native(&self) -> bool {
        (self.height, self.width) == self.sensor.native_dims()
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }
}

/// The six per-pixel channels, in container order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Range,
    Intensity,
    Elongation,
    PoseX,
    PoseY,
    PoseZ,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 6] = [
        ChannelKind::Range,
        ChannelKind::Intensity,
        ChannelKind::Elongation,
        ChannelKind::PoseX,
        ChannelKind::PoseY,
        ChannelKind::PoseZ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Range => "range",
            ChannelKind::Intensity => "intensity",
            ChannelKind::Elongation => "elongation",
            ChannelKind::PoseX => "pose_tx",
            ChannelKind::PoseY => "pose_ty",
            ChannelKind::PoseZ => "pose_tz",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One sensor's returns for one frame.
///
/// `frame_rotation` is the vehicle orientation for the whole frame as
/// (yaw, pitch, roll) radians; translation is tracked per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeImage {
    pub geometry: SensorGeometry,
    pub return_index: ReturnIndex,
    pub range: Grid<f64>,
    pub intensity: Grid<f64>,
    pub elongation: Grid<f64>,
    pub pose_translation: Grid<[f64; 3]>,
    pub valid: Grid<bool>,
    pub frame_rotation: [f64; 3],
}

impl RangeImage {
    /// An image with every pixel invalid and zeroed.
    pub fn empty(geometry: SensorGeometry, return_index: ReturnIndex) -> Self {
        let (h, w) = (geometry.height, geometry.width);
        Self {
            geometry,
            return_index,
            range: Grid::filled(h, w, 0.0),
            intensity: Grid::filled(h, w, 0.0),
            elongation: Grid::filled(h, w, 0.0),
            pose_translation: Grid::filled(h, w, [0.0; 3]),
            valid: Grid::filled(h, w, false),
            frame_rotation: [0.0; 3],
        }
    }

    pub fn valid_count(&self) -> usize {
        self.valid.count_true()
    }

    /// Copies one channel out as a scalar grid.
    pub fn channel(&self, kind: ChannelKind) -> Grid<f64> {
        match kind {
            ChannelKind::Range => self.range.clone(),
            ChannelKind::Intensity => self.intensity.clone(),
            ChannelKind::Elongation => self.elongation.clone(),
            ChannelKind::PoseX => self.pose_translation.map(|p| p[0]),
            ChannelKind::PoseY => self.pose_translation.map(|p| p[1]),
            ChannelKind::PoseZ => self.pose_translation.map(|p| p[2]),
        }
    }

    /// Applies the per-pixel values of `grid` to one channel.
    pub fn set_channel(&mut self, kind: ChannelKind, grid: &Grid<f64>) {
        let src = grid.as_slice();
        let axis = match kind {
            ChannelKind::Range => {
                self.range = grid.clone();
                return;
            }
            ChannelKind::Intensity => {
                self.intensity = grid.clone();
                return;
            }
            ChannelKind::Elongation => {
                self.elongation = grid.clone();
                return;
            }
            ChannelKind::PoseX => 0,
            ChannelKind::PoseY => 1,
            ChannelKind::PoseZ => 2,
        };
        for (p, &v) in self.pose_translation.as_mut_slice().iter_mut().zip(src) {
            p[axis] = v;
        }
    }
}

/// A broken [`RangeImage`] invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DimensionMismatch {
        grid: &'static str,
        expected: (usize, usize),
        actual: (usize, usize),
    },
    InclinationBounds {
        min: f64,
        max: f64,
    },
    NonFiniteRotation {
        axis: usize,
    },
    RangeNotPositive {
        row: usize,
        col: usize,
        value: f64,
    },
    NegativeOrNonFinite {
        channel: ChannelKind,
        row: usize,
        col: usize,
        value: f64,
    },
}

impl Violation {
    /// Short name of the invariant that failed.
    pub fn invariant(&self) -> &'static str {
        match self {
            Violation::DimensionMismatch { .. } => "grid dimensions match geometry",
            Violation::InclinationBounds { .. } => "inclination_min < inclination_max, both finite",
            Violation::NonFiniteRotation { .. } => "frame rotation finite",
            Violation::RangeNotPositive { .. } => "range > 0",
            Violation::NegativeOrNonFinite { channel, .. } => match channel {
                ChannelKind::Intensity => "intensity >= 0",
                ChannelKind::Elongation => "elongation >= 0",
                _ => "pose translation finite",
            },
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionMismatch {
                grid,
                expected,
                actual,
            } => write!(
                f,
                "{}: grid `{grid}` is {}x{}, expected {}x{}",
                self.invariant(),
                actual.0,
                actual.1,
                expected.0,
                expected.1
            ),
            Violation::InclinationBounds { min, max } => {
                write!(f, "{}: got [{min}, {max}]", self.invariant())
            }
            Violation::NonFiniteRotation { axis } => {
                write!(f, "{}: axis {axis}", self.invariant())
            }
            Violation::RangeNotPositive { row, col, value } => {
                write!(f, "{}: pixel ({row}, {col}) has {value}", self.invariant())
            }
            Violation::NegativeOrNonFinite {
                row, col, value, ..
            } => write!(f, "{}: pixel ({row}, {col}) has {value}", self.invariant()),
        }
    }
}

/// Checks every [`RangeImage`] invariant. Values stored at invalid pixels
/// are never inspected.
pub fn validate_image(img: &RangeImage) -> Vec<Violation> {
    let mut out = Vec::new();
    let g = &img.geometry;
    let expected = (g.height, g.width);
    let dims = [
        ("range", img.range.dims()),
        ("intensity", img.intensity.dims()),
        ("elongation", img.elongation.dims()),
        ("pose_translation", img.pose_translation.dims()),
        ("valid", img.valid.dims()),
    ];
    for (grid, actual) in dims {
        if actual != expected {
            out.push(Violation::DimensionMismatch {
                grid,
                expected,
                actual,
            });
        }
    }
    if !(g.inclination_min.is_finite()
        && g.inclination_max.is_finite()
        && g.inclination_min < g.inclination_max)
    {
        out.push(Violation::InclinationBounds {
            min: g.inclination_min,
            max: g.inclination_max,
        });
    }
    for (axis, v) in img.frame_rotation.iter().enumerate() {
        if !v.is_finite() {
            out.push(Violation::NonFiniteRotation { axis });
        }
    }
    // Pixel checks only make sense once the grids line up.
    if !out
        .iter()
        .any(|v| matches!(v, Violation::DimensionMismatch { .. }))
    {
        for (i, _) in img.valid.as_slice().iter().enumerate().filter(|(_, &v)| v) {
            let (row, col) = img.valid.coords(i);
            let range = img.range.as_slice()[i];
            if !(range.is_finite() && range > 0.0) {
                out.push(Violation::RangeNotPositive {
                    row,
                    col,
                    value: range,
                });
            }
            let [px, py, pz] = img.pose_translation.as_slice()[i];
            let others = [
                (ChannelKind::Intensity, img.intensity.as_slice()[i], true),
                (ChannelKind::Elongation, img.elongation.as_slice()[i], true),
                (ChannelKind::PoseX, px, false),
                (ChannelKind::PoseY, py, false),
                (ChannelKind::PoseZ, pz, false),
            ];
            for (channel, value, non_negative) in others {
                if !value.is_finite() || (non_negative && value < 0.0) {
                    out.push(Violation::NegativeOrNonFinite {
                        channel,
                        row,
                        col,
                        value,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_image() -> RangeImage {
        let geometry = SensorGeometry::with_dims(SensorId::FrontLeft, 3, 4);
        let mut img = RangeImage::empty(geometry, ReturnIndex::First);
        img.range = Grid::from_fn(3, 4, |r, c| 5.0 + r as f64 + 0.1 * c as f64);
        img.intensity = Grid::filled(3, 4, 0.3);
        img.valid = Grid::filled(3, 4, true);
        img
    }

    #[test]
    fn native_geometries() {
        assert_eq!(SensorGeometry::native(SensorId::Top).pixel_count(), 64 * 2650);
        for s in &SensorId::ALL[1..] {
            let g = SensorGeometry::native(*s);
            assert_eq!((g.height, g.width), (116, 150));
            assert!(g.inclination_min < g.inclination_max);
        }
    }

    #[test]
    fn codes_round_trip() {
        for s in SensorId::ALL {
            assert_eq!(SensorId::from_code(s.code()), Some(s));
        }
        assert_eq!(SensorId::from_code(5), None);
        assert_eq!(ReturnIndex::from_code(1), Some(ReturnIndex::Second));
        assert_eq!(ReturnIndex::from_code(2), None);
    }

    #[test]
    fn well_formed_image_has_no_violations() {
        assert!(validate_image(&small_image()).is_empty());
    }

    #[test]
    fn negative_range_is_reported() {
        let mut img = small_image();
        img.range[(1, 2)] = -1.0;
        let v = validate_image(&img);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].invariant(), "range > 0");
        assert!(matches!(v[0], Violation::RangeNotPositive { row: 1, col: 2, .. }));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut img = small_image();
        img.elongation = Grid::filled(3, 5, 0.0);
        let v = validate_image(&img);
        assert_eq!(v.len(), 1);
        assert!(matches!(
            v[0],
            Violation::DimensionMismatch {
                grid: "elongation",
                ..
            }
        ));
        assert!(v[0].to_string().contains("dimensions"));
    }

    #[test]
    fn invalid_pixels_are_ignored() {
        let mut img = small_image();
        img.valid[(0, 0)] = false;
        img.range[(0, 0)] = f64::NAN;
        img.intensity[(0, 0)] = -4.0;
        assert!(validate_image(&img).is_empty());
    }

    #[test]
    fn bad_inclination_and_rotation() {
        let mut img = small_image();
        img.geometry.inclination_min = 0.5;
        img.frame_rotation[2] = f64::INFINITY;
        let v = validate_image(&img);
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn channel_set_get() {
        let mut img = small_image();
        let g = Grid::from_fn(3, 4, |r, c| (r * 4 + c) as f64);
        img.set_channel(ChannelKind::PoseY, &g);
        assert_eq!(img.channel(ChannelKind::PoseY), g);
        assert_eq!(img.pose_translation[(2, 3)], [0.0, 11.0, 0.0]);
    }
}
