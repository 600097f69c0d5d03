//! Range image to point cloud conversion.
//!
//! Columns sample azimuth uniformly, starting at +pi on the left edge and
//! sweeping clockwise; rows sample inclination linearly from
//! `inclination_max` at row 0 down to `inclination_min`. Both use pixel
//! centers.

use std::f64::consts::PI;
use std::io::{self, Write};

use thiserror::Error;

use crate::range_image::{validate_image, RangeImage, SensorGeometry, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFrame {
    Sensor,
    World,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
    pub intensity: Vec<f64>,
    pub elongation: Vec<f64>,
    pub frame: CloudFrame,
    /// Row-major index of the pixel each point came from.
    pub source_pixels: Vec<usize>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum PointCloudError {
    #[error("image fails validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidImage(Vec<Violation>),
    #[error("expected a {expected:?}-frame cloud, got {actual:?}")]
    FrameMismatch {
        expected: CloudFrame,
        actual: CloudFrame,
    },
    #[error("cloud point {point} refers to pixel {pixel}, which is not a valid pixel of the image")]
    SourceMismatch { point: usize, pixel: usize },
    #[error("non-finite coordinate at point {0}")]
    NonFinite(usize),
}

/// Azimuth of column `col`, radians.
pub fn column_azimuth(geometry: &SensorGeometry, col: usize) -> f64 {
    PI - (col as f64 + 0.5) * (2.0 * PI / geometry.width as f64)
}

/// Inclination of row `row`, radians; row 0 is the top beam.
pub fn row_inclination(geometry: &SensorGeometry, row: usize) -> f64 {
    let span = geometry.inclination_max - geometry.inclination_min;
    geometry.inclination_max - (row as f64 + 0.5) * span / geometry.height as f64
}

/// Unit ray through the center of pixel (row, col).
pub fn pixel_direction(geometry: &SensorGeometry, row: usize, col: usize) -> [f64; 3] {
    let theta = column_azimuth(geometry, col);
    let phi = row_inclination(geometry, row);
    [phi.cos() * theta.cos(), phi.cos() * theta.sin(), phi.sin()]
}

/// Back-projects every valid pixel into the sensor frame.
pub fn project(img: &RangeImage) -> Result<PointCloud, PointCloudError> {
    let violations = validate_image(img);
    if !violations.is_empty() {
        return Err(PointCloudError::InvalidImage(violations));
    }
    let g = &img.geometry;
    let n = img.valid_count();
    let mut pc = PointCloud {
        points: Vec::with_capacity(n),
        intensity: Vec::with_capacity(n),
        elongation: Vec::with_capacity(n),
        frame: CloudFrame::Sensor,
        source_pixels: Vec::with_capacity(n),
    };
    for (i, _) in img.valid.as_slice().iter().enumerate().filter(|(_, &v)| v) {
        let (row, col) = img.valid.coords(i);
        let r = img.range.as_slice()[i];
        let d = pixel_direction(g, row, col);
        pc.points.push([r * d[0], r * d[1], r * d[2]]);
        pc.intensity.push(img.intensity.as_slice()[i]);
        pc.elongation.push(img.elongation.as_slice()[i]);
        pc.source_pixels.push(i);
    }
    Ok(pc)
}

/// Rotation matrix for (yaw, pitch, roll) composed as Rz * Ry * Rx.
pub fn rotation_matrix([yaw, pitch, roll]: [f64; 3]) -> [[f64; 3]; 3] {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sr, cr) = roll.sin_cos();
    [
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ]
}

fn rotate(m: &[[f64; 3]; 3], p: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2])
}

/// Rotates a sensor-frame cloud by the frame rotation, then translates each
/// point by the vehicle position recorded at its pixel.
pub fn to_world(
    pc: &PointCloud,
    img: &RangeImage,
    frame_rotation: [f64; 3],
) -> Result<PointCloud, PointCloudError> {
    if pc.frame != CloudFrame::Sensor {
        return Err(PointCloudError::FrameMismatch {
            expected: CloudFrame::Sensor,
            actual: pc.frame,
        });
    }
    let m = rotation_matrix(frame_rotation);
    let valid = img.valid.as_slice();
    let poses = img.pose_translation.as_slice();
    let mut points = Vec::with_capacity(pc.len());
    for (point, (&p, &pixel)) in pc.points.iter().zip(&pc.source_pixels).enumerate() {
        if !valid.get(pixel).copied().unwrap_or(false) {
            return Err(PointCloudError::SourceMismatch { point, pixel });
        }
        let r = rotate(&m, p);
        let t = poses[pixel];
        let w = [r[0] + t[0], r[1] + t[1], r[2] + t[2]];
        if w.iter().any(|v| !v.is_finite()) {
            return Err(PointCloudError::NonFinite(point));
        }
        points.push(w);
    }
    Ok(PointCloud {
        points,
        intensity: pc.intensity.clone(),
        elongation: pc.elongation.clone(),
        frame: CloudFrame::World,
        source_pixels: pc.source_pixels.clone(),
    })
}

/// Little-endian records of (x, y, z, intensity) as f32.
pub fn write_binary<W: Write>(pc: &PointCloud, mut out: W) -> io::Result<()> {
    let mut buf = Vec::with_capacity(pc.len() * 16);
    for (p, &i) in pc.points.iter().zip(&pc.intensity) {
        for v in [p[0], p[1], p[2], i] {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out.write_all(&buf)
}

pub fn write_csv<W: Write>(pc: &PointCloud, mut out: W) -> io::Result<()> {
    writeln!(out, "x,y,z,intensity")?;
    for (p, i) in pc.points.iter().zip(&pc.intensity) {
        writeln!(out, "{},{},{},{}", p[0], p[1], p[2], i)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::range_image::{ReturnIndex, SensorId};
    use proptest::prelude::*;

    /// Single row centered on the horizon.
    fn axis_geometry(width: usize) -> SensorGeometry {
        SensorGeometry {
            sensor: SensorId::Top,
            height: 1,
            width,
            inclination_min: -0.1,
            inclination_max: 0.1,
        }
    }

    fn close(a: [f64; 3], b: [f64; 3]) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    fn single_pixel_cloud(width: usize, col: usize, range: f64) -> PointCloud {
        let mut img = RangeImage::empty(axis_geometry(width), ReturnIndex::First);
        img.range = Grid::filled(1, width, range);
        img.valid[(0, col)] = true;
        project(&img).unwrap()
    }

    #[test]
    fn axis_cases() {
        // Width 3, column 1 is centered on azimuth 0; the single row on the
        // horizon.
        let g = axis_geometry(3);
        assert!(column_azimuth(&g, 1).abs() < 1e-15);
        assert_eq!(row_inclination(&g, 0), 0.0);
        let pc = single_pixel_cloud(3, 1, 10.0);
        assert_eq!(pc.len(), 1);
        assert!(close(pc.points[0], [10.0, 0.0, 0.0]));

        // Width 2, column 0 is centered on pi/2.
        let pc = single_pixel_cloud(2, 0, 10.0);
        assert!(close(pc.points[0], [0.0, 10.0, 0.0]));
    }

    #[test]
    fn rows_descend_from_inclination_max() {
        let g = SensorGeometry {
            sensor: SensorId::Top,
            height: 4,
            width: 8,
            inclination_min: -0.4,
            inclination_max: 0.4,
        };
        assert!((row_inclination(&g, 0) - 0.3).abs() < 1e-15);
        assert!((row_inclination(&g, 3) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn quarter_turn_yaw() {
        let mut img = RangeImage::empty(axis_geometry(3), ReturnIndex::First);
        img.range = Grid::filled(1, 3, 1.0);
        img.valid[(0, 1)] = true;
        let pc = project(&img).unwrap();
        let w = to_world(&pc, &img, [PI / 2.0, 0.0, 0.0]).unwrap();
        assert!(close(w.points[0], [0.0, 1.0, 0.0]));
    }

    #[test]
    fn identity_world_transform() {
        let g = SensorGeometry::with_dims(SensorId::SideRight, 2, 3);
        let mut img = RangeImage::empty(g, ReturnIndex::First);
        img.range = Grid::from_fn(2, 3, |r, c| 3.0 + (r + c) as f64);
        img.valid = Grid::from_fn(2, 3, |r, c| r != c);
        let pc = project(&img).unwrap();
        assert_eq!(pc.len(), 4);
        let w = to_world(&pc, &img, [0.0; 3]).unwrap();
        assert_eq!(w.points, pc.points);
        assert_eq!(w.frame, CloudFrame::World);
        assert!(matches!(
            to_world(&w, &img, [0.0; 3]),
            Err(PointCloudError::FrameMismatch { .. })
        ));
    }

    #[test]
    fn translation_is_per_pixel() {
        let g = SensorGeometry::with_dims(SensorId::SideRight, 1, 2);
        let mut img = RangeImage::empty(g, ReturnIndex::First);
        img.range = Grid::filled(1, 2, 1.0);
        img.valid = Grid::filled(1, 2, true);
        img.pose_translation = Grid::from_vec(1, 2, vec![[1.0, 0.0, 0.0], [0.0, 0.0, 5.0]]).unwrap();
        let pc = project(&img).unwrap();
        let w = to_world(&pc, &img, [0.0; 3]).unwrap();
        assert!(close(w.points[0], [pc.points[0][0] + 1.0, pc.points[0][1], pc.points[0][2]]));
        assert!(close(w.points[1], [pc.points[1][0], pc.points[1][1], pc.points[1][2] + 5.0]));
    }

    #[test]
    fn source_mismatch_is_rejected() {
        let g = SensorGeometry::with_dims(SensorId::SideRight, 1, 2);
        let mut img = RangeImage::empty(g, ReturnIndex::First);
        img.range = Grid::filled(1, 2, 1.0);
        img.valid = Grid::filled(1, 2, true);
        let pc = project(&img).unwrap();
        img.valid[(0, 1)] = false;
        assert!(matches!(
            to_world(&pc, &img, [0.0; 3]),
            Err(PointCloudError::SourceMismatch { point: 1, pixel: 1 })
        ));
    }

    #[test]
    fn rotation_is_zyx() {
        let (y, p, r) = (0.3, -0.2, 0.7);
        let rz = rotation_matrix([y, 0.0, 0.0]);
        let ry = rotation_matrix([0.0, p, 0.0]);
        let rx = rotation_matrix([0.0, 0.0, r]);
        let v = [0.4, -1.3, 2.2];
        let composed = rotate(&rz, rotate(&ry, rotate(&rx, v)));
        assert!(close(rotate(&rotation_matrix([y, p, r]), v), composed));
        // Pitch about +y takes +x toward -z.
        assert!(close(rotate(&ry, [1.0, 0.0, 0.0]), [p.cos(), 0.0, -p.sin()]));
    }

    #[test]
    fn exports() {
        let g = SensorGeometry::with_dims(SensorId::SideRight, 1, 2);
        let mut img = RangeImage::empty(g, ReturnIndex::First);
        img.range = Grid::filled(1, 2, 2.0);
        img.intensity = Grid::filled(1, 2, 0.5);
        img.valid = Grid::filled(1, 2, true);
        let pc = project(&img).unwrap();
        let mut bin = Vec::new();
        write_binary(&pc, &mut bin).unwrap();
        assert_eq!(bin.len(), 32);
        assert_eq!(f32::from_le_bytes(bin[12..16].try_into().unwrap()), 0.5);
        let mut csv = Vec::new();
        write_csv(&pc, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("x,y,z,intensity\n"));
    }

    proptest! {
        #[test]
        fn norm_matches_range(ranges in prop::collection::vec(0.1f64..200.0, 12), mask in prop::collection::vec(any::<bool>(), 12)) {
            let g = SensorGeometry::with_dims(SensorId::FrontLeft, 3, 4);
            let mut img = RangeImage::empty(g, ReturnIndex::First);
            img.range = Grid::from_vec(3, 4, ranges).unwrap();
            img.valid = Grid::from_vec(3, 4, mask).unwrap();
            let pc = project(&img).unwrap();
            prop_assert_eq!(pc.len(), img.valid_count());
            for (p, &i) in pc.points.iter().zip(&pc.source_pixels) {
                let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                let r = img.range.as_slice()[i];
                prop_assert!((norm - r).abs() <= 1e-9 * r);
            }
        }

        #[test]
        fn rigid_motion_preserves_distances(
            pts in prop::collection::vec((0.5f64..80.0, any::<bool>()), 8),
            rot in (-PI..PI, -0.5f64..0.5, -0.5f64..0.5),
            t in (-100.0f64..100.0, -100.0f64..100.0, -5.0f64..5.0),
        ) {
            let g = SensorGeometry::with_dims(SensorId::Top, 2, 4);
            let mut img = RangeImage::empty(g, ReturnIndex::First);
            img.range = Grid::from_vec(2, 4, pts.iter().map(|p| p.0).collect()).unwrap();
            img.valid = Grid::from_vec(2, 4, pts.iter().map(|p| p.1).collect()).unwrap();
            img.pose_translation = Grid::filled(2, 4, [t.0, t.1, t.2]);
            let pc = project(&img).unwrap();
            let w = to_world(&pc, &img, [rot.0, rot.1, rot.2]).unwrap();
            let dist = |a: [f64; 3], b: [f64; 3]| ((a[0]-b[0]).powi(2) + (a[1]-b[1]).powi(2) + (a[2]-b[2]).powi(2)).sqrt();
            for i in 0..pc.len() {
                for j in i + 1..pc.len() {
                    let d0 = dist(pc.points[i], pc.points[j]);
                    let d1 = dist(w.points[i], w.points[j]);
                    prop_assert!((d0 - d1).abs() <= 1e-9 * d0.max(1.0));
                }
            }
        }
    }
}
