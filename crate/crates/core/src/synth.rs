//! Seeded synthetic range images: piecewise-smooth street scenes for codec
//! benchmarking and unstructured random frames for round-trip testing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::grid::Grid;
use crate::pointcloud::pixel_direction;
use crate::range_image::{RangeImage, ReturnIndex, SensorGeometry, SensorId};

const MAX_RANGE: f64 = 75.0;
const SWEEP_SECONDS: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
struct Box3 {
    min: [f64; 3],
    max: [f64; 3],
    intensity: f64,
    elongation: f64,
}

impl Box3 {
    /// Distance along a unit ray from `origin` to the box, if hit ahead.
    fn hit(&self, origin: [f64; 3], dir: [f64; 3]) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for i in 0..3 {
            if dir[i].abs() < 1e-12 {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let a = (self.min[i] - origin[i]) / dir[i];
            let b = (self.max[i] - origin[i]) / dir[i];
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
        (t0 <= t1 && t0 > 0.0).then_some(t0)
    }
}

fn mount_height(sensor: SensorId) -> f64 {
    match sensor {
        SensorId::Top => 2.0,
        _ => 0.8,
    }
}

/// Snaps an angle onto the 1 mrad rotation lattice.
fn lattice_angle(rng: &mut ChaCha8Rng, limit: f64) -> f64 {
    let k = rng.random_range(-(limit * 1000.0) as i64..=(limit * 1000.0) as i64);
    k as f64 * 0.001
}

/// A street scene: ground plane, parked cars and building walls seen from a
/// moving vehicle, with range noise and random dropouts. Deterministic in
/// `seed`.
pub fn street_scene(seed: u64, geometry: SensorGeometry, return_index: ReturnIndex) -> RangeImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = [0.0, 0.0, 0.0];
    let ground_z = -mount_height(geometry.sensor);

    let mut boxes = Vec::new();
    for side in [-1.0f64, 1.0] {
        let offset = rng.random_range(8.0..16.0);
        let (y0, y1) = if side > 0.0 {
            (offset, offset + 3.0)
        } else {
            (-offset - 3.0, -offset)
        };
        boxes.push(Box3 {
            min: [-60.0, y0, ground_z],
            max: [60.0, y1, ground_z + rng.random_range(6.0..20.0)],
            intensity: rng.random_range(0.2..0.6),
            elongation: 0.1,
        });
    }
    for _ in 0..rng.random_range(6..16) {
        let cx: f64 = rng.random_range(-40.0..40.0);
        let cy: f64 = rng.random_range(-7.0..7.0);
        if cx.abs() < 4.0 && cy.abs() < 2.5 {
            continue;
        }
        let (lx, ly, hz) = (
            rng.random_range(3.5..5.5),
            rng.random_range(1.6..2.2),
            rng.random_range(1.4..2.2),
        );
        boxes.push(Box3 {
            min: [cx - lx / 2.0, cy - ly / 2.0, ground_z],
            max: [cx + lx / 2.0, cy + ly / 2.0, ground_z + hz],
            intensity: rng.random_range(0.05..0.9),
            elongation: rng.random_range(0..4) as f64 * 0.02,
        });
    }

    let yaw = lattice_angle(&mut rng, 3.14);
    let speed = rng.random_range(0.0..15.0);
    let start = [
        rng.random_range(-200.0..200.0),
        rng.random_range(-200.0..200.0),
        rng.random_range(-2.0..2.0),
    ];
    let range_noise = Normal::new(0.0, 0.01).expect("valid sigma");
    let attr_noise = Normal::new(0.0, 0.01).expect("valid sigma");
    let dropout = 0.03;

    let (h, w) = (geometry.height, geometry.width);
    let mut img = RangeImage::empty(geometry, return_index);
    img.frame_rotation = [yaw, lattice_angle(&mut rng, 0.02), lattice_angle(&mut rng, 0.02)];
    let directions: Vec<[f64; 3]> = (0..h * w).map(|i| pixel_direction(&geometry, i / w, i % w)).collect();

    for i in 0..h * w {
        let dir = directions[i];
        let mut best: Option<(f64, f64, f64, bool)> = None;
        if dir[2] < -1e-9 {
            let t = ground_z / dir[2];
            best = Some((t, 0.12, 0.0, false));
        }
        for b in &boxes {
            if let Some(t) = b.hit(origin, dir) {
                if best.is_none_or(|(bt, ..)| t < bt) {
                    best = Some((t, b.intensity, b.elongation, true));
                }
            }
        }
        let Some((mut t, intensity, elongation, is_object)) = best else {
            continue;
        };
        if return_index == ReturnIndex::Second {
            // Sparse second returns, only from objects.
            if !is_object || !rng.random_bool(0.08) {
                continue;
            }
            t += rng.random_range(0.5..5.0);
        }
        if t > MAX_RANGE || rng.random_bool(dropout) {
            continue;
        }
        let col = i % w;
        let time = col as f64 / w as f64 * SWEEP_SECONDS;
        img.valid.as_mut_slice()[i] = true;
        img.range.as_mut_slice()[i] = (t + range_noise.sample(&mut rng)).max(0.05);
        img.intensity.as_mut_slice()[i] = (intensity + attr_noise.sample(&mut rng)).max(0.0);
        img.elongation.as_mut_slice()[i] = elongation;
        img.pose_translation.as_mut_slice()[i] = [
            start[0] + speed * time * yaw.cos(),
            start[1] + speed * time * yaw.sin(),
            start[2],
        ];
    }
    img
}

/// Unstructured frame: random mask density, values drawn uniformly over
/// wide ranges. Meant to stress the codec, not to compress well.
pub fn random_frame(seed: u64, geometry: SensorGeometry, return_index: ReturnIndex) -> RangeImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = (geometry.height, geometry.width);
    let density: f64 = rng.random_range(0.0..=1.0);
    let mut img = RangeImage::empty(geometry, return_index);
    img.valid = Grid::from_fn(h, w, |_, _| rng.random_bool(density));
    img.range = Grid::from_fn(h, w, |_, _| rng.random_range(0.01..300.0));
    img.intensity = Grid::from_fn(h, w, |_, _| rng.random_range(0.0..60.0));
    img.elongation = Grid::from_fn(h, w, |_, _| rng.random_range(0.0..3.0));
    img.pose_translation = Grid::from_fn(h, w, |_, _| {
        [
            rng.random_range(-800.0..800.0),
            rng.random_range(-800.0..800.0),
            rng.random_range(-50.0..50.0),
        ]
    });
    img.frame_rotation = [
        rng.random_range(-3.14..3.14),
        rng.random_range(-0.5..0.5),
        rng.random_range(-0.5..0.5),
    ];
    img
}

/// Seed of frame `index` in a corpus generated from `seed` (splitmix64).
pub fn frame_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Every pixel valid and every channel constant.
pub fn constant_frame(geometry: SensorGeometry, return_index: ReturnIndex) -> RangeImage {
    let (h, w) = (geometry.height, geometry.width);
    let mut img = RangeImage::empty(geometry, return_index);
    img.valid = Grid::filled(h, w, true);
    img.range = Grid::filled(h, w, 12.5);
    img.intensity = Grid::filled(h, w, 0.4);
    img.elongation = Grid::filled(h, w, 0.02);
    img.pose_translation = Grid::filled(h, w, [10.0, -4.0, 0.3]);
    img
}
