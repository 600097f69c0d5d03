use wlkit::codec::{decode_frame, encode_frame};
use wlkit::pointcloud::{project, to_world};
use wlkit::range_image::{QuantizationProfile, ReturnIndex, SensorGeometry, SensorId};
use wlkit::synth::{frame_seed, street_scene};

/// Quantization error propagates to at most half a range step per point in
/// the sensor frame, plus half a pose step per axis in the world frame.
#[test]
fn quantization_error_propagates_boundedly() {
    let profile = QuantizationProfile::default();
    let sensor_bound = profile.range_step / 2.0 + 1e-9;
    let world_bound = sensor_bound + 3f64.sqrt() * profile.pose_translation_step / 2.0;
    for (i, sensor) in SensorId::ALL.into_iter().enumerate() {
        let g = SensorGeometry::native(sensor);
        let img = street_scene(frame_seed(77, i as u64), g, ReturnIndex::First);
        let back = decode_frame(&encode_frame(&img, &profile).unwrap())
            .unwrap()
            .to_range_image(g)
            .unwrap();
        let (a, b) = (project(&img).unwrap(), project(&back).unwrap());
        assert_eq!(a.source_pixels, b.source_pixels);
        for (p, q) in a.points.iter().zip(&b.points) {
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
            assert!(d <= sensor_bound, "{sensor}: sensor-frame error {d}");
        }
        let wa = to_world(&a, &img, img.frame_rotation).unwrap();
        let wb = to_world(&b, &back, back.frame_rotation).unwrap();
        for (p, q) in wa.points.iter().zip(&wb.points) {
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
            assert!(d <= world_bound, "{sensor}: world-frame error {d}");
        }
    }
}
