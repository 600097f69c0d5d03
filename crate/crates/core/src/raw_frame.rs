//! Uncompressed frame interchange format (`.wlrr`), the input to
//! compression and the output of decompression.
//!
//! ```text
//! "WLRR" | version u8 = 1 | sensor_id u8 | return_index u8 | reserved u8 = 0
//! | height u16 | width u16 | inclination_min f64 | inclination_max f64
//! | frame rotation 3 x f64 (yaw, pitch, roll)
//! | 6 planes of h*w f32 (range, intensity, elongation, pose_tx, pose_ty, pose_tz)
//! | validity bitmap, ceil(h*w/8) bytes, row-major, LSB-first
//! ```
//!
//! All multi-byte fields are little-endian.

use crate::codec::varint::Reader;
use crate::codec::{pack_bitmap, unpack_bitmap, CodecError};
use crate::grid::Grid;
use crate::range_image::{ChannelKind, RangeImage, ReturnIndex, SensorGeometry, SensorId};

pub const RAW_MAGIC: [u8; 4] = *b"WLRR";
pub const RAW_VERSION: u8 = 1;
pub const RAW_EXTENSION: &str = "wlrr";

const HEADER_LEN: usize = 4 + 4 + 2 + 2 + 2 * 8 + 3 * 8;

/// Size of the float-plane baseline used for compression ratios:
/// six 32-bit channels per pixel.
pub fn raw_float_bytes(height: usize, width: usize) -> u64 {
    6 * 4 * (height * width) as u64
}

pub fn write_raw_frame(img: &RangeImage) -> Result<Vec<u8>, CodecError> {
    let g = &img.geometry;
    if g.height > u16::MAX as usize || g.width > u16::MAX as usize {
        return Err(CodecError::DimensionOverflow {
            height: g.height,
            width: g.width,
        });
    }
    let n = g.pixel_count();
    let mut out = Vec::with_capacity(HEADER_LEN + 24 * n + n.div_ceil(8));
    out.extend_from_slice(&RAW_MAGIC);
    out.extend_from_slice(&[RAW_VERSION, g.sensor.code(), img.return_index.code(), 0]);
    out.extend_from_slice(&(g.height as u16).to_le_bytes());
    out.extend_from_slice(&(g.width as u16).to_le_bytes());
    out.extend_from_slice(&g.inclination_min.to_le_bytes());
    out.extend_from_slice(&g.inclination_max.to_le_bytes());
    for a in img.frame_rotation {
        out.extend_from_slice(&a.to_le_bytes());
    }
    for kind in ChannelKind::ALL {
        for &v in img.channel(kind).as_slice() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out.extend_from_slice(&pack_bitmap(&img.valid));
    Ok(out)
}

pub fn read_raw_frame(bytes: &[u8]) -> Result<RangeImage, CodecError> {
    let mut r = Reader::new(bytes);
    let magic: [u8; 4] = r.array().ok_or_else(|| CodecError::truncated("magic"))?;
    if magic != RAW_MAGIC {
        return Err(CodecError::BadMagic {
            found: magic,
            expected: RAW_MAGIC,
        });
    }
    let header = r
        .take(HEADER_LEN - 4)
        .ok_or_else(|| CodecError::truncated("header"))?;
    let mut h = Reader::new(header);
    let version = h.u8().expect("fixed length");
    if version != RAW_VERSION {
        return Err(CodecError::UnsupportedVersion(version));
    }
    let sensor_code = h.u8().expect("fixed length");
    let return_code = h.u8().expect("fixed length");
    let _reserved = h.u8();
    let height = h.u16_le().expect("fixed length") as usize;
    let width = h.u16_le().expect("fixed length") as usize;
    let inclination_min = h.f64_le().expect("fixed length");
    let inclination_max = h.f64_le().expect("fixed length");
    let frame_rotation: [f64; 3] = std::array::from_fn(|_| h.f64_le().expect("fixed length"));

    let sensor = SensorId::from_code(sensor_code)
        .ok_or_else(|| CodecError::InvalidHeader(format!("unknown sensor id {sensor_code}")))?;
    let return_index = ReturnIndex::from_code(return_code)
        .ok_or_else(|| CodecError::InvalidHeader(format!("unknown return index {return_code}")))?;
    let geometry = SensorGeometry {
        sensor,
        height,
        width,
        inclination_min,
        inclination_max,
    };
    let n = height * width;
    let mut img = RangeImage::empty(geometry, return_index);
    img.frame_rotation = frame_rotation;
    for kind in ChannelKind::ALL {
        let plane = r
            .take(4 * n)
            .ok_or_else(|| CodecError::truncated(format!("{kind} plane")))?;
        let values = plane
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("chunk of 4")) as f64)
            .collect();
        img.set_channel(kind, &Grid::from_vec(height, width, values).expect("length matches"));
    }
    let bitmap = r
        .take(n.div_ceil(8))
        .ok_or_else(|| CodecError::truncated("validity bitmap"))?;
    img.valid = unpack_bitmap(bitmap, height, width)?;
    if r.remaining() != 0 {
        return Err(CodecError::TrailingBytes {
            count: r.remaining(),
        });
    }
    Ok(img)
}
