use std::io::{Read, Write};
use std::sync::Arc;

use flate2::bufread::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;

use super::predict::{predict_decode, predict_encode, ResidualStream};
use super::varint::{read_varint, unzigzag, write_varint, zigzag, Reader, MAX_VARINT_LEN};
use super::CodecError;
use crate::grid::Grid;
use crate::range_image::{
    dequantize_channel, quantize_channel, quantize_scalar, validate_image, ChannelKind,
    QuantizationProfile, QuantizeError, QuantizedChannel, RangeImage, ReturnIndex, SensorGeometry, SensorId,
};

pub const FRAME_MAGIC: [u8; 4] = *b"WLRF";
pub const FRAME_VERSION: u8 = 1;
pub const DEFAULT_DEFLATE_LEVEL: u8 = 6;

/// magic + version + sensor + return + level + h + w + 6 steps + 3 angles.
const FIXED_HEADER_LEN: usize = 4 + 4 + 2 + 2 + 6 * 8 + 3 * 8;
const MAX_DIM: usize = u16::MAX as usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameHeader {
    pub version: u8,
    pub sensor: SensorId,
    pub return_index: ReturnIndex,
    pub deflate_level: u8,
    pub height: usize,
    pub width: usize,
    /// Quantization step per channel, container order.
    pub steps: [f64; 6],
    /// (yaw, pitch, roll), already snapped to the rotation lattice.
    pub frame_rotation: [f64; 3],
}

impl FrameHeader {
    /// Geometry with the header's dimensions and the sensor's default
    /// inclination bounds.
    pub fn geometry(&self) -> SensorGeometry {
        SensorGeometry::with_dims(self.sensor, self.height, self.width)
    }
}

/// Header plus section sizes, read without inflating any payload.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSummary {
    pub header: FrameHeader,
    pub valid_pixels: usize,
    pub bitmap_bytes: usize,
    pub payload_bytes: [usize; 6],
    pub total_bytes: usize,
}

/// A decoded frame on the quantization lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedFrame {
    pub header: FrameHeader,
    pub mask: Arc<Grid<bool>>,
    pub channels: [QuantizedChannel; 6],
}

impl DecodedFrame {
    pub fn channel(&self, kind: ChannelKind) -> &QuantizedChannel {
        &self.channels[kind.index()]
    }

    /// Dequantizes into a range image. `geometry` supplies inclination bounds
    /// and must match the header's dimensions and sensor.
    pub fn to_range_image(&self, geometry: SensorGeometry) -> Result<RangeImage, CodecError> {
        let h = &self.header;
        if (geometry.sensor, geometry.height, geometry.width) != (h.sensor, h.height, h.width) {
            return Err(CodecError::InvalidHeader(format!(
                "geometry {}x{} ({}) does not match frame {}x{} ({})",
                geometry.height, geometry.width, geometry.sensor, h.height, h.width, h.sensor
            )));
        }
        let mut img = RangeImage::empty(geometry, h.return_index);
        for kind in ChannelKind::ALL {
            img.set_channel(kind, &dequantize_channel(self.channel(kind)));
        }
        img.valid = (*self.mask).clone();
        img.frame_rotation = h.frame_rotation;
        Ok(img)
    }
}

/// Row-major, LSB-first bit packing.
pub fn pack_bitmap(mask: &Grid<bool>) -> Vec<u8> {
    let mut out = vec![0u8; mask.len().div_ceil(8)];
    for (i, _) in mask.as_slice().iter().enumerate().filter(|(_, &v)| v) {
        out[i / 8] |= 1 << (i % 8);
    }
    out
}

/// Inverse of [`pack_bitmap`]. Rejects a wrong length or set padding bits.
pub fn unpack_bitmap(bytes: &[u8], height: usize, width: usize) -> Result<Grid<bool>, CodecError> {
    let n = height * width;
    if bytes.len() != n.div_ceil(8) {
        return Err(CodecError::truncated("validity bitmap"));
    }
    if n % 8 != 0 {
        let last = bytes[bytes.len() - 1];
        if last >> (n % 8) != 0 {
            return Err(CodecError::CorruptBitmap);
        }
    }
    let bits = (0..n).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect();
    Ok(Grid::from_vec(height, width, bits).expect("length matches"))
}

pub fn encode_frame(img: &RangeImage, profile: &QuantizationProfile) -> Result<Vec<u8>, CodecError> {
    encode_frame_with_level(img, profile, DEFAULT_DEFLATE_LEVEL)
}

/// Encodes one frame with an explicit deflate level (0-9). The level is
/// recorded in the header; output bytes are a pure function of the inputs.
pub fn encode_frame_with_level(
    img: &RangeImage,
    profile: &QuantizationProfile,
    level: u8,
) -> Result<Vec<u8>, CodecError> {
    if level > 9 {
        return Err(CodecError::InvalidHeader(format!("deflate level {level} > 9")));
    }
    profile.validate().map_err(|source| CodecError::Quantize {
        what: "profile".into(),
        source,
    })?;
    let violations = validate_image(img);
    if !violations.is_empty() {
        return Err(CodecError::InvalidImage(violations));
    }
    let g = &img.geometry;
    if g.height > MAX_DIM || g.width > MAX_DIM {
        return Err(CodecError::DimensionOverflow {
            height: g.height,
            width: g.width,
        });
    }

    let mut rotation = [0.0; 3];
    for (slot, &angle) in rotation.iter_mut().zip(&img.frame_rotation) {
        let q = quantize_scalar(angle, profile.pose_rotation_step).ok_or_else(|| {
            CodecError::Quantize {
                what: "frame rotation".into(),
                source: QuantizeError::OutOfRange {
                    row: 0,
                    col: 0,
                    value: angle,
                },
            }
        })?;
        *slot = q as f64 * profile.pose_rotation_step;
    }

    let mask = Arc::new(img.valid.clone());
    let bitmap = pack_bitmap(&mask);
    let mut out = Vec::with_capacity(FIXED_HEADER_LEN + bitmap.len() + 64);
    out.extend_from_slice(&FRAME_MAGIC);
    out.extend_from_slice(&[
        FRAME_VERSION,
        g.sensor.code(),
        img.return_index.code(),
        level,
    ]);
    out.extend_from_slice(&(g.height as u16).to_le_bytes());
    out.extend_from_slice(&(g.width as u16).to_le_bytes());
    for step in profile.channel_steps() {
        out.extend_from_slice(&step.to_le_bytes());
    }
    for angle in rotation {
        out.extend_from_slice(&angle.to_le_bytes());
    }
    out.extend_from_slice(&bitmap);

    for kind in ChannelKind::ALL {
        let q = quantize_channel(&img.channel(kind), &mask, profile.step(kind)).map_err(
            |source| CodecError::Quantize {
                what: format!("channel {kind}"),
                source,
            },
        )?;
        let payload = compress_residuals(&predict_encode(&q), level)?;
        write_varint(payload.len() as u64, &mut out);
        out.extend_from_slice(&payload);
    }
    Ok(out)
}

fn compress_residuals(stream: &ResidualStream, level: u8) -> Result<Vec<u8>, CodecError> {
    if stream.residuals.is_empty() {
        return Ok(Vec::new());
    }
    let mut raw = Vec::with_capacity(stream.residuals.len() * 2);
    for &r in &stream.residuals {
        write_varint(zigzag(r), &mut raw);
    }
    let mut enc = DeflateEncoder::new(Vec::with_capacity(raw.len() / 4), Compression::new(level.into()));
    enc.write_all(&raw)?;
    Ok(enc.finish()?)
}

fn inflate_residuals(
    payload: &[u8],
    expected: usize,
    channel: ChannelKind,
) -> Result<ResidualStream, CodecError> {
    if payload.is_empty() {
        return if expected == 0 {
            Ok(ResidualStream::default())
        } else {
            Err(CodecError::ResidualCountMismatch {
                channel: Some(channel),
                expected,
                actual: 0,
            })
        };
    }
    let limit = expected * MAX_VARINT_LEN;
    let mut decoder = DeflateDecoder::new(payload);
    let mut raw = Vec::new();
    (&mut decoder)
        .take(limit as u64 + 1)
        .read_to_end(&mut raw)
        .map_err(|e| CodecError::Deflate {
            channel,
            message: e.to_string(),
        })?;
    if raw.len() > limit {
        return Err(CodecError::InflatedSizeExceeded { channel, limit });
    }
    let leftover = decoder.get_ref().len();
    if leftover != 0 {
        return Err(CodecError::Deflate {
            channel,
            message: format!("{leftover} bytes after end of deflate stream"),
        });
    }

    let mut residuals = Vec::with_capacity(expected);
    let mut rest = raw.as_slice();
    while !rest.is_empty() {
        let (v, n) =
            read_varint(rest).map_err(|source| CodecError::ResidualVarint { channel, source })?;
        residuals.push(unzigzag(v));
        rest = &rest[n..];
    }
    if residuals.len() != expected {
        return Err(CodecError::ResidualCountMismatch {
            channel: Some(channel),
            expected,
            actual: residuals.len(),
        });
    }
    Ok(ResidualStream { residuals })
}

struct ParsedFrame<'a> {
    header: FrameHeader,
    bitmap: &'a [u8],
    payloads: [&'a [u8]; 6],
}

fn parse_frame(bytes: &[u8]) -> Result<ParsedFrame<'_>, CodecError> {
    let mut r = Reader::new(bytes);
    let magic: [u8; 4] = r.array().ok_or_else(|| CodecError::truncated("magic"))?;
    if magic != FRAME_MAGIC {
        return Err(CodecError::BadMagic {
            found: magic,
            expected: FRAME_MAGIC,
        });
    }
    let version = r.u8().ok_or_else(|| CodecError::truncated("header"))?;
    if version != FRAME_VERSION {
        return Err(CodecError::UnsupportedVersion(version));
    }
    let fixed = r
        .take(FIXED_HEADER_LEN - 5)
        .ok_or_else(|| CodecError::truncated("header"))?;
    let mut h = Reader::new(fixed);
    let sensor_code = h.u8().expect("fixed length");
    let return_code = h.u8().expect("fixed length");
    let level = h.u8().expect("fixed length");
    let height = h.u16_le().expect("fixed length") as usize;
    let width = h.u16_le().expect("fixed length") as usize;
    let steps: [f64; 6] = std::array::from_fn(|_| h.f64_le().expect("fixed length"));
    let frame_rotation: [f64; 3] = std::array::from_fn(|_| h.f64_le().expect("fixed length"));

    let sensor = SensorId::from_code(sensor_code)
        .ok_or_else(|| CodecError::InvalidHeader(format!("unknown sensor id {sensor_code}")))?;
    let return_index = ReturnIndex::from_code(return_code)
        .ok_or_else(|| CodecError::InvalidHeader(format!("unknown return index {return_code}")))?;
    if level > 9 {
        return Err(CodecError::InvalidHeader(format!("deflate level {level} > 9")));
    }
    for (kind, step) in ChannelKind::ALL.iter().zip(steps) {
        if !(step.is_finite() && step > 0.0) {
            return Err(CodecError::InvalidHeader(format!("{kind} step {step}")));
        }
    }
    if frame_rotation.iter().any(|a| !a.is_finite()) {
        return Err(CodecError::InvalidHeader("non-finite frame rotation".into()));
    }

    let bitmap = r
        .take((height * width).div_ceil(8))
        .ok_or_else(|| CodecError::truncated("validity bitmap"))?;
    let mut payloads: [&[u8]; 6] = [&[]; 6];
    for (slot, kind) in payloads.iter_mut().zip(ChannelKind::ALL) {
        let len = r.varint().map_err(|source| CodecError::Varint {
            section: format!("{kind} payload length"),
            source,
        })?;
        let len = usize::try_from(len).map_err(|_| CodecError::truncated(format!("{kind} payload")))?;
        *slot = r
            .take(len)
            .ok_or_else(|| CodecError::truncated(format!("{kind} payload")))?;
    }
    if r.remaining() != 0 {
        return Err(CodecError::TrailingBytes {
            count: r.remaining(),
        });
    }
    Ok(ParsedFrame {
        header: FrameHeader {
            version,
            sensor,
            return_index,
            deflate_level: level,
            height,
            width,
            steps,
            frame_rotation,
        },
        bitmap,
        payloads,
    })
}

/// Reads the header and section sizes without inflating payloads.
pub fn inspect_frame(bytes: &[u8]) -> Result<FrameSummary, CodecError> {
    let p = parse_frame(bytes)?;
    let mask = unpack_bitmap(p.bitmap, p.header.height, p.header.width)?;
    Ok(FrameSummary {
        header: p.header,
        valid_pixels: mask.count_true(),
        bitmap_bytes: p.bitmap.len(),
        payload_bytes: p.payloads.map(<[u8]>::len),
        total_bytes: bytes.len(),
    })
}

pub fn decode_frame(bytes: &[u8]) -> Result<DecodedFrame, CodecError> {
    let p = parse_frame(bytes)?;
    let mask = Arc::new(unpack_bitmap(p.bitmap, p.header.height, p.header.width)?);
    let expected = mask.count_true();
    let mut channels = Vec::with_capacity(6);
    for (i, kind) in ChannelKind::ALL.into_iter().enumerate() {
        let stream = inflate_residuals(p.payloads[i], expected, kind)?;
        let q = predict_decode(&stream, &mask, p.header.steps[i]).map_err(|e| match e {
            CodecError::ResidualCountMismatch {
                expected, actual, ..
            } => CodecError::ResidualCountMismatch {
                channel: Some(kind),
                expected,
                actual,
            },
            other => other,
        })?;
        channels.push(q);
    }
    Ok(DecodedFrame {
        header: p.header,
        mask,
        channels: channels.try_into().expect("six channels"),
    })
}
