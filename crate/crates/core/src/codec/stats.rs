use super::archive::split_archive;
use super::frame::{inspect_frame, FrameSummary};
use super::CodecError;
use crate::raw_frame::raw_float_bytes;
use crate::range_image::ChannelKind;

/// Size accounting for an archive against the six-float-plane baseline.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CompressionStats {
    pub frames: u64,
    pub valid_pixels: u64,
    /// 6 channels × 4 bytes × h × w, summed over frames.
    pub raw_bytes: u64,
    /// Whole archive, framing included.
    pub compressed_bytes: u64,
    pub bitmap_bytes: u64,
    /// Compressed payload bytes per channel, container order.
    pub channel_bytes: [u64; 6],
}

impl CompressionStats {
    pub fn ratio(&self) -> f64 {
        self.raw_bytes as f64 / self.compressed_bytes as f64
    }

    pub fn add_frame(&mut self, summary: &FrameSummary) {
        let h = &summary.header;
        self.frames += 1;
        self.valid_pixels += summary.valid_pixels as u64;
        self.raw_bytes += raw_float_bytes(h.height, h.width);
        self.bitmap_bytes += summary.bitmap_bytes as u64;
        for (acc, b) in self.channel_bytes.iter_mut().zip(summary.payload_bytes) {
            *acc += b as u64;
        }
    }

    /// `key=value` lines, channel sizes as `<channel>_bytes`.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("frames".to_string(), self.frames.to_string()),
            ("valid_pixels".into(), self.valid_pixels.to_string()),
            ("raw_bytes".into(), self.raw_bytes.to_string()),
            ("compressed_bytes".into(), self.compressed_bytes.to_string()),
            ("ratio".into(), format!("{:.4}", self.ratio())),
            ("bitmap_bytes".into(), self.bitmap_bytes.to_string()),
        ];
        for kind in ChannelKind::ALL {
            kv.push((format!("{kind}_bytes"), self.channel_bytes[kind.index()].to_string()));
        }
        kv
    }
}

/// Reads every frame header of an archive without inflating payloads.
pub fn archive_stats(bytes: &[u8]) -> Result<CompressionStats, CodecError> {
    let mut stats = CompressionStats {
        compressed_bytes: bytes.len() as u64,
        ..Default::default()
    };
    for (index, frame) in split_archive(bytes)?.into_iter().enumerate() {
        let summary = inspect_frame(frame).map_err(|e| CodecError::Frame {
            index,
            source: Box::new(e),
        })?;
        stats.add_frame(&summary);
    }
    Ok(stats)
}
