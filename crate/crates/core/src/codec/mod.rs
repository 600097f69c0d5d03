//! Lossless range-image compression: quantize, predict from the previous
//! valid pixel, zigzag + varint the residuals, deflate each channel.
//!
//! Frame container (little-endian throughout):
//!
//! ```text
//! "WLRF" | version u8 = 1 | sensor_id u8 | return_index u8 | deflate_level u8
//! | height u16 | width u16 | 6 x step f64 | frame rotation 3 x f64
//! | validity bitmap, ceil(h*w/8) bytes, row-major, LSB-first
//! | 6 x [varint payload_len, raw-deflate(zigzag varint residuals)]
//! ```
//!
//! Channel order is range, intensity, elongation, pose_tx, pose_ty,
//! pose_tz. A channel with no residuals has an empty payload.
//!
//! Archive: `"WLRA" | version u8 = 1 | varint frame_count | frame_count x
//! [varint frame_len, frame bytes]`.

mod archive;
mod frame;
mod predict;
mod stats;
pub mod varint;

pub use archive::{
    archive_frames, decode_archive, encode_archive, split_archive, ArchiveWriter, ARCHIVE_MAGIC,
    ARCHIVE_VERSION,
};
pub use frame::{
    decode_frame, encode_frame, encode_frame_with_level, inspect_frame, pack_bitmap,
    unpack_bitmap, DecodedFrame, FrameHeader, FrameSummary, DEFAULT_DEFLATE_LEVEL, FRAME_MAGIC,
    FRAME_VERSION,
};
pub use predict::{predict_decode, predict_encode, ResidualStream};
pub use stats::{archive_stats, CompressionStats};
pub use varint::{encode_varint, read_varint, unzigzag, write_varint, zigzag, VarintError};

use thiserror::Error;

use crate::range_image::{ChannelKind, QuantizeError, Violation};

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { found: [u8; 4], expected: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated input in section `{section}`")]
    Truncated { section: String },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("validity bitmap has nonzero padding bits")]
    CorruptBitmap,
    #[error("deflate stream for channel {channel} is corrupt: {message}")]
    Deflate {
        channel: ChannelKind,
        message: String,
    },
    #[error("channel {channel} inflates past its {limit}-byte bound")]
    InflatedSizeExceeded { channel: ChannelKind, limit: usize },
    #[error("malformed residual varint in channel {channel}: {source}")]
    ResidualVarint {
        channel: ChannelKind,
        source: VarintError,
    },
    #[error("{}: expected {expected} residuals, found {actual}", channel.map_or("residual stream".to_string(), |c| format!("channel {c}")))]
    ResidualCountMismatch {
        channel: Option<ChannelKind>,
        expected: usize,
        actual: usize,
    },
    #[error("malformed varint in section `{section}`: {source}")]
    Varint {
        section: String,
        source: VarintError,
    },
    #[error("{count} unexpected trailing bytes")]
    TrailingBytes { count: usize },
    #[error("image dimensions {height}x{width} exceed the 65535 container limit")]
    DimensionOverflow { height: usize, width: usize },
    #[error("image fails validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidImage(Vec<Violation>),
    #[error("cannot quantize {what}: {source}")]
    Quantize {
        what: String,
        source: QuantizeError,
    },
    #[error("archive declares {declared} frames but {actual} were written")]
    FrameCountMismatch { declared: u64, actual: u64 },
    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        source: Box<CodecError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CodecError {
    pub(crate) fn truncated(section: impl Into<String>) -> Self {
        CodecError::Truncated {
            section: section.into(),
        }
    }
}
