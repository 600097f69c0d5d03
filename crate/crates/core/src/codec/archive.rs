use std::io::Write;

use rayon::prelude::*;

use super::frame::{decode_frame, encode_frame_with_level, DecodedFrame};
use super::varint::{write_varint, Reader};
use super::CodecError;
use crate::parallel::with_workers;
use crate::range_image::{QuantizationProfile, RangeImage};

pub const ARCHIVE_MAGIC: [u8; 4] = *b"WLRA";
pub const ARCHIVE_VERSION: u8 = 1;

/// Streams frames into an archive whose frame count is fixed up front.
pub struct ArchiveWriter<W: Write> {
    inner: W,
    declared: u64,
    written: u64,
    bytes: u64,
}

impl<W: Write> ArchiveWriter<W> {
    pub fn new(mut inner: W, frame_count: u64) -> Result<Self, CodecError> {
        let mut head = ARCHIVE_MAGIC.to_vec();
        head.push(ARCHIVE_VERSION);
        write_varint(frame_count, &mut head);
        inner.write_all(&head)?;
        Ok(Self {
            inner,
            declared: frame_count,
            written: 0,
            bytes: head.len() as u64,
        })
    }

    pub fn push(&mut self, frame: &[u8]) -> Result<(), CodecError> {
        if self.written == self.declared {
            return Err(CodecError::FrameCountMismatch {
                declared: self.declared,
                actual: self.written + 1,
            });
        }
        let mut len = Vec::with_capacity(10);
        write_varint(frame.len() as u64, &mut len);
        self.inner.write_all(&len)?;
        self.inner.write_all(frame)?;
        self.written += 1;
        self.bytes += (len.len() + frame.len()) as u64;
        Ok(())
    }

    /// Bytes written so far, including the archive header.
    pub fn bytes_written(&self) -> u64 {
        self.bytes
    }

    pub fn finish(mut self) -> Result<W, CodecError> {
        if self.written != self.declared {
            return Err(CodecError::FrameCountMismatch {
                declared: self.declared,
                actual: self.written,
            });
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Wraps already-encoded frames into an archive.
pub fn archive_frames<B: AsRef<[u8]>>(frames: &[B]) -> Vec<u8> {
    let mut w = ArchiveWriter::new(Vec::new(), frames.len() as u64).expect("Vec write");
    for f in frames {
        w.push(f.as_ref()).expect("Vec write");
    }
    w.finish().expect("count matches")
}

/// Encodes frames on `workers` threads; output order is input order, so
/// the archive bytes do not depend on the worker count.
pub fn encode_archive(
    frames: &[RangeImage],
    profile: &QuantizationProfile,
    level: u8,
    workers: usize,
) -> Result<Vec<u8>, CodecError> {
    let encoded: Vec<Vec<u8>> = with_workers(workers, || {
        frames
            .par_iter()
            .enumerate()
            .map(|(index, img)| {
                encode_frame_with_level(img, profile, level).map_err(|e| CodecError::Frame {
                    index,
                    source: Box::new(e),
                })
            })
            .collect::<Result<_, _>>()
    })?;
    Ok(archive_frames(&encoded))
}

/// Splits an archive into its frame byte ranges without decoding them.
pub fn split_archive(bytes: &[u8]) -> Result<Vec<&[u8]>, CodecError> {
    let mut r = Reader::new(bytes);
    let magic: [u8; 4] = r
        .array()
        .ok_or_else(|| CodecError::truncated("archive magic"))?;
    if magic != ARCHIVE_MAGIC {
        return Err(CodecError::BadMagic {
            found: magic,
            expected: ARCHIVE_MAGIC,
        });
    }
    let version = r
        .u8()
        .ok_or_else(|| CodecError::truncated("archive header"))?;
    if version != ARCHIVE_VERSION {
        return Err(CodecError::UnsupportedVersion(version));
    }
    let count = r.varint().map_err(|source| CodecError::Varint {
        section: "archive frame count".into(),
        source,
    })?;
    // Every frame needs at least one length byte.
    if count > r.remaining() as u64 {
        return Err(CodecError::truncated("archive frame table"));
    }
    let mut frames = Vec::with_capacity(count as usize);
    for index in 0..count as usize {
        let len = r.varint().map_err(|source| CodecError::Frame {
            index,
            source: Box::new(CodecError::Varint {
                section: "frame length".into(),
                source,
            }),
        })?;
        let frame = usize::try_from(len)
            .ok()
            .and_then(|len| r.take(len))
            .ok_or_else(|| CodecError::Frame {
                index,
                source: Box::new(CodecError::truncated("frame bytes")),
            })?;
        frames.push(frame);
    }
    if r.remaining() != 0 {
        return Err(CodecError::TrailingBytes {
            count: r.remaining(),
        });
    }
    Ok(frames)
}

pub fn decode_archive(bytes: &[u8], workers: usize) -> Result<Vec<DecodedFrame>, CodecError> {
    let frames = split_archive(bytes)?;
    with_workers(workers, || {
        frames
            .par_iter()
            .enumerate()
            .map(|(index, f)| {
                decode_frame(f).map_err(|e| CodecError::Frame {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::encode_frame;
    use crate::grid::Grid;
    use crate::range_image::{ReturnIndex, SensorGeometry, SensorId};

    fn frames(n: usize) -> Vec<RangeImage> {
        (0..n)
            .map(|i| {
                let g = SensorGeometry::with_dims(SensorId::FrontRight, 3, 4);
                let mut img = RangeImage::empty(g, ReturnIndex::First);
                img.range = Grid::from_fn(3, 4, |r, c| 1.0 + (i + r + c) as f64);
                img.valid = Grid::filled(3, 4, true);
                img
            })
            .collect()
    }

    #[test]
    fn archive_layout_and_round_trip() {
        let imgs = frames(3);
        let p = QuantizationProfile::default();
        let bytes = encode_archive(&imgs, &p, 6, 2).unwrap();
        assert_eq!(&bytes[..4], b"WLRA");
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes[5], 3);
        let parts = split_archive(&bytes).unwrap();
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[1], encode_frame(&imgs[1], &p).unwrap().as_slice());
        assert_eq!(decode_archive(&bytes, 1).unwrap().len(), 3);
    }

    #[test]
    fn worker_count_does_not_change_bytes() {
        let imgs = frames(9);
        let p = QuantizationProfile::default();
        let one = encode_archive(&imgs, &p, 6, 1).unwrap();
        let many = encode_archive(&imgs, &p, 6, 4).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn frame_errors_carry_index() {
        let imgs = frames(2);
        let p = QuantizationProfile::default();
        let mut bytes = encode_archive(&imgs, &p, 6, 1).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xff;
        match decode_archive(&bytes, 1) {
            Err(CodecError::Frame { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        let mut bad = imgs.clone();
        bad[1].range[(0, 0)] = f64::NAN;
        assert!(matches!(
            encode_archive(&bad, &p, 6, 1),
            Err(CodecError::Frame { index: 1, .. })
        ));
    }

    #[test]
    fn writer_enforces_count() {
        let mut w = ArchiveWriter::new(Vec::new(), 1).unwrap();
        w.push(b"x").unwrap();
        assert!(w.push(b"y").is_err());
        let w = ArchiveWriter::new(Vec::new(), 2).unwrap();
        assert!(matches!(
            w.finish(),
            Err(CodecError::FrameCountMismatch { declared: 2, actual: 0 })
        ));
    }

    #[test]
    fn empty_archive() {
        let bytes = archive_frames::<Vec<u8>>(&[]);
        assert_eq!(bytes, b"WLRA\x01\x00");
        assert!(decode_archive(&bytes, 1).unwrap().is_empty());
    }

    #[test]
    fn truncated_archive_sections() {
        assert!(matches!(split_archive(b"WL"), Err(CodecError::Truncated { .. })));
        assert!(matches!(split_archive(b"WLRA\x02\x00"), Err(CodecError::UnsupportedVersion(2))));
        assert!(matches!(split_archive(b"WLRA\x01\x05\x00"), Err(CodecError::Truncated { .. })));
        assert!(matches!(
            split_archive(b"WLRA\x01\x01\x05ab"),
            Err(CodecError::Frame { index: 0, .. })
        ));
    }
}
