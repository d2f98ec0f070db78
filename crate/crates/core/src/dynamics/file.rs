//! Binary feature file: one channel's assembled feature matrix with enough
//! header to rebuild epoch timing. Values are stored as f32; the cepstral
//! pipeline has nowhere near 24 significant bits of real precision.
//!
//! Layout, all little-endian:
//!   magic  8 bytes  "FEATv1\0\0"
//!   u32    feature dimension
//!   u32    frame count
//!   u32    feature system id
//!   f64    frame period in seconds
//!   u32    channel name byte length, then that many UTF-8 bytes
//!   f32 x (frames x dim), row-major

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"FEATv1\0\0";

/// One channel's features plus the header fields.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub system_id: u32,
    pub frame_period: f64,
    pub channel_name: String,
    /// Row-major frames; every row has the same length.
    pub frames: Vec<Vec<f32>>,
}

impl FeatureRecord {
    pub fn dim(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::EmptySignal);
        }
        let dim = self.frames[0].len();
        if dim == 0 {
            return Err(Error::InvalidSpec("feature dimension is zero".into()));
        }
        for row in &self.frames {
            if row.len() != dim {
                return Err(Error::DimMismatch {
                    got: row.len(),
                    expected: dim,
                });
            }
        }
        if !(self.frame_period > 0.0) {
            return Err(Error::InvalidSpec("frame period must be positive".into()));
        }
        Ok(())
    }
}

pub fn write_features(path: &Path, record: &FeatureRecord) -> Result<()> {
    record.validate()?;
    let dim = record.dim();
    let name = record.channel_name.as_bytes();
    let mut bytes = Vec::with_capacity(8 + 4 * 3 + 8 + 4 + name.len() + record.frames.len() * dim * 4);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(dim as u32).to_le_bytes());
    bytes.extend_from_slice(&(record.frames.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&record.system_id.to_le_bytes());
    bytes.extend_from_slice(&record.frame_period.to_le_bytes());
    bytes.extend_from_slice(&(name.len() as u32).to_le_bytes());
    bytes.extend_from_slice(name);
    for row in &record.frames {
        for &v in row {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_features(path: &Path) -> Result<FeatureRecord> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cursor = Cursor {
        bytes: &bytes,
        pos: 0,
        path,
    };
    let magic = cursor.take(8)?;
    if magic != MAGIC {
        return Err(Error::format(path, "bad magic; not a feature file"));
    }
    let dim = cursor.u32()? as usize;
    let frame_count = cursor.u32()? as usize;
    let system_id = cursor.u32()?;
    let frame_period = cursor.f64()?;
    let name_len = cursor.u32()? as usize;
    let name_bytes = cursor.take(name_len)?;
    let channel_name = std::str::from_utf8(name_bytes)
        .map_err(|_| Error::format(path, "channel name is not UTF-8"))?
        .to_string();
    if dim == 0 {
        return Err(Error::format(path, "feature dimension is zero"));
    }

    let expected = frame_count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format(path, "frame count overflows"))?;
    let remaining = bytes.len() - cursor.pos;
    if remaining != expected {
        return Err(Error::format(
            path,
            format!(
                "expected {expected} bytes of features ({frame_count} x {dim}), found {remaining}"
            ),
        ));
    }
    let mut frames = Vec::with_capacity(frame_count);
    for _ in 0..frame_count {
        let row = cursor.take(dim * 4)?;
        frames.push(
            row.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        );
    }
    Ok(FeatureRecord {
        system_id,
        frame_period,
        channel_name,
        frames,
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::format(
                self.path,
                format!("truncated at byte {}", self.bytes.len()),
            ));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes([
            b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7],
        ]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record() -> FeatureRecord {
        FeatureRecord {
            system_id: 5,
            frame_period: 0.1,
            channel_name: "FP1-F7".into(),
            frames: (0..17)
                .map(|t| (0..9).map(|j| (t * 9 + j) as f32 * 0.25 - 3.0).collect())
                .collect(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chan.feat");
        let record = sample_record();
        write_features(&path, &record).unwrap();
        let back = read_features(&path).unwrap();
        assert_eq!(back, record);
        for (a, b) in back.frames.iter().flatten().zip(record.frames.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn round_trip_preserves_specials() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chan.feat");
        let record = FeatureRecord {
            system_id: 1,
            frame_period: 0.1,
            channel_name: String::new(),
            frames: vec![vec![f32::MIN_POSITIVE, -0.0, 1e30, f32::EPSILON]],
        };
        write_features(&path, &record).unwrap();
        let back = read_features(&path).unwrap();
        for (a, b) in back.frames[0].iter().zip(&record.frames[0]) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.feat");
        std::fs::write(&path, b"NOTAFEAT0123456789").unwrap();
        let err = read_features(&path).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cut.feat");
        write_features(&path, &sample_record()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        let err = read_features(&path).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
    }

    #[test]
    fn truncated_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cut.feat");
        std::fs::write(&path, &MAGIC[..]).unwrap();
        assert!(read_features(&path).is_err());
    }

    #[test]
    fn ragged_rows_are_rejected_on_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.feat");
        let record = FeatureRecord {
            system_id: 1,
            frame_period: 0.1,
            channel_name: "x".into(),
            frames: vec![vec![1.0, 2.0], vec![3.0]],
        };
        assert!(matches!(
            write_features(&path, &record),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn header_fields_survive() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hdr.feat");
        let mut record = sample_record();
        record.system_id = 16;
        record.frame_period = 0.05;
        record.channel_name = "T3-REF".into();
        write_features(&path, &record).unwrap();
        let back = read_features(&path).unwrap();
        assert_eq!(back.system_id, 16);
        assert_eq!(back.frame_period, 0.05);
        assert_eq!(back.channel_name, "T3-REF");
        assert_eq!(back.dim(), 9);
        assert_eq!(back.frames.len(), 17);
    }
}
