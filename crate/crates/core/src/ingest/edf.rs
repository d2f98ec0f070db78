//! Minimal EDF reader: continuous records, 16-bit little-endian samples,
//! fixed-width ASCII header fields.
//!
//! The layout is the public EDF one: a 256-byte fixed header followed by
//! 256 bytes of per-signal header fields (each field stored for all signals
//! consecutively), then data records of interleaved per-signal sample
//! blocks. Annotation channels are skipped; EDF+ discontinuities are not
//! supported.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{Channel, SignalRecord};

const FIXED_HEADER_LEN: usize = 256;
const PER_SIGNAL_HEADER_LEN: usize = 256;

struct SignalHeader {
    label: String,
    physical_min: f64,
    physical_max: f64,
    digital_min: i32,
    digital_max: i32,
    samples_per_record: usize,
}

/// Read an EDF file into a [`SignalRecord`], converting samples to physical
/// units (microvolts for EEG signals).
pub fn read_edf_signal(path: impl AsRef<Path>) -> Result<SignalRecord> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;

    if bytes.len() < FIXED_HEADER_LEN {
        return Err(Error::format(
            path,
            format!(
                "truncated header: {} bytes, fixed header needs {FIXED_HEADER_LEN}",
                bytes.len()
            ),
        ));
    }

    let field = |offset: usize, len: usize| -> Result<&str> {
        let raw = bytes.get(offset..offset + len).ok_or_else(|| {
            Error::format(path, format!("truncated header at byte {offset}"))
        })?;
        std::str::from_utf8(raw)
            .map(str::trim)
            .map_err(|_| Error::format(path, format!("non-ASCII header field at byte {offset}")))
    };

    let version = &bytes[0..8];
    if version != b"0       " {
        return Err(Error::format(
            path,
            format!("unsupported EDF version field {:?}", String::from_utf8_lossy(version)),
        ));
    }

    let record_id = field(8, 80)?.to_string();
    let header_bytes: usize = field(184, 8)?
        .parse()
        .map_err(|_| Error::format(path, "invalid header byte count field"))?;
    let num_records: i64 = field(236, 8)?
        .parse()
        .map_err(|_| Error::format(path, "invalid record count field"))?;
    let record_duration: f64 = field(244, 8)?
        .parse()
        .map_err(|_| Error::format(path, "invalid record duration field"))?;
    let num_signals: usize = field(252, 4)?
        .parse()
        .map_err(|_| Error::format(path, "invalid signal count field"))?;

    if num_signals == 0 {
        return Err(Error::format(path, "no signals"));
    }
    let expected_header = FIXED_HEADER_LEN + num_signals * PER_SIGNAL_HEADER_LEN;
    if header_bytes != expected_header {
        return Err(Error::format(
            path,
            format!("header byte count {header_bytes} does not match {num_signals} signals (expected {expected_header})"),
        ));
    }
    if bytes.len() < expected_header {
        return Err(Error::format(
            path,
            format!("truncated header: {} bytes, need {expected_header}", bytes.len()),
        ));
    }
    if record_duration <= 0.0 {
        return Err(Error::format(
            path,
            format!("record duration must be positive, got {record_duration}"),
        ));
    }

    // Per-signal fields: all labels first, then all transducers, and so on.
    let ns = num_signals;
    let base = FIXED_HEADER_LEN;
    let mut headers = Vec::with_capacity(ns);
    for i in 0..ns {
        let label = field(base + 16 * i, 16)?.to_string();
        let physical_min: f64 = field(base + ns * (16 + 80 + 8) + 8 * i, 8)?
            .parse()
            .map_err(|_| Error::format(path, format!("signal {i}: invalid physical minimum")))?;
        let physical_max: f64 = field(base + ns * (16 + 80 + 8 + 8) + 8 * i, 8)?
            .parse()
            .map_err(|_| Error::format(path, format!("signal {i}: invalid physical maximum")))?;
        let digital_min: i32 = field(base + ns * (16 + 80 + 8 + 8 + 8) + 8 * i, 8)?
            .parse()
            .map_err(|_| Error::format(path, format!("signal {i}: invalid digital minimum")))?;
        let digital_max: i32 = field(base + ns * (16 + 80 + 8 + 8 + 8 + 8) + 8 * i, 8)?
            .parse()
            .map_err(|_| Error::format(path, format!("signal {i}: invalid digital maximum")))?;
        let samples_per_record: usize = field(base + ns * (16 + 80 + 8 + 8 * 4 + 80) + 8 * i, 8)?
            .parse()
            .map_err(|_| Error::format(path, format!("signal {i}: invalid samples-per-record")))?;
        headers.push(SignalHeader {
            label,
            physical_min,
            physical_max,
            digital_min,
            digital_max,
            samples_per_record,
        });
    }

    let record_size: usize = headers.iter().map(|h| h.samples_per_record * 2).sum();
    let data_len = bytes.len() - expected_header;
    let num_records = if num_records < 0 {
        if record_size == 0 {
            0
        } else {
            data_len / record_size
        }
    } else {
        num_records as usize
    };
    if data_len != num_records * record_size {
        return Err(Error::format(
            path,
            format!(
                "data length {data_len} bytes does not match {num_records} records of {record_size} bytes"
            ),
        ));
    }

    let mut samples: Vec<Vec<f64>> = headers
        .iter()
        .map(|h| Vec::with_capacity(h.samples_per_record * num_records))
        .collect();
    let mut offset = expected_header;
    for _ in 0..num_records {
        for (i, h) in headers.iter().enumerate() {
            let span = h.samples_per_record * 2;
            let block = &bytes[offset..offset + span];
            let scale = (h.physical_max - h.physical_min)
                / (h.digital_max - h.digital_min) as f64;
            samples[i].extend(block.chunks_exact(2).map(|pair| {
                let digital = i16::from_le_bytes([pair[0], pair[1]]) as f64;
                (digital - h.digital_min as f64) * scale + h.physical_min
            }));
            offset += span;
        }
    }

    let mut channels = Vec::new();
    for (h, data) in headers.iter().zip(samples) {
        if h.label.starts_with("EDF Annotations") {
            log::warn!("{}: skipping annotation channel `{}`", path.display(), h.label);
            continue;
        }
        if h.digital_min == h.digital_max {
            return Err(Error::format(
                path,
                format!(
                    "signal `{}`: digital min equals digital max ({}), cannot scale",
                    h.label, h.digital_min
                ),
            ));
        }
        let rate = h.samples_per_record as f64 / record_duration;
        channels.push(Channel::new(h.label.clone(), rate, data)?);
    }

    let id = if record_id.is_empty() {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "record".to_string())
    } else {
        record_id
    };
    SignalRecord::new(id, channels)
}
