//! CSV signal format.
//!
//! ```text
//! # sample_rate=250
//! time,FP1,FP2
//! 0.000,1.25,-3.5
//! 0.004,1.5,-2.75
//! ```
//!
//! One `# sample_rate=<Hz>` comment line precedes the header; the header's
//! first column is `time`, remaining columns are channel names. All channels
//! share the file's sample rate.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{Channel, SignalRecord};

/// Read a multichannel signal from the CSV format above.
///
/// The record id is the file stem.
pub fn read_csv_signal(path: impl AsRef<Path>) -> Result<SignalRecord> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut sample_rate: Option<f64> = None;
    let mut names: Vec<String> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut saw_header = false;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(value) = comment.strip_prefix("sample_rate=") {
                let rate: f64 = value.trim().parse().map_err(|_| {
                    Error::parse(path, line_no, format!("invalid sample_rate `{value}`"))
                })?;
                if rate <= 0.0 || !rate.is_finite() {
                    return Err(Error::parse(
                        path,
                        line_no,
                        format!("sample_rate must be positive, got {rate}"),
                    ));
                }
                sample_rate = Some(rate);
            }
            continue;
        }
        if !saw_header {
            let mut fields = trimmed.split(',');
            match fields.next() {
                Some("time") => {}
                _ => {
                    return Err(Error::parse(
                        path,
                        line_no,
                        "malformed header: first column must be `time`",
                    ))
                }
            }
            for field in fields {
                let name = field.trim();
                if name.is_empty() {
                    return Err(Error::parse(path, line_no, "malformed header: empty channel name"));
                }
                names.push(name.to_string());
            }
            if names.is_empty() {
                return Err(Error::parse(path, line_no, "malformed header: no channel columns"));
            }
            columns = vec![Vec::new(); names.len()];
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != names.len() + 1 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {} columns, got {}", names.len() + 1, fields.len()),
            ));
        }
        for (col, field) in columns.iter_mut().zip(&fields[1..]) {
            let value: f64 = field.trim().parse().map_err(|_| {
                Error::parse(path, line_no, format!("non-numeric cell `{field}`"))
            })?;
            col.push(value);
        }
    }

    if !saw_header {
        return Err(Error::parse(path, 1, "missing header line"));
    }
    let sample_rate = sample_rate
        .ok_or_else(|| Error::Config(format!("{}: missing `# sample_rate=` line", path.display())))?;
    if columns.iter().any(|c| c.is_empty()) {
        return Err(Error::EmptySignal);
    }

    let channels = names
        .into_iter()
        .zip(columns)
        .map(|(name, samples)| Channel::new(name, sample_rate, samples))
        .collect::<Result<Vec<_>>>()?;

    let record_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "record".to_string());
    SignalRecord::new(record_id, channels)
}

/// Write a record in the CSV signal format.
///
/// All channels must share one sample rate and length; the format cannot
/// express anything else.
pub fn write_csv_signal(record: &SignalRecord, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let first = record.channels.first().ok_or(Error::EmptySignal)?;
    let rate = first.sample_rate;
    let len = first.samples.len();
    for ch in &record.channels {
        if ch.sample_rate != rate {
            return Err(Error::InvalidSpec(format!(
                "CSV output needs a uniform rate; `{}` is {} Hz, expected {} Hz",
                ch.name, ch.sample_rate, rate
            )));
        }
        if ch.samples.len() != len {
            return Err(Error::LengthMismatch {
                left: len,
                right: ch.samples.len(),
            });
        }
    }

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);

    writeln!(w, "# sample_rate={rate}").map_err(io_err)?;
    write!(w, "time").map_err(io_err)?;
    for ch in &record.channels {
        write!(w, ",{}", ch.name).map_err(io_err)?;
    }
    writeln!(w).map_err(io_err)?;
    for i in 0..len {
        write!(w, "{}", i as f64 / rate).map_err(io_err)?;
        for ch in &record.channels {
            write!(w, ",{}", ch.samples[i]).map_err(io_err)?;
        }
        writeln!(w).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
