//! Label span files, per-epoch hypothesis files, and the projection of
//! time-stamped spans onto the epoch grid.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::classes::EventClass;
use crate::error::{Error, Result};

/// A labeled time span on one channel, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSpan {
    pub channel: String,
    pub start: f64,
    pub stop: f64,
    pub label: EventClass,
}

const LABEL_HEADER: &str = "channel,start,stop,label";

/// Read a `channel,start,stop,label` CSV of event spans.
pub fn read_labels(path: &Path) -> Result<Vec<LabelSpan>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == LABEL_HEADER => {}
        Some((_, header)) => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header `{LABEL_HEADER}`, found `{header}`"),
            ))
        }
        None => return Err(Error::parse(path, 1, "empty label file")),
    }
    let mut spans = Vec::new();
    for (idx, line) in lines {
        let n = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                n,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let start: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, n, format!("invalid start `{}`", fields[1])))?;
        let stop: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, n, format!("invalid stop `{}`", fields[2])))?;
        if !(start >= 0.0) || !(stop > start) {
            return Err(Error::parse(
                path,
                n,
                format!("span must satisfy 0 <= start < stop, got {start}..{stop}"),
            ));
        }
        let label: EventClass = fields[3]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, n, format!("unknown class `{}`", fields[3])))?;
        spans.push(LabelSpan {
            channel: fields[0].trim().to_string(),
            start,
            stop,
            label,
        });
    }
    Ok(spans)
}

pub fn write_labels(path: &Path, spans: &[LabelSpan]) -> Result<()> {
    let mut out = String::from(LABEL_HEADER);
    out.push('\n');
    for s in spans {
        if !(s.start >= 0.0) || !(s.stop > s.start) {
            return Err(Error::InvalidSpec(format!(
                "span must satisfy 0 <= start < stop, got {}..{}",
                s.start, s.stop
            )));
        }
        writeln!(out, "{},{},{},{}", s.channel, s.start, s.stop, s.label)
            .expect("writing to string");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Project one channel's spans onto `num_epochs` epochs of `epoch_dur`
/// seconds.
///
/// Each epoch takes the label covering most of it; uncovered time counts as
/// background, and exact coverage ties go to the rarer class so brief
/// clinical events are not swallowed by background. Spans may overlap; each
/// accrues its own coverage.
pub fn label_epochs(
    spans: &[LabelSpan],
    channel: &str,
    num_epochs: usize,
    epoch_dur: f64,
) -> Result<Vec<EventClass>> {
    if !(epoch_dur > 0.0) {
        return Err(Error::InvalidSpec("epoch duration must be positive".into()));
    }
    let relevant: Vec<&LabelSpan> = spans.iter().filter(|s| s.channel == channel).collect();
    let mut out = Vec::with_capacity(num_epochs);
    for k in 0..num_epochs {
        let lo = k as f64 * epoch_dur;
        let hi = lo + epoch_dur;
        let mut coverage = [0.0f64; EventClass::COUNT];
        let mut clipped: Vec<(f64, f64)> = Vec::new();
        for s in &relevant {
            let a = s.start.max(lo);
            let b = s.stop.min(hi);
            if b > a {
                coverage[s.label.index()] += b - a;
                clipped.push((a, b));
            }
        }
        // Background also owns whatever no span covers.
        clipped.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut covered = 0.0;
        let mut cursor = lo;
        for (a, b) in clipped {
            let a = a.max(cursor);
            if b > a {
                covered += b - a;
                cursor = b;
            }
        }
        coverage[EventClass::Bckg.index()] += epoch_dur - covered;

        let mut best = EventClass::Bckg;
        for class in EventClass::ALL {
            let c = coverage[class.index()];
            let b = coverage[best.index()];
            if c > b || (c == b && class.rarity_rank() < best.rarity_rank()) {
                best = class;
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// One classified epoch with its detection score.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochScore {
    pub channel: String,
    pub epoch: usize,
    pub label: EventClass,
    pub score: f64,
}

const HYP_HEADER: &str = "channel,epoch,label,score";

pub fn write_hypotheses(path: &Path, rows: &[EpochScore]) -> Result<()> {
    let mut out = String::from(HYP_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(out, "{},{},{},{:.16e}", r.channel, r.epoch, r.label, r.score)
            .expect("writing to string");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_hypotheses(path: &Path) -> Result<Vec<EpochScore>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == HYP_HEADER => {}
        Some((_, header)) => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header `{HYP_HEADER}`, found `{header}`"),
            ))
        }
        None => return Err(Error::parse(path, 1, "empty hypothesis file")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let n = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                n,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let epoch: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, n, format!("invalid epoch `{}`", fields[1])))?;
        let label: EventClass = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, n, format!("unknown class `{}`", fields[2])))?;
        let score: f64 = fields[3]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, n, format!("invalid score `{}`", fields[3])))?;
        rows.push(EpochScore {
            channel: fields[0].trim().to_string(),
            epoch,
            label,
            score,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use EventClass::*;

    fn span(channel: &str, start: f64, stop: f64, label: EventClass) -> LabelSpan {
        LabelSpan {
            channel: channel.into(),
            start,
            stop,
            label,
        }
    }

    #[test]
    fn label_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        let spans = vec![
            span("C1", 0.0, 2.5, Spsw),
            span("C1", 10.0, 11.0, Eyem),
            span("C2", 0.25, 0.75, Pled),
        ];
        write_labels(&path, &spans).unwrap();
        let back = read_labels(&path).unwrap();
        assert_eq!(back, spans);
    }

    #[test]
    fn bad_label_lines_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        std::fs::write(&path, "channel,start,stop,label\nC1,0,1,SPSW\nC1,2,1,GPED\n").unwrap();
        match read_labels(&path) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("start < stop"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&path, "time,label\n").unwrap();
        assert!(matches!(read_labels(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn majority_overlap_wins_the_epoch() {
        // Epoch 0: SPSW covers 0.6 s, background 0.4 s.
        let spans = vec![span("C1", 0.0, 0.6, Spsw)];
        let labels = label_epochs(&spans, "C1", 2, 1.0).unwrap();
        assert_eq!(labels, vec![Spsw, Bckg]);
    }

    #[test]
    fn uncovered_time_is_background() {
        let spans = vec![span("C1", 0.0, 0.3, Gped)];
        let labels = label_epochs(&spans, "C1", 3, 1.0).unwrap();
        assert_eq!(labels, vec![Bckg, Bckg, Bckg]);
    }

    #[test]
    fn exact_tie_goes_to_the_rarer_class() {
        // Half SPSW, half background: SPSW is rarer than BCKG.
        let spans = vec![span("C1", 0.0, 0.5, Spsw)];
        assert_eq!(label_epochs(&spans, "C1", 1, 1.0).unwrap(), vec![Spsw]);
        // Half EYEM vs half GPED (tie): EYEM is rarer than GPED.
        let spans = vec![span("C1", 0.0, 0.5, Gped), span("C1", 0.5, 1.0, Eyem)];
        assert_eq!(label_epochs(&spans, "C1", 1, 1.0).unwrap(), vec![Eyem]);
    }

    #[test]
    fn spans_respect_channel_and_epoch_boundaries() {
        let spans = vec![span("C1", 0.8, 2.2, Pled), span("C2", 0.0, 10.0, Artf)];
        let labels = label_epochs(&spans, "C1", 3, 1.0).unwrap();
        // Epoch 0 is 0.2 covered (background wins), epoch 1 fully, epoch 2
        // 0.2 covered.
        assert_eq!(labels, vec![Bckg, Pled, Bckg]);
        let labels = label_epochs(&spans, "C2", 3, 1.0).unwrap();
        assert_eq!(labels, vec![Artf, Artf, Artf]);
        let labels = label_epochs(&spans, "C3", 2, 1.0).unwrap();
        assert_eq!(labels, vec![Bckg, Bckg]);
    }

    #[test]
    fn overlapping_spans_both_count() {
        // PLED covers 0.4, EYEM covers 0.3 of the same epoch, overlapping;
        // uncovered union is 0.6 so background still wins.
        let spans = vec![span("C1", 0.0, 0.4, Pled), span("C1", 0.1, 0.4, Eyem)];
        let labels = label_epochs(&spans, "C1", 1, 1.0).unwrap();
        assert_eq!(labels, vec![Bckg]);
    }

    #[test]
    fn hypothesis_round_trip_preserves_scores() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hyp.csv");
        let rows = vec![
            EpochScore { channel: "C1".into(), epoch: 0, label: Spsw, score: -12.345678901234567 },
            EpochScore { channel: "C1".into(), epoch: 1, label: Bckg, score: 0.1 },
        ];
        write_hypotheses(&path, &rows).unwrap();
        let back = read_hypotheses(&path).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a.channel, b.channel);
            assert_eq!(a.epoch, b.epoch);
            assert_eq!(a.label, b.label);
            assert_eq!(a.score.to_bits(), b.score.to_bits());
        }
    }

    #[test]
    fn bad_hypothesis_lines_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hyp.csv");
        std::fs::write(&path, "channel,epoch,label,score\nC1,x,SPSW,1.0\n").unwrap();
        assert!(matches!(
            read_hypotheses(&path),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
