//! Scoring: collapsing the six classes into coarser paradigms, epoch-level
//! error rates, detection-error tradeoff curves, and the label file formats.

mod det;
mod labels;

pub use det::{det_curve, probit, write_det_csv, DetPoint};
pub use labels::{
    label_epochs, read_hypotheses, read_labels, write_hypotheses, write_labels, EpochScore,
    LabelSpan,
};

use std::collections::HashMap;

use crate::classes::EventClass;
use crate::error::{Error, Result};

/// How many ways the six classes are told apart when scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Paradigm {
    /// All six classes distinct.
    Six,
    /// Eye movement and artifact fold into background.
    Four,
    /// Targets against everything else.
    Two,
}

impl Paradigm {
    pub const ALL: [Paradigm; 3] = [Paradigm::Six, Paradigm::Four, Paradigm::Two];

    /// Collapse a label into this paradigm's class set. Idempotent.
    pub fn collapse(self, label: ScoreClass) -> ScoreClass {
        use EventClass::*;
        match (self, label) {
            (Paradigm::Six, l) => l,
            (Paradigm::Four, ScoreClass::Event(Eyem | Artf)) => ScoreClass::Event(Bckg),
            (Paradigm::Four, l) => l,
            (Paradigm::Two, ScoreClass::Event(c)) if c.is_target() => ScoreClass::Targ,
            (Paradigm::Two, ScoreClass::Targ) => ScoreClass::Targ,
            (Paradigm::Two, ScoreClass::Event(_)) => ScoreClass::Event(Bckg),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Paradigm::Six => "six-way",
            Paradigm::Four => "four-way",
            Paradigm::Two => "two-way",
        }
    }
}

/// A label in some paradigm: either a concrete event class or the merged
/// target class of the two-way paradigm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreClass {
    Event(EventClass),
    Targ,
}

impl From<EventClass> for ScoreClass {
    fn from(c: EventClass) -> Self {
        ScoreClass::Event(c)
    }
}

impl ScoreClass {
    pub fn token(self) -> &'static str {
        match self {
            ScoreClass::Event(c) => c.token(),
            ScoreClass::Targ => "TARG",
        }
    }
}

/// One labeled epoch cell: a channel plus an epoch index within it.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLabel {
    pub channel: String,
    pub epoch: usize,
    pub label: EventClass,
}

/// Fraction of aligned (channel, epoch) cells whose collapsed labels
/// disagree.
///
/// Every reference cell must have exactly one hypothesis and vice versa;
/// missing or surplus cells are an error, not silently ignored.
pub fn error_rate(refs: &[EpochLabel], hyps: &[EpochLabel], paradigm: Paradigm) -> Result<f64> {
    if refs.is_empty() {
        return Err(Error::Eval("no epochs to score".into()));
    }
    let mut hyp_map: HashMap<(&str, usize), EventClass> = HashMap::with_capacity(hyps.len());
    for h in hyps {
        if hyp_map.insert((h.channel.as_str(), h.epoch), h.label).is_some() {
            return Err(Error::Eval(format!(
                "duplicate hypothesis for channel {} epoch {}",
                h.channel, h.epoch
            )));
        }
    }
    let mut errors = 0usize;
    for r in refs {
        let hyp = hyp_map.remove(&(r.channel.as_str(), r.epoch)).ok_or_else(|| {
            Error::Eval(format!(
                "missing hypothesis for channel {} epoch {}",
                r.channel, r.epoch
            ))
        })?;
        let want = paradigm.collapse(r.label.into());
        let got = paradigm.collapse(hyp.into());
        if want != got {
            errors += 1;
        }
    }
    if let Some(((channel, epoch), _)) = hyp_map.into_iter().next() {
        return Err(Error::Eval(format!(
            "hypothesis for channel {channel} epoch {epoch} has no reference"
        )));
    }
    Ok(errors as f64 / refs.len() as f64)
}
