//! The six event classes and their canonical orderings.
//!
//! Three classes are clinical targets (spike-and-sharp-wave transients,
//! generalized and lateralized periodic discharges) and three model the
//! background (eye movement, artifact, background noise).

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// One of the six event classes.
///
/// The declaration order is the fixed tie-break order used when two classes
/// score identical likelihoods: target classes win over background classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventClass {
    /// Spike and/or sharp wave transients.
    Spsw,
    /// Generalized periodic epileptiform discharges.
    Gped,
    /// Periodic lateralized epileptiform discharges.
    Pled,
    /// Eye movement.
    Eyem,
    /// Artifact (non-cerebral electrical activity).
    Artf,
    /// Background.
    Bckg,
}

impl EventClass {
    /// All six classes in tie-break order.
    pub const ALL: [EventClass; 6] = [
        EventClass::Spsw,
        EventClass::Gped,
        EventClass::Pled,
        EventClass::Eyem,
        EventClass::Artf,
        EventClass::Bckg,
    ];

    /// Number of classes.
    pub const COUNT: usize = 6;

    /// Stable index of this class in [`EventClass::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// Class at `index` in [`EventClass::ALL`].
    pub fn from_index(index: usize) -> Option<EventClass> {
        EventClass::ALL.get(index).copied()
    }

    /// True for the three clinical target classes.
    pub fn is_target(self) -> bool {
        matches!(self, EventClass::Spsw | EventClass::Gped | EventClass::Pled)
    }

    /// Rarity rank, 0 = rarest. Follows the training-corpus event counts;
    /// used to break ties toward the rarer class when a reference epoch is
    /// covered equally by two labels.
    pub fn rarity_rank(self) -> usize {
        match self {
            EventClass::Spsw => 0,
            EventClass::Eyem => 1,
            EventClass::Gped => 2,
            EventClass::Artf => 3,
            EventClass::Pled => 4,
            EventClass::Bckg => 5,
        }
    }

    /// Canonical upper-case token, as used in label files and reports.
    pub fn token(self) -> &'static str {
        match self {
            EventClass::Spsw => "SPSW",
            EventClass::Gped => "GPED",
            EventClass::Pled => "PLED",
            EventClass::Eyem => "EYEM",
            EventClass::Artf => "ARTF",
            EventClass::Bckg => "BCKG",
        }
    }
}

impl fmt::Display for EventClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for EventClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SPSW" => Ok(EventClass::Spsw),
            "GPED" => Ok(EventClass::Gped),
            "PLED" => Ok(EventClass::Pled),
            "EYEM" => Ok(EventClass::Eyem),
            "ARTF" => Ok(EventClass::Artf),
            "BCKG" => Ok(EventClass::Bckg),
            other => Err(Error::Config(format!("unknown class token `{other}`"))),
        }
    }
}

/// A value per event class, indexed by [`EventClass::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMap<T>(pub [T; EventClass::COUNT]);

impl<T> ClassMap<T> {
    pub fn get(&self, class: EventClass) -> &T {
        &self.0[class.index()]
    }

    pub fn get_mut(&mut self, class: EventClass) -> &mut T {
        &mut self.0[class.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (EventClass, &T)> {
        EventClass::ALL.iter().copied().zip(self.0.iter())
    }
}

impl<T: Default> Default for ClassMap<T> {
    fn default() -> Self {
        ClassMap(std::array::from_fn(|_| T::default()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_break_order_is_declaration_order() {
        let mut sorted = EventClass::ALL;
        sorted.sort();
        assert_eq!(sorted, EventClass::ALL);
        assert!(EventClass::Spsw < EventClass::Bckg);
    }

    #[test]
    fn token_round_trip() {
        for class in EventClass::ALL {
            assert_eq!(class.token().parse::<EventClass>().unwrap(), class);
        }
        assert!("XYZW".parse::<EventClass>().is_err());
    }

    #[test]
    fn rarity_ranks_are_a_permutation() {
        let mut ranks: Vec<usize> = EventClass::ALL.iter().map(|c| c.rarity_rank()).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, vec![0, 1, 2, 3, 4, 5]);
        // SPSW is the rarest class, BCKG the most common.
        assert_eq!(EventClass::Spsw.rarity_rank(), 0);
        assert_eq!(EventClass::Bckg.rarity_rank(), 5);
    }
}
