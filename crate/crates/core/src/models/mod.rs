//! Per-class acoustic-style models over feature frames: mixture densities,
//! left-to-right Markov chains, training, classification, and the model set
//! file format.
//!
//! Classification is per epoch: a fixed count of consecutive frames is
//! scored against all six class models and the best log likelihood wins.

mod file;
mod gmm;
mod hmm;
mod train;

pub use file::{read_model_set, write_model_set};
pub use gmm::{logsumexp, Gmm};
pub use hmm::HmmModel;
pub use train::{em_refine, train_class, TrainSpec};

use crate::classes::{ClassMap, EventClass};
use crate::error::{Error, Result};

/// Frames per classification epoch: 1 s of 0.1 s frame steps.
pub const FRAMES_PER_EPOCH: usize = 10;

/// Split frames into consecutive non-overlapping epochs, dropping any
/// trailing partial epoch.
pub fn epochs(frames: &[Vec<f64>], frames_per_epoch: usize) -> Result<Vec<&[Vec<f64>]>> {
    if frames_per_epoch == 0 {
        return Err(Error::InvalidSpec("epoch length must be positive".into()));
    }
    Ok(frames.chunks_exact(frames_per_epoch).collect())
}

/// The classifier: one trained model per event class plus the metadata
/// needed to check that features and models agree.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub system_id: u32,
    pub frame_period: f64,
    pub frames_per_epoch: usize,
    pub models: ClassMap<HmmModel>,
}

/// Outcome of classifying one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochDecision {
    pub label: EventClass,
    /// Best target log likelihood minus best background log likelihood;
    /// higher means more target-like.
    pub score: f64,
    pub logliks: ClassMap<f64>,
}

impl ModelSet {
    pub fn dim(&self) -> usize {
        self.models.get(EventClass::Spsw).dim()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        for (class, model) in self.models.iter() {
            if model.dim() != dim {
                return Err(Error::Train {
                    class: class.token().into(),
                    message: format!("model dimension {} differs from {}", model.dim(), dim),
                });
            }
        }
        if self.frames_per_epoch == 0 {
            return Err(Error::InvalidSpec("epoch length must be positive".into()));
        }
        if !(self.frame_period > 0.0) {
            return Err(Error::InvalidSpec("frame period must be positive".into()));
        }
        Ok(())
    }

    /// Score one epoch against all six models.
    ///
    /// Ties go to the earlier class in [`EventClass::ALL`], so targets beat
    /// background classes at equal likelihood.
    pub fn classify(&self, epoch: &[Vec<f64>]) -> Result<EpochDecision> {
        let mut logliks = ClassMap([0.0; EventClass::COUNT]);
        for class in EventClass::ALL {
            *logliks.get_mut(class) = self.models.get(class).log_likelihood(epoch)?;
        }
        let mut label = EventClass::Spsw;
        for class in EventClass::ALL {
            if *logliks.get(class) > *logliks.get(label) {
                label = class;
            }
        }
        let best_target = EventClass::ALL
            .iter()
            .filter(|c| c.is_target())
            .map(|c| *logliks.get(*c))
            .fold(f64::NEG_INFINITY, f64::max);
        let best_background = EventClass::ALL
            .iter()
            .filter(|c| !c.is_target())
            .map(|c| *logliks.get(*c))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(EpochDecision {
            label,
            score: best_target - best_background,
            logliks,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point_model(mean: f64) -> HmmModel {
        let g = Gmm::new(vec![1.0], vec![vec![mean]], vec![vec![1.0]]).unwrap();
        HmmModel::new(vec![g], &[1.0], &[0.0]).unwrap()
    }

    fn set_with_means(means: [f64; 6]) -> ModelSet {
        ModelSet {
            system_id: 1,
            frame_period: 0.1,
            frames_per_epoch: 10,
            models: ClassMap(means.map(point_model)),
        }
    }

    #[test]
    fn epochs_drop_trailing_partial() {
        let frames: Vec<Vec<f64>> = (0..25).map(|t| vec![t as f64]).collect();
        let chunks = epochs(&frames, 10).unwrap();
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].len(), 10);
        assert_eq!(chunks[1][0][0], 10.0);
        assert!(epochs(&frames, 0).is_err());
        assert_eq!(epochs(&frames[..5], 10).unwrap().len(), 0);
    }

    #[test]
    fn classify_picks_nearest_model() {
        let set = set_with_means([0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let epoch = vec![vec![4.1]; 10];
        let decision = set.classify(&epoch).unwrap();
        assert_eq!(decision.label, EventClass::Artf);
    }

    #[test]
    fn ties_break_toward_earlier_class() {
        // All models identical: every class scores the same.
        let set = set_with_means([1.0; 6]);
        let decision = set.classify(&vec![vec![0.3]; 10]).unwrap();
        assert_eq!(decision.label, EventClass::Spsw);
        assert_eq!(decision.score, 0.0);
    }

    #[test]
    fn score_is_target_minus_background_gap() {
        let set = set_with_means([0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let epoch = vec![vec![0.0]; 10];
        let d = set.classify(&epoch).unwrap();
        // Best target is SPSW at mean 0, best background EYEM at mean 3.
        let expected = *d.logliks.get(EventClass::Spsw) - *d.logliks.get(EventClass::Eyem);
        assert!((d.score - expected).abs() < 1e-12);
        assert!(d.score > 0.0);

        let epoch = vec![vec![5.0]; 10];
        let d = set.classify(&epoch).unwrap();
        assert!(d.score < 0.0);
        assert_eq!(d.label, EventClass::Bckg);
    }

    #[test]
    fn validate_catches_dimension_drift() {
        let mut set = set_with_means([0.0; 6]);
        let wide = Gmm::new(vec![1.0], vec![vec![0.0, 0.0]], vec![vec![1.0, 1.0]]).unwrap();
        *set.models.get_mut(EventClass::Bckg) = HmmModel::new(vec![wide], &[1.0], &[0.0]).unwrap();
        assert!(set.validate().is_err());
    }
}
