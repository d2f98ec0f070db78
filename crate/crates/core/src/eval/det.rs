//! Detection-error tradeoff curves over epoch scores.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// One operating point: detections and false alarms at a score threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetPoint {
    pub threshold: f64,
    pub p_fa: f64,
    pub p_det: f64,
}

/// Sweep a linear threshold grid over the pooled score range.
///
/// An epoch is detected when its score is at or above the threshold, so
/// `p_det` is the hit rate over target epochs and `p_fa` the alarm rate
/// over background epochs. The grid extends just past both extremes, so the
/// first point is always (1, 1) and the last (0, 0).
pub fn det_curve(
    target_scores: &[f64],
    background_scores: &[f64],
    num_points: usize,
) -> Result<Vec<DetPoint>> {
    if target_scores.is_empty() {
        return Err(Error::Eval("no target epochs for a detection curve".into()));
    }
    if background_scores.is_empty() {
        return Err(Error::Eval(
            "no background epochs for a detection curve".into(),
        ));
    }
    if num_points < 2 {
        return Err(Error::InvalidSpec(
            "a detection curve needs at least 2 points".into(),
        ));
    }
    let all = target_scores.iter().chain(background_scores);
    let min = all.clone().cloned().fold(f64::INFINITY, f64::min);
    let max = all.cloned().fold(f64::NEG_INFINITY, f64::max);
    if !min.is_finite() || !max.is_finite() {
        return Err(Error::Eval("scores must be finite".into()));
    }
    let margin = ((max - min) * 1e-3).max(1e-9);
    let lo = min - margin;
    let hi = max + margin;
    let rate = |scores: &[f64], tau: f64| {
        scores.iter().filter(|&&s| s >= tau).count() as f64 / scores.len() as f64
    };
    Ok((0..num_points)
        .map(|i| {
            let threshold = lo + (hi - lo) * i as f64 / (num_points - 1) as f64;
            DetPoint {
                threshold,
                p_fa: rate(background_scores, threshold),
                p_det: rate(target_scores, threshold),
            }
        })
        .collect())
}

/// Standard normal deviate of `p`, clamped away from 0 and 1 so the tails
/// stay finite on the customary normal-deviate axes.
pub fn probit(p: f64) -> f64 {
    let clamped = p.clamp(1e-6, 1.0 - 1e-6);
    Normal::standard().inverse_cdf(clamped)
}

/// Write the curve as CSV with both probabilities and their normal deviates.
pub fn write_det_csv(path: &Path, points: &[DetPoint]) -> Result<()> {
    let mut out = String::from("threshold,p_fa,p_det,dev_fa,dev_det\n");
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.threshold,
            p.p_fa,
            p.p_det,
            probit(p.p_fa),
            probit(p.p_det)
        )
        .expect("writing to string");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
