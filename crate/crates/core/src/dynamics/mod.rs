//! Temporal dynamics: regression deltas over feature trajectories and the
//! assembly of static + delta feature vectors for the 16 system variants.

mod file;
mod systems;

pub use file::{read_features, write_features, FeatureRecord};
pub use systems::{assemble, DeltaOrder, FeatureSystemConfig};

use crate::error::{Error, Result};

/// Regression half-widths for first and second differencing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaSpec {
    /// Frames each side for the first difference.
    pub n_first: usize,
    /// Frames each side when differencing the first differences.
    pub n_second: usize,
}

impl Default for DeltaSpec {
    fn default() -> Self {
        DeltaSpec {
            n_first: 9,
            n_second: 3,
        }
    }
}

impl DeltaSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_first == 0 || self.n_second == 0 {
            return Err(Error::InvalidSpec(
                "delta half-widths must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Least-squares slope of each feature over a `2n + 1` frame neighborhood:
///
/// `d_t = sum_{k=1..n} k * (x_{t+k} - x_{t-k}) / (2 * sum_{k=1..n} k^2)`
///
/// Out-of-range frames are replicated from the nearest edge, so the output
/// has the same length as the input and constants map to zero everywhere.
pub fn delta(frames: &[Vec<f64>], n: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidSpec(
            "delta half-width must be at least 1".into(),
        ));
    }
    if frames.is_empty() {
        return Err(Error::EmptySignal);
    }
    let dim = frames[0].len();
    for row in frames {
        if row.len() != dim {
            return Err(Error::DimMismatch {
                got: row.len(),
                expected: dim,
            });
        }
    }
    let len = frames.len();
    let norm = 2.0 * (1..=n).map(|k| (k * k) as f64).sum::<f64>();
    let clamp = |i: isize| -> usize { i.clamp(0, len as isize - 1) as usize };
    let mut out = Vec::with_capacity(len);
    for t in 0..len as isize {
        let mut row = vec![0.0; dim];
        for k in 1..=n as isize {
            let ahead = &frames[clamp(t + k)];
            let behind = &frames[clamp(t - k)];
            for (slot, (a, b)) in row.iter_mut().zip(ahead.iter().zip(behind)) {
                *slot += k as f64 * (a - b);
            }
        }
        for slot in &mut row {
            *slot /= norm;
        }
        out.push(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(len: usize, slopes: &[f64]) -> Vec<Vec<f64>> {
        (0..len)
            .map(|t| slopes.iter().map(|a| a * t as f64).collect())
            .collect()
    }

    #[test]
    fn delta_of_ramp_is_the_slope() {
        // Interior frames of a linear trajectory recover the slope exactly.
        let slopes = [0.5, -2.0, 3.25];
        let frames = ramp(40, &slopes);
        for n in [1, 3, 9] {
            let d = delta(&frames, n).unwrap();
            for t in n..40 - n {
                for (j, &a) in slopes.iter().enumerate() {
                    assert!(
                        (d[t][j] - a).abs() < 1e-12,
                        "n={n} t={t} j={j}: {} vs {a}",
                        d[t][j]
                    );
                }
            }
        }
    }

    #[test]
    fn delta_of_constant_is_zero() {
        let frames = vec![vec![4.0, -1.0]; 25];
        let d = delta(&frames, 9).unwrap();
        for row in &d {
            assert!(row.iter().all(|&v| v == 0.0));
        }
    }

    /// Direct clamped-index evaluation of the regression formula.
    fn delta_oracle(frames: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
        let len = frames.len() as isize;
        let norm: f64 = 2.0 * (1..=n).map(|k| (k * k) as f64).sum::<f64>();
        (0..len)
            .map(|t| {
                (0..frames[0].len())
                    .map(|j| {
                        (1..=n as isize)
                            .map(|k| {
                                let hi = (t + k).clamp(0, len - 1) as usize;
                                let lo = (t - k).clamp(0, len - 1) as usize;
                                k as f64 * (frames[hi][j] - frames[lo][j])
                            })
                            .sum::<f64>()
                            / norm
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn delta_matches_direct_formula() {
        let mut state = 0x5151_5151_u64;
        let frames: Vec<Vec<f64>> = (0..30)
            .map(|_| {
                (0..4)
                    .map(|_| {
                        state = state
                            .wrapping_mul(6364136223846793005)
                            .wrapping_add(1442695040888963407);
                        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
                    })
                    .collect()
            })
            .collect();
        for n in [1, 2, 3, 9] {
            let got = delta(&frames, n).unwrap();
            let want = delta_oracle(&frames, n);
            for (g, w) in got.iter().zip(&want) {
                for (a, b) in g.iter().zip(w) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn delta_is_linear() {
        let x = ramp(20, &[1.0, 0.0]);
        let y: Vec<Vec<f64>> = (0..20)
            .map(|t| vec![(t as f64 * 0.7).sin(), (t as f64 * 0.3).cos()])
            .collect();
        let combo: Vec<Vec<f64>> = x
            .iter()
            .zip(&y)
            .map(|(a, b)| a.iter().zip(b).map(|(p, q)| 2.0 * p - 3.0 * q).collect())
            .collect();
        let dx = delta(&x, 3).unwrap();
        let dy = delta(&y, 3).unwrap();
        let dc = delta(&combo, 3).unwrap();
        for t in 0..20 {
            for j in 0..2 {
                let want = 2.0 * dx[t][j] - 3.0 * dy[t][j];
                assert!((dc[t][j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn delta_receptive_field_is_bounded() {
        // Perturbing a frame more than n steps away leaves d_t unchanged.
        let frames = ramp(30, &[1.0]);
        let n = 3;
        let base = delta(&frames, n).unwrap();
        let mut poked = frames.clone();
        poked[20][0] += 100.0;
        let changed = delta(&poked, n).unwrap();
        for t in 0..30 {
            // The center frame never enters its own regression, so only
            // offsets 1..=n change.
            let offset = (t as isize - 20).unsigned_abs();
            if offset >= 1 && offset <= n {
                assert_ne!(base[t][0], changed[t][0], "t={t}");
            } else {
                assert_eq!(base[t][0], changed[t][0], "t={t}");
            }
        }
    }

    #[test]
    fn delta_rejects_bad_input() {
        assert!(matches!(delta(&[], 3), Err(Error::EmptySignal)));
        assert!(matches!(
            delta(&[vec![1.0]], 0),
            Err(Error::InvalidSpec(_))
        ));
        let ragged = vec![vec![1.0, 2.0], vec![1.0]];
        assert!(matches!(
            delta(&ragged, 1),
            Err(Error::DimMismatch { got: 1, expected: 2 })
        ));
    }

    #[test]
    fn delta_single_frame_is_zero() {
        let d = delta(&[vec![5.0, -2.0]], 9).unwrap();
        assert_eq!(d, vec![vec![0.0, 0.0]]);
    }
}
