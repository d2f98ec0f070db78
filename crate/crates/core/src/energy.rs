//! Frame energy terms: time-domain log energy, frequency-domain log energy,
//! and the differential energy that tracks how fast the frequency-domain
//! energy swings within a medium-length neighborhood.
//!
//! The differential term exists because absolute energy is hostage to gain
//! and electrode drift; the local max minus min of E_f is not.

use crate::error::{Error, Result};
use crate::frontend::SpectralFrame;

/// Floor applied inside logs so silent frames stay finite.
pub const ENERGY_FLOOR: f64 = 1e-10;

/// The three per-frame energy terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    pub time: f64,
    pub freq: f64,
    pub diff: f64,
}

/// Sliding window for differential energy, expressed in seconds and
/// resolved to an odd frame count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffEnergySpec {
    pub window_dur: f64,
    pub step_dur: f64,
    pub floor: f64,
}

impl DiffEnergySpec {
    pub fn new(window_dur: f64, step_dur: f64) -> Result<Self> {
        let spec = DiffEnergySpec {
            window_dur,
            step_dur,
            floor: ENERGY_FLOOR,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Defaults: 0.9 s of context at a 0.1 s frame step, so M = 9.
    pub fn at_step(step_dur: f64) -> Result<Self> {
        DiffEnergySpec::new(0.9, step_dur)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_dur > 0.0) {
            return Err(Error::InvalidSpec("frame step must be positive".into()));
        }
        if !(self.window_dur > 0.0) {
            return Err(Error::InvalidSpec(
                "differential window must be positive".into(),
            ));
        }
        if !(self.floor > 0.0) {
            return Err(Error::InvalidSpec("energy floor must be positive".into()));
        }
        Ok(())
    }

    /// Window length in frames, forced odd so the window centers on a frame.
    pub fn window_frames(&self) -> usize {
        let m = (self.window_dur / self.step_dur).round().max(1.0) as usize;
        if m % 2 == 0 {
            m + 1
        } else {
            m
        }
    }
}

/// Log mean power of a windowed frame: `log(max(sum(x^2)/N, floor))`.
pub fn time_energy(frame: &[f64], floor: f64) -> Result<f64> {
    if frame.is_empty() {
        return Err(Error::EmptySignal);
    }
    let mean_power = frame.iter().map(|&s| s * s).sum::<f64>() / frame.len() as f64;
    Ok(mean_power.max(floor).ln())
}

/// Log total filter-bank power: `log(max(sum(outputs^2), floor))`.
pub fn freq_energy(spectral: &SpectralFrame, floor: f64) -> Result<f64> {
    if spectral.filter_outputs.is_empty() {
        return Err(Error::EmptySignal);
    }
    let power = spectral.filter_outputs.iter().map(|&o| o * o).sum::<f64>();
    Ok(power.max(floor).ln())
}

/// Sliding max-minus-min of the frequency-domain energies.
///
/// Frame `t` sees frames `t - M/2 ..= t + M/2` clamped to the sequence, so
/// edge frames use a shorter window rather than padding. Runs in O(T) via
/// monotonic deques.
pub fn diff_energy(freq_energies: &[f64], spec: &DiffEnergySpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if freq_energies.is_empty() {
        return Err(Error::EmptySignal);
    }
    let half = spec.window_frames() / 2;
    let len = freq_energies.len();

    // Deques hold indices; fronts are the current window extrema.
    let mut max_dq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let mut min_dq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let mut out = Vec::with_capacity(len);
    let mut next = 0usize;
    for t in 0..len {
        let hi = (t + half).min(len - 1);
        while next <= hi {
            while max_dq
                .back()
                .is_some_and(|&i| freq_energies[i] <= freq_energies[next])
            {
                max_dq.pop_back();
            }
            max_dq.push_back(next);
            while min_dq
                .back()
                .is_some_and(|&i| freq_energies[i] >= freq_energies[next])
            {
                min_dq.pop_back();
            }
            min_dq.push_back(next);
            next += 1;
        }
        let lo = t.saturating_sub(half);
        while max_dq.front().is_some_and(|&i| i < lo) {
            max_dq.pop_front();
        }
        while min_dq.front().is_some_and(|&i| i < lo) {
            min_dq.pop_front();
        }
        out.push(freq_energies[*max_dq.front().unwrap()] - freq_energies[*min_dq.front().unwrap()]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectral(outputs: Vec<f64>) -> SpectralFrame {
        SpectralFrame {
            magnitudes: vec![],
            filter_outputs: outputs,
        }
    }

    #[test]
    fn time_energy_of_unit_frame_is_zero() {
        // Mean power of all-ones is 1; log 1 = 0.
        assert_eq!(time_energy(&vec![1.0; 50], ENERGY_FLOOR).unwrap(), 0.0);
    }

    #[test]
    fn time_energy_of_constant_two_frame() {
        let e = time_energy(&vec![2.0; 10], ENERGY_FLOOR).unwrap();
        assert!((e - 4.0_f64.ln()).abs() < 1e-15);
        assert!((e - 1.3862943611198906).abs() < 1e-12);
    }

    #[test]
    fn time_energy_floors_silence() {
        let e = time_energy(&vec![0.0; 50], ENERGY_FLOOR).unwrap();
        assert_eq!(e, ENERGY_FLOOR.ln());
    }

    #[test]
    fn freq_energy_of_known_outputs() {
        // Outputs [2, 4] give power 20.
        let e = freq_energy(&spectral(vec![2.0, 4.0]), ENERGY_FLOOR).unwrap();
        assert!((e - 20.0_f64.ln()).abs() < 1e-15);
        assert!((e - 2.995732273553991).abs() < 1e-12);
    }

    #[test]
    fn freq_energy_floors_zero_outputs() {
        let e = freq_energy(&spectral(vec![0.0; 20]), ENERGY_FLOOR).unwrap();
        assert_eq!(e, ENERGY_FLOOR.ln());
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(matches!(
            time_energy(&[], ENERGY_FLOOR),
            Err(Error::EmptySignal)
        ));
        assert!(matches!(
            freq_energy(&spectral(vec![]), ENERGY_FLOOR),
            Err(Error::EmptySignal)
        ));
        let spec = DiffEnergySpec::at_step(0.1).unwrap();
        assert!(matches!(diff_energy(&[], &spec), Err(Error::EmptySignal)));
    }

    #[test]
    fn window_frames_resolves_odd() {
        assert_eq!(DiffEnergySpec::at_step(0.1).unwrap().window_frames(), 9);
        // 0.8 / 0.1 = 8 rounds up to the next odd count.
        assert_eq!(DiffEnergySpec::new(0.8, 0.1).unwrap().window_frames(), 9);
        assert_eq!(DiffEnergySpec::new(0.1, 0.1).unwrap().window_frames(), 1);
        assert_eq!(DiffEnergySpec::new(0.3, 0.1).unwrap().window_frames(), 3);
    }

    #[test]
    fn diff_energy_spike_in_flat_sequence() {
        // Energies flat at 1 except a spike of 6 at index 3; M = 9, half = 4.
        // Frames 0..=7 see the spike, so max - min = 5 there; frame 8 on
        // (window 4..) still sees it until index 3 leaves at t = 8.
        let mut e = vec![1.0; 12];
        e[3] = 6.0;
        let spec = DiffEnergySpec::at_step(0.1).unwrap();
        let d = diff_energy(&e, &spec).unwrap();
        for t in 0..=7 {
            assert_eq!(d[t], 5.0, "frame {t}");
        }
        for t in 8..12 {
            assert_eq!(d[t], 0.0, "frame {t}");
        }
    }

    #[test]
    fn diff_energy_constant_sequence_is_zero() {
        let spec = DiffEnergySpec::at_step(0.1).unwrap();
        let d = diff_energy(&vec![3.7; 40], &spec).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
    }

    /// Brute-force window scan, kept free of the deque logic.
    fn diff_energy_oracle(e: &[f64], half: usize) -> Vec<f64> {
        (0..e.len())
            .map(|t| {
                let lo = t.saturating_sub(half);
                let hi = (t + half).min(e.len() - 1);
                let w = &e[lo..=hi];
                let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
                max - min
            })
            .collect()
    }

    #[test]
    fn diff_energy_matches_brute_force() {
        let mut state = 0x0bad_cafe_u64;
        let e: Vec<f64> = (0..200)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 * 10.0 - 5.0
            })
            .collect();
        for window_dur in [0.1, 0.3, 0.9, 1.5] {
            let spec = DiffEnergySpec::new(window_dur, 0.1).unwrap();
            let got = diff_energy(&e, &spec).unwrap();
            let want = diff_energy_oracle(&e, spec.window_frames() / 2);
            assert_eq!(got, want, "window {window_dur}");
        }
    }

    #[test]
    fn diff_energy_shorter_than_window() {
        // 3 frames against M = 9: every frame sees the whole sequence.
        let e = vec![1.0, 5.0, 2.0];
        let spec = DiffEnergySpec::at_step(0.1).unwrap();
        let d = diff_energy(&e, &spec).unwrap();
        assert_eq!(d, vec![4.0, 4.0, 4.0]);
    }

    #[test]
    fn diff_energy_is_offset_invariant() {
        let e: Vec<f64> = (0..50).map(|i| ((i * 7 % 13) as f64).sin()).collect();
        let shifted: Vec<f64> = e.iter().map(|v| v + 100.0).collect();
        let spec = DiffEnergySpec::at_step(0.1).unwrap();
        let a = diff_energy(&e, &spec).unwrap();
        let b = diff_energy(&shifted, &spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn time_energy_scales_with_amplitude() {
        // Doubling amplitude adds log 4 to the mean power.
        let frame: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let doubled: Vec<f64> = frame.iter().map(|v| v * 2.0).collect();
        let a = time_energy(&frame, ENERGY_FLOOR).unwrap();
        let b = time_energy(&doubled, ENERGY_FLOOR).unwrap();
        assert!((b - a - 4.0_f64.ln()).abs() < 1e-12);
    }
}
