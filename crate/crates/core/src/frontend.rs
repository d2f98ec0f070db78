//! Cepstral front end: framing, magnitude spectrum through a linear-frequency
//! triangular filter bank, and DCT to cepstral coefficients.
//!
//! One channel at the common rate turns into a sequence of 7-dimensional
//! cepstral vectors (the zeroth coefficient is discarded) plus the retained
//! filter-bank outputs that the energy terms are computed from. The filter
//! bank is linearly spaced: EEG offers no reason for a perceptual warp.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Number of cepstral coefficients retained per frame (c1..c7).
pub const NUM_CEPSTRA: usize = 7;

/// Floor applied to filter-bank outputs before taking logs.
pub const LOG_FLOOR: f64 = 1e-10;

/// Analysis window applied to each frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowFunction {
    Rectangular,
    Hamming,
}

impl WindowFunction {
    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowFunction::Rectangular => vec![1.0; len],
            WindowFunction::Hamming => (0..len)
                .map(|n| {
                    0.54 - 0.46
                        * (2.0 * std::f64::consts::PI * n as f64 / (len - 1) as f64).cos()
                })
                .collect(),
        }
    }
}

impl std::str::FromStr for WindowFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rectangular" => Ok(WindowFunction::Rectangular),
            "hamming" => Ok(WindowFunction::Hamming),
            other => Err(Error::Config(format!("unknown window function `{other}`"))),
        }
    }
}

/// Frame geometry: 0.2 s windows every 0.1 s by default (50% overlap).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSpec {
    pub window_dur: f64,
    pub step_dur: f64,
    pub sample_rate: f64,
    pub window_function: WindowFunction,
}

impl FrameSpec {
    pub fn new(
        window_dur: f64,
        step_dur: f64,
        sample_rate: f64,
        window_function: WindowFunction,
    ) -> Result<Self> {
        let spec = FrameSpec {
            window_dur,
            step_dur,
            sample_rate,
            window_function,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Default geometry at the given rate.
    pub fn at_rate(sample_rate: f64) -> Result<Self> {
        FrameSpec::new(0.2, 0.1, sample_rate, WindowFunction::Hamming)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_dur > 0.0 && self.step_dur <= self.window_dur) {
            return Err(Error::InvalidSpec(format!(
                "need 0 < step_dur <= window_dur, got step {} window {}",
                self.step_dur, self.window_dur
            )));
        }
        if self.sample_rate <= 0.0 {
            return Err(Error::InvalidSpec("sample rate must be positive".into()));
        }
        if self.window_samples() < 2 {
            return Err(Error::InvalidSpec(
                "window must span at least 2 samples".into(),
            ));
        }
        Ok(())
    }

    pub fn window_samples(&self) -> usize {
        (self.window_dur * self.sample_rate).round() as usize
    }

    pub fn step_samples(&self) -> usize {
        (self.step_dur * self.sample_rate).round().max(1.0) as usize
    }

    /// Number of frames produced from `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        let window = self.window_samples();
        if len < window {
            0
        } else {
            (len - window) / self.step_samples() + 1
        }
    }
}

/// Linear-frequency triangular filter bank over a zero-padded FFT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterBankSpec {
    pub num_filters: usize,
    pub low_freq: f64,
    pub high_freq: f64,
    /// FFT length; power of two, at least the window length.
    pub fft_size: usize,
    pub sample_rate: f64,
}

impl FilterBankSpec {
    /// Defaults: 20 filters tiling 0..Nyquist, 256-point FFT.
    pub fn at_rate(sample_rate: f64) -> Self {
        FilterBankSpec {
            num_filters: 20,
            low_freq: 0.0,
            high_freq: sample_rate / 2.0,
            fft_size: 256,
            sample_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_filters == 0 {
            return Err(Error::InvalidSpec("need at least one filter".into()));
        }
        if !(0.0 <= self.low_freq && self.low_freq < self.high_freq) {
            return Err(Error::InvalidSpec(format!(
                "need 0 <= low_freq < high_freq, got {} and {}",
                self.low_freq, self.high_freq
            )));
        }
        if self.high_freq > self.sample_rate / 2.0 + 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "high_freq {} exceeds Nyquist {}",
                self.high_freq,
                self.sample_rate / 2.0
            )));
        }
        if !self.fft_size.is_power_of_two() {
            return Err(Error::InvalidSpec(format!(
                "fft_size must be a power of two, got {}",
                self.fft_size
            )));
        }
        Ok(())
    }

    /// Filter boundary points: `num_filters + 2` equally spaced frequencies.
    /// Filter k rises over [f_k, f_{k+1}] and falls over [f_{k+1}, f_{k+2}],
    /// so adjacent filters overlap by half their base.
    pub fn boundaries(&self) -> Vec<f64> {
        let n = self.num_filters + 2;
        (0..n)
            .map(|j| {
                self.low_freq
                    + j as f64 * (self.high_freq - self.low_freq) / (n - 1) as f64
            })
            .collect()
    }

    /// Frequency of FFT bin `k`.
    pub fn bin_freq(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate / self.fft_size as f64
    }

    /// Triangle weight of `filter` at frequency `freq`.
    pub fn weight_at(&self, filter: usize, freq: f64) -> f64 {
        let bounds = self.boundaries();
        let (left, center, right) = (bounds[filter], bounds[filter + 1], bounds[filter + 2]);
        if freq >= left && freq <= center {
            if center == left {
                0.0
            } else {
                (freq - left) / (center - left)
            }
        } else if freq > center && freq <= right {
            (right - freq) / (right - center)
        } else {
            0.0
        }
    }
}

/// Magnitude spectrum and filter-bank outputs of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame {
    /// FFT magnitudes, bins 0..=fft_size/2.
    pub magnitudes: Vec<f64>,
    /// Triangle-weighted sums of the magnitudes, one per filter.
    pub filter_outputs: Vec<f64>,
}

/// The retained cepstral coefficients c1..c7 of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CepstralFrame {
    pub cepstra: [f64; NUM_CEPSTRA],
}

/// Slice a signal into windowed frames.
///
/// Frame `i` covers samples `[i*step, i*step + window)`; the window function
/// is applied pointwise. Fails with [`Error::SignalTooShort`] when the signal
/// cannot fill one window.
pub fn frame_signal(samples: &[f64], spec: &FrameSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let window = spec.window_samples();
    let step = spec.step_samples();
    if samples.len() < window {
        return Err(Error::SignalTooShort {
            len: samples.len(),
            window,
        });
    }
    let coeffs = spec.window_function.coefficients(window);
    let count = (samples.len() - window) / step + 1;
    let mut frames = Vec::with_capacity(count);
    for i in 0..count {
        let start = i * step;
        frames.push(
            samples[start..start + window]
                .iter()
                .zip(&coeffs)
                .map(|(s, w)| s * w)
                .collect(),
        );
    }
    Ok(frames)
}

/// Reusable FFT plan plus precomputed filter weights.
///
/// [`spectrum`] wraps this for one-off use; per-channel loops should build
/// one analyzer and feed it every frame.
pub struct SpectrumAnalyzer {
    spec: FilterBankSpec,
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    /// Per filter: first bin index and the triangle weights from that bin on.
    filters: Vec<(usize, Vec<f64>)>,
}

impl SpectrumAnalyzer {
    pub fn new(spec: FilterBankSpec) -> Result<Self> {
        spec.validate()?;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(spec.fft_size);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        let half_bins = spec.fft_size / 2 + 1;
        let filters = (0..spec.num_filters)
            .map(|k| {
                let mut start = None;
                let mut weights = Vec::new();
                for bin in 0..half_bins {
                    let w = spec.weight_at(k, spec.bin_freq(bin));
                    if w > 0.0 {
                        if start.is_none() {
                            start = Some(bin);
                        }
                        weights.push(w);
                    } else if start.is_some() {
                        break;
                    }
                }
                (start.unwrap_or(0), weights)
            })
            .collect();
        Ok(SpectrumAnalyzer {
            buffer: vec![Complex::default(); spec.fft_size],
            spec,
            fft,
            scratch,
            filters,
        })
    }

    pub fn spec(&self) -> &FilterBankSpec {
        &self.spec
    }

    /// Magnitude spectrum of the zero-padded frame plus filter outputs.
    pub fn analyze(&mut self, frame: &[f64]) -> Result<SpectralFrame> {
        if frame.len() > self.spec.fft_size {
            return Err(Error::InvalidSpec(format!(
                "frame of {} samples exceeds fft_size {}",
                frame.len(),
                self.spec.fft_size
            )));
        }
        for (slot, &s) in self.buffer.iter_mut().zip(frame) {
            *slot = Complex::new(s, 0.0);
        }
        for slot in self.buffer.iter_mut().skip(frame.len()) {
            *slot = Complex::default();
        }
        self.fft
            .process_with_scratch(&mut self.buffer, &mut self.scratch);

        let half_bins = self.spec.fft_size / 2 + 1;
        let magnitudes: Vec<f64> = self.buffer[..half_bins].iter().map(|c| c.norm()).collect();
        let filter_outputs = self
            .filters
            .iter()
            .map(|(start, weights)| {
                weights
                    .iter()
                    .zip(&magnitudes[*start..])
                    .map(|(w, m)| w * m)
                    .sum()
            })
            .collect();
        Ok(SpectralFrame {
            magnitudes,
            filter_outputs,
        })
    }
}

/// One-off spectrum of a single frame. Builds a throwaway analyzer; loops
/// should hold a [`SpectrumAnalyzer`] instead.
pub fn spectrum(frame: &[f64], spec: &FilterBankSpec) -> Result<SpectralFrame> {
    SpectrumAnalyzer::new(*spec)?.analyze(frame)
}

/// Cepstral coefficients c1..c7: orthonormal DCT-II of the floored log
/// filter outputs, zeroth coefficient discarded.
pub fn cepstrum(spectral: &SpectralFrame) -> CepstralFrame {
    let m = spectral.filter_outputs.len() as f64;
    let logs: Vec<f64> = spectral
        .filter_outputs
        .iter()
        .map(|&v| v.max(LOG_FLOOR).ln())
        .collect();
    let scale = (2.0 / m).sqrt();
    let mut cepstra = [0.0; NUM_CEPSTRA];
    for (j, slot) in cepstra.iter_mut().enumerate() {
        let order = (j + 1) as f64;
        *slot = scale
            * logs
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    v * (std::f64::consts::PI * order * (2 * i + 1) as f64 / (2.0 * m)).cos()
                })
                .sum::<f64>();
    }
    CepstralFrame { cepstra }
}
