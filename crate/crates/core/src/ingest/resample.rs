//! Windowed-sinc rational polyphase resampler.
//!
//! The conversion ratio is reduced to a rational L/M, one Kaiser-windowed
//! sinc filter is precomputed per output phase, and the signal is extended
//! by reflection at the boundaries so record edges do not ring.

use crate::error::{Error, Result};
use crate::ingest::{Channel, ResampleSpec};

/// Resample one channel to `spec.target_rate`.
///
/// Output length is `round(len * target_rate / input_rate)`. Equal input and
/// output rates return the input unchanged.
pub fn resample(channel: &Channel, spec: &ResampleSpec) -> Result<Channel> {
    spec.validate()?;
    if channel.samples.is_empty() {
        return Err(Error::EmptySignal);
    }
    let in_rate = channel.sample_rate;
    let out_rate = spec.target_rate;
    if (in_rate - out_rate).abs() <= f64::EPSILON * in_rate.max(out_rate) {
        return Ok(channel.clone());
    }

    let ratio = out_rate / in_rate;
    let (up, down) = rational_approximation(ratio, 8192);
    let out_len = (channel.samples.len() as f64 * ratio).round() as usize;
    if out_len == 0 {
        return Err(Error::EmptySignal);
    }

    let phases = phase_filters(up, down, spec.filter_taps, spec.kaiser_beta);
    let half = (spec.filter_taps / 2) as isize;
    let x = &channel.samples;
    let len = x.len() as isize;

    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len as u64 {
        // Input position of output sample n is n * down / up.
        let num = n * down as u64;
        let k0 = (num / up as u64) as isize;
        let phase = (num % up as u64) as usize;
        let taps = &phases[phase];
        let mut acc = 0.0;
        for (i, &tap) in taps.iter().enumerate() {
            let k = k0 - half + i as isize;
            acc += tap * x[reflect(k, len)];
        }
        out.push(acc);
    }

    Channel::new(channel.name.clone(), out_rate, out)
}

/// Reflect an out-of-range index back into `[0, len)` without repeating the
/// edge sample (reflection about the boundary samples themselves).
fn reflect(mut idx: isize, len: isize) -> usize {
    debug_assert!(len >= 1);
    if len == 1 {
        return 0;
    }
    loop {
        if idx < 0 {
            idx = -idx;
        } else if idx >= len {
            idx = 2 * (len - 1) - idx;
        } else {
            return idx as usize;
        }
    }
}

/// Reduce `ratio` to the closest fraction up/down with `down <= max_den`,
/// via continued fractions.
fn rational_approximation(ratio: f64, max_den: u32) -> (u32, u32) {
    debug_assert!(ratio > 0.0 && ratio.is_finite());
    let mut x = ratio;
    let (mut h0, mut h1) = (1u64, x.floor() as u64);
    let (mut k0, mut k1) = (0u64, 1u64);
    loop {
        let frac = x - x.floor();
        if frac < 1e-12 {
            break;
        }
        x = 1.0 / frac;
        let a = x.floor() as u64;
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > max_den as u64 {
            break;
        }
        (h0, h1) = (h1, h2);
        (k0, k1) = (k1, k2);
        if (h1 as f64 / k1 as f64 - ratio).abs() <= 1e-12 * ratio {
            break;
        }
    }
    (h1.max(1) as u32, k1 as u32)
}

/// One `taps`-long filter per output phase, each normalized to unit DC gain.
fn phase_filters(up: u32, down: u32, taps: usize, beta: f64) -> Vec<Vec<f64>> {
    let half = (taps / 2) as f64;
    // Cutoff at the smaller of the two Nyquist frequencies, in units of the
    // input rate.
    let cutoff = (up as f64 / down as f64).min(1.0);
    let support = taps as f64 / 2.0;
    let denom = bessel_i0(beta);

    (0..up)
        .map(|phase| {
            let frac = phase as f64 / up as f64;
            let mut filt: Vec<f64> = (0..taps)
                .map(|i| {
                    // Offset of tap i from the exact (fractional) position.
                    let u = frac + half - i as f64;
                    let w = if u.abs() >= support {
                        0.0
                    } else {
                        bessel_i0(beta * (1.0 - (u / support).powi(2)).sqrt()) / denom
                    };
                    cutoff * sinc(cutoff * u) * w
                })
                .collect();
            let sum: f64 = filt.iter().sum();
            for tap in &mut filt {
                *tap /= sum;
            }
            filt
        })
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Zeroth-order modified Bessel function of the first kind, by power series.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}
