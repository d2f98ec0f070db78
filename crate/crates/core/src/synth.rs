//! Labeled synthetic multichannel corpora for end-to-end experiments.
//!
//! Clinical recordings cannot ship with this repository, so training and
//! evaluation run on generated records: 1/f-shaped Gaussian background with a
//! slow gain drift, plus per-class event waveforms inserted on a schedule
//! that tracks the configured class priors. Every inserted event is emitted
//! as a [`LabelSpan`], and the center time of every discrete transient is
//! reported as a [`Pulse`] so tests can locate individual discharges exactly.
//! Output is a pure function of the spec, including its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::classes::{ClassMap, EventClass};
use crate::error::{Error, Result};
use crate::eval::LabelSpan;
use crate::ingest::{Channel, SignalRecord};

/// Fraction of the nominal discharge period each inter-pulse gap may deviate
/// by in the quasi-periodic classes.
pub const PERIOD_JITTER: f64 = 0.1;

/// Below this frequency the background spectrum stays flat instead of
/// continuing to grow as 1/f.
const PINK_KNEE_HZ: f64 = 0.5;

/// Biphasic pulse widths per class, seconds. Narrow pulses spread energy
/// across the band; wide ones concentrate it at low frequency, which is what
/// separates the discharge classes spectrally.
const SPSW_WIDTH: (f64, f64) = (0.08, 0.2);
const GPED_WIDTH: (f64, f64) = (0.05, 0.09);
const PLED_WIDTH: (f64, f64) = (0.12, 0.2);

/// Slow-wave width range for ocular deflections, seconds. A Gaussian hump of
/// width w has its energy below roughly 2/w Hz, so these stay under 4 Hz.
const EYEM_WIDTH: (f64, f64) = (0.5, 1.0);

/// Waveform parameters for one event class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventParams {
    /// Peak amplitude range in microvolts.
    pub amplitude: (f64, f64),
    /// Labeled event duration range in seconds.
    pub duration: (f64, f64),
    /// Discharge repetition rate range in Hz, for the quasi-periodic classes.
    pub rate: Option<(f64, f64)>,
}

impl EventParams {
    fn validate(&self, class: EventClass) -> Result<()> {
        let check = |name: &str, (lo, hi): (f64, f64)| {
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
                return Err(Error::InvalidSpec(format!(
                    "{class} {name} range must satisfy 0 < lo < hi, got [{lo}, {hi}]"
                )));
            }
            Ok(())
        };
        check("amplitude", self.amplitude)?;
        check("duration", self.duration)?;
        if let Some(rate) = self.rate {
            check("rate", rate)?;
        }
        Ok(())
    }
}

/// Full description of a synthetic corpus record.
///
/// Generation is deterministic: the same spec always produces bit-identical
/// samples, labels, and pulses. Channels draw from independent streams
/// derived from `seed`, so a record is reproducible channel by channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    /// Record length in seconds.
    pub duration: f64,
    pub num_channels: usize,
    /// Sample rate in Hz.
    pub sample_rate: f64,
    /// Target fraction of recorded time per class; must sum to 1.
    pub class_priors: ClassMap<f64>,
    /// Per-class waveform parameters. The BCKG entry's duration range sets
    /// the length of unlabeled gaps; its amplitude and rate are unused.
    pub event_params: ClassMap<EventParams>,
    /// RMS of the background noise before drift, microvolts.
    pub background_rms: f64,
    /// Relative depth of the slow background gain drift, in [0, 1).
    pub drift_depth: f64,
    /// Period of the gain drift in seconds.
    pub drift_period: f64,
}

impl SynthSpec {
    /// Spec with the default clinically skewed priors, where background
    /// dominates and isolated spikes are rarest.
    pub fn new(seed: u64, duration: f64, num_channels: usize) -> Self {
        SynthSpec {
            seed,
            duration,
            num_channels,
            sample_rate: 250.0,
            class_priors: default_priors(),
            event_params: default_event_params(),
            background_rms: 10.0,
            drift_depth: 0.3,
            drift_period: 40.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if self.num_channels == 0 {
            return Err(Error::InvalidSpec("num_channels must be >= 1".into()));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if (self.duration * self.sample_rate).round() < 16.0 {
            return Err(Error::InvalidSpec(
                "record too short: need at least 16 samples".into(),
            ));
        }
        if !(self.background_rms.is_finite() && self.background_rms > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "background RMS must be positive, got {}",
                self.background_rms
            )));
        }
        if !(0.0..1.0).contains(&self.drift_depth) {
            return Err(Error::InvalidSpec(format!(
                "drift depth must be in [0, 1), got {}",
                self.drift_depth
            )));
        }
        if !(self.drift_period.is_finite() && self.drift_period > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "drift period must be positive, got {}",
                self.drift_period
            )));
        }
        let mut sum = 0.0;
        for (class, &p) in self.class_priors.iter() {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "prior for {class} must be a finite nonnegative fraction, got {p}"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "class priors must sum to 1 within 1e-9, got {sum}"
            )));
        }
        for (class, params) in self.event_params.iter() {
            params.validate(class)?;
            if params.rate.is_none() && matches!(class, EventClass::Gped | EventClass::Pled) {
                return Err(Error::InvalidSpec(format!(
                    "{class} is quasi-periodic and needs a rate range"
                )));
            }
        }
        Ok(())
    }
}

/// Time-fraction priors mirroring a clinical corpus: background dominates,
/// isolated spikes are rarest.
pub fn default_priors() -> ClassMap<f64> {
    let counts = ClassMap([645.0, 6184.0, 11254.0, 1170.0, 11053.0, 53726.0]);
    let total: f64 = counts.0.iter().sum();
    ClassMap(counts.0.map(|c| c / total))
}

/// Default waveform parameters. Discharge rates sit in the 1-2 Hz band
/// typical of periodic EEG discharges; ocular events are slower and larger.
pub fn default_event_params() -> ClassMap<EventParams> {
    let mut params = ClassMap([EventParams {
        amplitude: (30.0, 70.0),
        duration: (1.0, 2.0),
        rate: None,
    }; EventClass::COUNT]);
    *params.get_mut(EventClass::Spsw) = EventParams {
        amplitude: (30.0, 70.0),
        duration: (0.8, 1.4),
        rate: None,
    };
    *params.get_mut(EventClass::Gped) = EventParams {
        amplitude: (25.0, 60.0),
        duration: (2.0, 5.0),
        rate: Some((1.0, 2.0)),
    };
    *params.get_mut(EventClass::Pled) = EventParams {
        amplitude: (25.0, 60.0),
        duration: (2.0, 5.0),
        rate: Some((1.0, 2.0)),
    };
    *params.get_mut(EventClass::Eyem) = EventParams {
        amplitude: (60.0, 120.0),
        duration: (1.0, 2.0),
        rate: None,
    };
    *params.get_mut(EventClass::Artf) = EventParams {
        amplitude: (25.0, 60.0),
        duration: (1.0, 3.0),
        rate: None,
    };
    *params.get_mut(EventClass::Bckg) = EventParams {
        amplitude: (1.0, 2.0),
        duration: (1.0, 4.0),
        rate: None,
    };
    params
}

/// Center time of one discrete transient: a spike, one discharge of a train,
/// an ocular deflection, or the middle of an artifact burst.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub channel: String,
    pub class: EventClass,
    /// Seconds from record start.
    pub time: f64,
}

/// A generated record with its ground-truth annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub record: SignalRecord,
    /// Every inserted event, in channel order then time order. Gaps between
    /// spans are background.
    pub labels: Vec<LabelSpan>,
    pub pulses: Vec<Pulse>,
}

/// Generate one multichannel record from a spec.
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let samples_per_channel = (spec.duration * spec.sample_rate).round() as usize;
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(samples_per_channel);
    let mut channels = Vec::with_capacity(spec.num_channels);
    let mut labels = Vec::new();
    let mut pulses = Vec::new();
    for ch in 0..spec.num_channels {
        let name = format!("CH{ch:02}");
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(spec.seed, ch as u64));
        let mut samples = background(samples_per_channel, spec, ifft.as_ref(), &mut rng);
        schedule_events(&mut samples, spec, &name, &mut rng, &mut labels, &mut pulses);
        channels.push(Channel::new(name, spec.sample_rate, samples)?);
    }
    let record = SignalRecord::new(format!("synth-{:08x}", spec.seed), channels)?;
    Ok(SynthOutput {
        record,
        labels,
        pulses,
    })
}

/// Derive an independent stream seed per lane (channel here; callers
/// generating several records in parallel can reuse it per record). This is
/// the 64-bit finalizer from SplitMix64.
pub fn sub_seed(master: u64, lane: u64) -> u64 {
    let mut z = master ^ lane.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 1/f-shaped Gaussian noise at the configured RMS, multiplied by a slow
/// sinusoidal gain drift so absolute signal level wanders over tens of
/// seconds the way scalp contact quality does.
fn background(n: usize, spec: &SynthSpec, ifft: &dyn Fft<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let rate = spec.sample_rate;
    let mut spectrum = vec![Complex::new(0.0, 0.0); n];
    for k in 1..=n / 2 {
        let freq = k as f64 * rate / n as f64;
        let amp = (PINK_KNEE_HZ / freq.max(PINK_KNEE_HZ)).sqrt();
        let re = amp * rng.sample::<f64, _>(StandardNormal);
        let im = amp * rng.sample::<f64, _>(StandardNormal);
        if 2 * k == n {
            // Nyquist bin is its own conjugate and must stay real.
            spectrum[k] = Complex::new(re, 0.0);
        } else {
            spectrum[k] = Complex::new(re, im);
            spectrum[n - k] = Complex::new(re, -im);
        }
    }
    ifft.process(&mut spectrum);
    let mut samples: Vec<f64> = spectrum.iter().map(|c| c.re).collect();
    let rms = (samples.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    let scale = spec.background_rms / rms;
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    for (i, x) in samples.iter_mut().enumerate() {
        let t = i as f64 / rate;
        let gain =
            1.0 + spec.drift_depth * (std::f64::consts::TAU * t / spec.drift_period + phase).sin();
        *x *= scale * gain;
    }
    samples
}

/// Tile the record with segments, always giving the next segment to the
/// class furthest below its prior. Segment lengths come from each class's
/// duration range, so fractions converge to the priors at the rate of one
/// maximum segment length per record length.
fn schedule_events(
    samples: &mut [f64],
    spec: &SynthSpec,
    channel: &str,
    rng: &mut ChaCha8Rng,
    labels: &mut Vec<LabelSpan>,
    pulses: &mut Vec<Pulse>,
) {
    let mut elapsed = 0.0_f64;
    let mut scheduled = ClassMap::<f64>::default();
    while elapsed < spec.duration - 1e-9 {
        let remaining = spec.duration - elapsed;
        let mut class = EventClass::Bckg;
        let mut best = f64::NEG_INFINITY;
        for c in EventClass::ALL {
            let prior = *spec.class_priors.get(c);
            if prior == 0.0 {
                continue;
            }
            let fraction = if elapsed > 0.0 {
                scheduled.get(c) / elapsed
            } else {
                0.0
            };
            let deficit = prior - fraction;
            if deficit > best {
                best = deficit;
                class = c;
            }
        }
        // Too little room left for this event class: pad with background.
        if class != EventClass::Bckg && remaining < spec.event_params.get(class).duration.0 {
            class = EventClass::Bckg;
        }
        let params = spec.event_params.get(class);
        let seg = rng
            .random_range(params.duration.0..params.duration.1)
            .min(remaining);
        let (start, stop) = (elapsed, elapsed + seg);
        if class != EventClass::Bckg {
            let mut centers = Vec::new();
            insert_event(samples, spec.sample_rate, class, start, stop, params, rng, &mut centers);
            labels.push(LabelSpan {
                channel: channel.to_string(),
                start,
                stop,
                label: class,
            });
            pulses.extend(centers.into_iter().map(|time| Pulse {
                channel: channel.to_string(),
                class,
                time,
            }));
        }
        *scheduled.get_mut(class) += seg;
        elapsed = stop;
    }
}

#[allow(clippy::too_many_arguments)]
fn insert_event(
    samples: &mut [f64],
    rate: f64,
    class: EventClass,
    start: f64,
    stop: f64,
    params: &EventParams,
    rng: &mut ChaCha8Rng,
    centers: &mut Vec<f64>,
) {
    let amp = rng.random_range(params.amplitude.0..params.amplitude.1);
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    match class {
        EventClass::Spsw => {
            let width = rng.random_range(SPSW_WIDTH.0..SPSW_WIDTH.1);
            let center = start + rng.random_range(0.25..0.75) * (stop - start);
            add_biphasic(samples, rate, center, width, sign * amp);
            centers.push(center);
        }
        EventClass::Gped | EventClass::Pled => {
            let (wlo, whi) = if class == EventClass::Gped {
                GPED_WIDTH
            } else {
                PLED_WIDTH
            };
            let width = rng.random_range(wlo..whi);
            let rate_range = params.rate.expect("validated: periodic class has a rate");
            let hz = rng.random_range(rate_range.0..rate_range.1);
            let period = 1.0 / hz;
            let mut t = start + width;
            while t + width <= stop {
                add_biphasic(samples, rate, t, width, sign * amp);
                centers.push(t);
                t += period * (1.0 + PERIOD_JITTER * rng.random_range(-1.0..1.0));
            }
        }
        EventClass::Eyem => {
            let width = rng.random_range(EYEM_WIDTH.0..EYEM_WIDTH.1);
            let center = start + rng.random_range(0.35..0.65) * (stop - start);
            add_hump(samples, rate, center, width, sign * amp);
            centers.push(center);
        }
        EventClass::Artf => {
            let margin = 0.1 * (stop - start);
            add_burst(samples, rate, start + margin, stop - margin, amp / 3.0, rng);
            centers.push(0.5 * (start + stop));
        }
        EventClass::Bckg => unreachable!("background segments are not events"),
    }
}

/// Add a derivative-of-Gaussian pulse: one upward and one downward lobe,
/// peak magnitude `amp`, total support about `width`.
fn add_biphasic(samples: &mut [f64], rate: f64, center: f64, width: f64, amp: f64) {
    // Peak of |z·exp(-z²/2)| is exp(-1/2) at z = ±1.
    let norm = 0.5_f64.exp();
    let sigma = width / 6.0;
    sample_range(samples, rate, center - 3.0 * sigma, center + 3.0 * sigma, |t| {
        let z = (t - center) / sigma;
        amp * norm * -z * (-0.5 * z * z).exp()
    });
}

/// Add a monophasic Gaussian hump of peak `amp` and total support `width`.
fn add_hump(samples: &mut [f64], rate: f64, center: f64, width: f64, amp: f64) {
    let sigma = width / 4.0;
    sample_range(samples, rate, center - 2.0 * sigma, center + 2.0 * sigma, |t| {
        let z = (t - center) / sigma;
        amp * (-0.5 * z * z).exp()
    });
}

/// Add white noise of standard deviation `sigma` under a raised-cosine
/// envelope spanning [start, stop].
fn add_burst(
    samples: &mut [f64],
    rate: f64,
    start: f64,
    stop: f64,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) {
    if stop <= start {
        return;
    }
    let span = stop - start;
    sample_range(samples, rate, start, stop, |t| {
        let envelope = 0.5 * (1.0 - (std::f64::consts::TAU * (t - start) / span).cos());
        envelope * sigma * rng.sample::<f64, _>(StandardNormal)
    });
}

/// Apply `wave(t)` additively over the sample indices covering [lo, hi],
/// clamped to the buffer.
fn sample_range(
    samples: &mut [f64],
    rate: f64,
    lo: f64,
    hi: f64,
    mut wave: impl FnMut(f64) -> f64,
) {
    let first = (lo * rate).ceil().max(0.0) as usize;
    let last = ((hi * rate).floor() as usize).min(samples.len().saturating_sub(1));
    for i in first..=last {
        samples[i] += wave(i as f64 / rate);
    }
}
