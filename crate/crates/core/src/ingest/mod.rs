//! Signal ingestion: CSV and EDF readers plus resampling to the pipeline's
//! common rate.
//!
//! Everything downstream assumes one [`SignalRecord`] per recording, with
//! per-channel sample rates. [`resample`] brings every channel to a common
//! rate (250 Hz by default) before framing.

mod csv;
mod edf;
mod resample;

pub use csv::{read_csv_signal, write_csv_signal};
pub use edf::read_edf_signal;
pub use resample::resample;

use crate::error::{Error, Result};

/// One channel of sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    /// Sample rate in Hz.
    pub sample_rate: f64,
    /// Amplitudes in microvolts.
    pub samples: Vec<f64>,
}

impl Channel {
    pub fn new(name: impl Into<String>, sample_rate: f64, samples: Vec<f64>) -> Result<Self> {
        if sample_rate <= 0.0 || !sample_rate.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "channel sample rate must be positive, got {sample_rate}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        Ok(Channel {
            name: name.into(),
            sample_rate,
            samples,
        })
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// A multichannel recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    pub record_id: String,
    pub channels: Vec<Channel>,
}

impl SignalRecord {
    /// Build a record, enforcing unique channel names and non-empty channels.
    pub fn new(record_id: impl Into<String>, channels: Vec<Channel>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::EmptySignal);
        }
        for (i, ch) in channels.iter().enumerate() {
            if ch.samples.is_empty() {
                return Err(Error::EmptySignal);
            }
            if channels[..i].iter().any(|other| other.name == ch.name) {
                return Err(Error::InvalidSpec(format!(
                    "duplicate channel name `{}`",
                    ch.name
                )));
            }
        }
        Ok(SignalRecord {
            record_id: record_id.into(),
            channels,
        })
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }
}

/// Parameters of the windowed-sinc resampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleSpec {
    /// Target sample rate in Hz.
    pub target_rate: f64,
    /// Number of sinc taps per output sample; odd, >= 3.
    pub filter_taps: usize,
    /// Kaiser window shape parameter.
    pub kaiser_beta: f64,
}

impl Default for ResampleSpec {
    fn default() -> Self {
        ResampleSpec {
            target_rate: 250.0,
            filter_taps: 127,
            kaiser_beta: 8.6,
        }
    }
}

impl ResampleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.target_rate <= 0.0 || !self.target_rate.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "target rate must be positive, got {}",
                self.target_rate
            )));
        }
        if self.filter_taps < 3 || self.filter_taps % 2 == 0 {
            return Err(Error::InvalidSpec(format!(
                "filter taps must be odd and >= 3, got {}",
                self.filter_taps
            )));
        }
        if self.kaiser_beta < 0.0 || !self.kaiser_beta.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "kaiser beta must be non-negative, got {}",
                self.kaiser_beta
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_rejects_duplicate_channel_names() {
        let a = Channel::new("FP1", 250.0, vec![0.0]).unwrap();
        let b = Channel::new("FP1", 250.0, vec![1.0]).unwrap();
        assert!(matches!(
            SignalRecord::new("r", vec![a, b]),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn channel_rejects_empty_samples() {
        assert!(matches!(
            Channel::new("FP1", 250.0, vec![]),
            Err(Error::EmptySignal)
        ));
        assert!(Channel::new("FP1", 0.0, vec![1.0]).is_err());
    }

    #[test]
    fn resample_spec_validation() {
        assert!(ResampleSpec::default().validate().is_ok());
        let bad = ResampleSpec {
            filter_taps: 4,
            ..ResampleSpec::default()
        };
        assert!(bad.validate().is_err());
    }
}
