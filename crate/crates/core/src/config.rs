//! Flat key=value configuration for the command-line tools.
//!
//! One `key = value` pair per line, `#` comments, blank lines ignored. Keys
//! are validated against the full schema at load time so typos fail fast,
//! and every key has a default, so an empty config is a valid config.
//! Command-line flags override file values via [`Config::set`].
//!
//! Keys by module:
//!   ingest.target_rate
//!   frontend.window_dur .step_dur .window_function .num_filters
//!            .low_freq .high_freq .fft_size
//!   energy.diff_window_dur .floor
//!   delta.n_first .n_second
//!   train.num_states .num_mixtures .viterbi_passes .max_em_iters
//!         .em_tol .variance_floor_factor
//!   det.num_points
//!   synth.duration .num_channels .sample_rate .background_rms
//!         .drift_depth .drift_period
//!   synth.prior.<class>                        (all six, must still sum to 1)
//!   synth.<class>.amp_lo .amp_hi .dur_lo .dur_hi
//!   synth.<gped|pled>.rate_lo .rate_hi

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::classes::EventClass;
use crate::dynamics::DeltaSpec;
use crate::energy::DiffEnergySpec;
use crate::error::{Error, Result};
use crate::frontend::{FilterBankSpec, FrameSpec, WindowFunction};
use crate::models::TrainSpec;
use crate::synth::SynthSpec;

/// Parsed configuration. Later `set` calls win over file contents.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    /// Load and validate a config file.
    pub fn read(path: &Path) -> Result<Config> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| Error::parse(path, line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(Error::parse(path, line, "empty key or value"));
            }
            if !is_known_key(key) {
                return Err(Error::parse(path, line, format!("unknown config key `{key}`")));
            }
            if config.entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::parse(path, line, format!("duplicate key `{key}`")));
            }
        }
        Ok(config)
    }

    /// Override one key, as a command-line flag does.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !is_known_key(key) {
            return Err(Error::Config(format!("unknown config key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.into());
        Ok(())
    }

    /// Override from a `key=value` argument.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{pair}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::Config(format!("empty key or value in `{pair}`")));
        }
        self.set(key, value)
    }

    fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                Error::Config(format!("key `{key}`: expected a number, got `{v}`"))
            }),
        }
    }

    fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                Error::Config(format!("key `{key}`: expected a nonnegative integer, got `{v}`"))
            }),
        }
    }

    /// Common sample rate every channel is resampled to before framing.
    pub fn target_rate(&self) -> Result<f64> {
        self.get_f64("ingest.target_rate", 250.0)
    }

    pub fn frame_spec(&self, sample_rate: f64) -> Result<FrameSpec> {
        let window_function = match self.entries.get("frontend.window_function") {
            None => WindowFunction::Hamming,
            Some(v) => v.parse()?,
        };
        FrameSpec::new(
            self.get_f64("frontend.window_dur", 0.2)?,
            self.get_f64("frontend.step_dur", 0.1)?,
            sample_rate,
            window_function,
        )
    }

    pub fn filter_bank(&self, sample_rate: f64) -> Result<FilterBankSpec> {
        let bank = FilterBankSpec {
            num_filters: self.get_usize("frontend.num_filters", 20)?,
            low_freq: self.get_f64("frontend.low_freq", 0.0)?,
            high_freq: self.get_f64("frontend.high_freq", sample_rate / 2.0)?,
            fft_size: self.get_usize("frontend.fft_size", 256)?,
            sample_rate,
        };
        bank.validate()?;
        Ok(bank)
    }

    pub fn diff_energy_spec(&self, step_dur: f64) -> Result<DiffEnergySpec> {
        let mut spec =
            DiffEnergySpec::new(self.get_f64("energy.diff_window_dur", 0.9)?, step_dur)?;
        spec.floor = self.get_f64("energy.floor", spec.floor)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn delta_spec(&self) -> Result<DeltaSpec> {
        let defaults = DeltaSpec::default();
        let spec = DeltaSpec {
            n_first: self.get_usize("delta.n_first", defaults.n_first)?,
            n_second: self.get_usize("delta.n_second", defaults.n_second)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn train_spec(&self, seed: u64) -> Result<TrainSpec> {
        let d = TrainSpec::default();
        let spec = TrainSpec {
            num_states: self.get_usize("train.num_states", d.num_states)?,
            num_mixtures: self.get_usize("train.num_mixtures", d.num_mixtures)?,
            viterbi_passes: self.get_usize("train.viterbi_passes", d.viterbi_passes)?,
            max_em_iters: self.get_usize("train.max_em_iters", d.max_em_iters)?,
            em_tol: self.get_f64("train.em_tol", d.em_tol)?,
            variance_floor_factor: self
                .get_f64("train.variance_floor_factor", d.variance_floor_factor)?,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Number of operating points on a detection tradeoff curve.
    pub fn det_points(&self) -> Result<usize> {
        self.get_usize("det.num_points", 101)
    }

    pub fn synth_spec(&self, seed: u64) -> Result<SynthSpec> {
        let mut spec = SynthSpec::new(
            seed,
            self.get_f64("synth.duration", 60.0)?,
            self.get_usize("synth.num_channels", 1)?,
        );
        spec.sample_rate = self.get_f64("synth.sample_rate", spec.sample_rate)?;
        spec.background_rms = self.get_f64("synth.background_rms", spec.background_rms)?;
        spec.drift_depth = self.get_f64("synth.drift_depth", spec.drift_depth)?;
        spec.drift_period = self.get_f64("synth.drift_period", spec.drift_period)?;
        for class in EventClass::ALL {
            let tok = class.token().to_ascii_lowercase();
            let prior = self.get_f64(&format!("synth.prior.{tok}"), *spec.class_priors.get(class))?;
            *spec.class_priors.get_mut(class) = prior;
            let params = *spec.event_params.get(class);
            let amplitude = (
                self.get_f64(&format!("synth.{tok}.amp_lo"), params.amplitude.0)?,
                self.get_f64(&format!("synth.{tok}.amp_hi"), params.amplitude.1)?,
            );
            let duration = (
                self.get_f64(&format!("synth.{tok}.dur_lo"), params.duration.0)?,
                self.get_f64(&format!("synth.{tok}.dur_hi"), params.duration.1)?,
            );
            let rate = match params.rate {
                Some((lo, hi)) => Some((
                    self.get_f64(&format!("synth.{tok}.rate_lo"), lo)?,
                    self.get_f64(&format!("synth.{tok}.rate_hi"), hi)?,
                )),
                None => None,
            };
            *spec.event_params.get_mut(class) = crate::synth::EventParams {
                amplitude,
                duration,
                rate,
            };
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn is_known_key(key: &str) -> bool {
    const FIXED: &[&str] = &[
        "ingest.target_rate",
        "frontend.window_dur",
        "frontend.step_dur",
        "frontend.window_function",
        "frontend.num_filters",
        "frontend.low_freq",
        "frontend.high_freq",
        "frontend.fft_size",
        "energy.diff_window_dur",
        "energy.floor",
        "delta.n_first",
        "delta.n_second",
        "train.num_states",
        "train.num_mixtures",
        "train.viterbi_passes",
        "train.max_em_iters",
        "train.em_tol",
        "train.variance_floor_factor",
        "det.num_points",
        "synth.duration",
        "synth.num_channels",
        "synth.sample_rate",
        "synth.background_rms",
        "synth.drift_depth",
        "synth.drift_period",
    ];
    if FIXED.contains(&key) {
        return true;
    }
    let Some(rest) = key.strip_prefix("synth.") else {
        return false;
    };
    if let Some(tok) = rest.strip_prefix("prior.") {
        return tok.parse::<EventClass>().is_ok();
    }
    let Some((tok, field)) = rest.split_once('.') else {
        return false;
    };
    let Ok(class) = tok.parse::<EventClass>() else {
        return false;
    };
    match field {
        "amp_lo" | "amp_hi" | "dur_lo" | "dur_hi" => true,
        "rate_lo" | "rate_hi" => matches!(class, EventClass::Gped | EventClass::Pled),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use tempfile::NamedTempFile;

    fn write_config(text: &str) -> NamedTempFile {
        let mut file = NamedTempFile::new().unwrap();
        file.write_all(text.as_bytes()).unwrap();
        file
    }

    #[test]
    fn empty_config_yields_defaults() {
        let config = Config::default();
        let frame = config.frame_spec(250.0).unwrap();
        assert_eq!(frame.window_dur, 0.2);
        assert_eq!(frame.step_dur, 0.1);
        assert_eq!(frame.window_function, WindowFunction::Hamming);
        let bank = config.filter_bank(250.0).unwrap();
        assert_eq!(bank.num_filters, 20);
        assert_eq!(bank.fft_size, 256);
        assert_eq!(bank.high_freq, 125.0);
        assert_eq!(config.target_rate().unwrap(), 250.0);
        assert_eq!(config.delta_spec().unwrap().n_first, 9);
        assert_eq!(config.train_spec(5).unwrap().seed, 5);
        assert_eq!(config.det_points().unwrap(), 101);
    }

    #[test]
    fn file_values_override_defaults() {
        let file = write_config(
            "# front end\nfrontend.window_dur = 0.25\nfrontend.window_function = rectangular\n\ntrain.num_states = 2\n",
        );
        let config = Config::read(file.path()).unwrap();
        let frame = config.frame_spec(250.0).unwrap();
        assert_eq!(frame.window_dur, 0.25);
        assert_eq!(frame.window_function, WindowFunction::Rectangular);
        assert_eq!(config.train_spec(0).unwrap().num_states, 2);
        // Untouched keys keep their defaults.
        assert_eq!(config.train_spec(0).unwrap().num_mixtures, 4);
    }

    #[test]
    fn set_wins_over_file() {
        let file = write_config("delta.n_first = 5\n");
        let mut config = Config::read(file.path()).unwrap();
        config.set_pair("delta.n_first=7").unwrap();
        assert_eq!(config.delta_spec().unwrap().n_first, 7);
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let file = write_config("frontend.window_dur = 0.2\nfrontend.windw_dur = 0.3\n");
        let err = Config::read(file.path()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains("frontend.windw_dur"), "{err}");
        let mut config = Config::default();
        assert!(config.set_pair("nope=1").is_err());
    }

    #[test]
    fn malformed_lines_are_rejected() {
        let file = write_config("frontend.window_dur\n");
        let err = Config::read(file.path()).unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");

        let file = write_config("frontend.window_dur =\n");
        assert!(Config::read(file.path()).is_err());

        let file = write_config("delta.n_first = 3\ndelta.n_first = 5\n");
        let err = Config::read(file.path()).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn bad_values_name_the_key() {
        let mut config = Config::default();
        config.set("frontend.window_dur", "fast").unwrap();
        let err = config.frame_spec(250.0).unwrap_err().to_string();
        assert!(err.contains("frontend.window_dur"), "{err}");
        assert!(err.contains("fast"), "{err}");
    }

    #[test]
    fn synth_keys_build_a_spec() {
        let mut config = Config::default();
        config.set("synth.duration", "30").unwrap();
        config.set("synth.num_channels", "2").unwrap();
        config.set("synth.prior.spsw", "0.5").unwrap();
        config.set("synth.prior.gped", "0").unwrap();
        config.set("synth.prior.pled", "0").unwrap();
        config.set("synth.prior.eyem", "0").unwrap();
        config.set("synth.prior.artf", "0").unwrap();
        config.set("synth.prior.bckg", "0.5").unwrap();
        config.set("synth.spsw.amp_lo", "80").unwrap();
        config.set("synth.spsw.amp_hi", "120").unwrap();
        config.set("synth.gped.rate_lo", "1.5").unwrap();
        let spec = config.synth_spec(9).unwrap();
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.duration, 30.0);
        assert_eq!(spec.num_channels, 2);
        assert_eq!(*spec.class_priors.get(EventClass::Spsw), 0.5);
        assert_eq!(spec.event_params.get(EventClass::Spsw).amplitude, (80.0, 120.0));
        assert_eq!(spec.event_params.get(EventClass::Gped).rate, Some((1.5, 2.0)));
    }

    #[test]
    fn rate_keys_only_exist_for_periodic_classes() {
        let mut config = Config::default();
        assert!(config.set("synth.spsw.rate_lo", "1.0").is_err());
        assert!(config.set("synth.pled.rate_hi", "1.5").is_ok());
    }

    #[test]
    fn inconsistent_priors_fail_spec_validation() {
        let mut config = Config::default();
        config.set("synth.prior.spsw", "0.9").unwrap();
        assert!(config.synth_spec(0).is_err());
    }
}
