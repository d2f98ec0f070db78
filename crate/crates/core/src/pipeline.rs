//! End-to-end orchestration: signals to features to models to scored epochs.
//!
//! The front end is system-independent, so a record is analyzed once
//! ([`analyze_record`]) and the per-system feature assembly is a cheap
//! second step. Channels are processed in parallel; results are collected
//! in channel order, so every product is deterministic.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::classes::{ClassMap, EventClass};
use crate::config::Config;
use crate::dynamics::{assemble, DeltaSpec, FeatureRecord, FeatureSystemConfig};
use crate::energy::{diff_energy, freq_energy, time_energy, EnergyTerms};
use crate::error::{Error, Result};
use crate::eval::{
    det_curve, error_rate, label_epochs, DetPoint, EpochLabel, EpochScore, LabelSpan, Paradigm,
};
use crate::frontend::{cepstrum, frame_signal, CepstralFrame, SpectrumAnalyzer};
use crate::ingest::{resample, ResampleSpec, SignalRecord};
use crate::models::{epochs, train_class, HmmModel, ModelSet, FRAMES_PER_EPOCH};
use crate::synth::sub_seed;

/// Everything the pipeline stages need, derived from a [`Config`] plus the
/// run seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSettings {
    pub resample: ResampleSpec,
    pub frame: crate::frontend::FrameSpec,
    pub bank: crate::frontend::FilterBankSpec,
    pub diff: crate::energy::DiffEnergySpec,
    pub deltas: DeltaSpec,
    pub train: crate::models::TrainSpec,
    pub det_points: usize,
}

impl PipelineSettings {
    pub fn from_config(config: &Config, seed: u64) -> Result<Self> {
        let rate = config.target_rate()?;
        let frame = config.frame_spec(rate)?;
        Ok(PipelineSettings {
            resample: ResampleSpec {
                target_rate: rate,
                ..ResampleSpec::default()
            },
            bank: config.filter_bank(rate)?,
            diff: config.diff_energy_spec(frame.step_dur)?,
            deltas: config.delta_spec()?,
            train: config.train_spec(seed)?,
            det_points: config.det_points()?,
            frame,
        })
    }

    pub fn defaults(seed: u64) -> Self {
        Self::from_config(&Config::default(), seed).expect("defaults are valid")
    }

    /// Seconds of signal per classification epoch.
    pub fn epoch_dur(&self) -> f64 {
        FRAMES_PER_EPOCH as f64 * self.frame.step_dur
    }
}

/// System-independent front-end products for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelAnalysis {
    pub channel_name: String,
    pub cepstra: Vec<CepstralFrame>,
    pub energies: Vec<EnergyTerms>,
}

/// Run the front end over one channel already at the target rate.
pub fn analyze_channel(
    name: &str,
    samples: &[f64],
    settings: &PipelineSettings,
) -> Result<ChannelAnalysis> {
    let frames = frame_signal(samples, &settings.frame)?;
    let mut analyzer = SpectrumAnalyzer::new(settings.bank)?;
    let floor = settings.diff.floor;
    let mut cepstra = Vec::with_capacity(frames.len());
    let mut time = Vec::with_capacity(frames.len());
    let mut freq = Vec::with_capacity(frames.len());
    for frame in &frames {
        let spectral = analyzer.analyze(frame)?;
        cepstra.push(cepstrum(&spectral));
        time.push(time_energy(frame, floor)?);
        freq.push(freq_energy(&spectral, floor)?);
    }
    let diff = diff_energy(&freq, &settings.diff)?;
    let energies = time
        .into_iter()
        .zip(freq)
        .zip(diff)
        .map(|((time, freq), diff)| EnergyTerms { time, freq, diff })
        .collect();
    Ok(ChannelAnalysis {
        channel_name: name.to_string(),
        cepstra,
        energies,
    })
}

/// Resample every channel to the common rate and run the front end,
/// channels in parallel.
pub fn analyze_record(
    record: &SignalRecord,
    settings: &PipelineSettings,
) -> Result<Vec<ChannelAnalysis>> {
    record
        .channels
        .par_iter()
        .map(|ch| {
            let ch = resample(ch, &settings.resample)?;
            analyze_channel(&ch.name, &ch.samples, settings)
        })
        .collect()
}

/// Assemble one feature system's frames from a channel analysis.
pub fn assemble_system(
    analysis: &ChannelAnalysis,
    system_id: u8,
    deltas: &DeltaSpec,
) -> Result<Vec<Vec<f64>>> {
    let config = FeatureSystemConfig::system(system_id)?;
    assemble(&analysis.cepstra, &analysis.energies, &config, deltas)
}

/// Extract one feature file's worth of data per channel.
pub fn extract_record(
    record: &SignalRecord,
    system_id: u8,
    settings: &PipelineSettings,
) -> Result<Vec<FeatureRecord>> {
    let analyses = analyze_record(record, settings)?;
    analyses
        .iter()
        .map(|analysis| {
            let rows = assemble_system(analysis, system_id, &settings.deltas)?;
            Ok(FeatureRecord {
                system_id: u32::from(system_id),
                frame_period: settings.frame.step_dur,
                channel_name: analysis.channel_name.clone(),
                frames: rows
                    .into_iter()
                    .map(|row| row.into_iter().map(|x| x as f32).collect())
                    .collect(),
            })
        })
        .collect()
}

fn feature_rows(record: &FeatureRecord) -> Vec<Vec<f64>> {
    record
        .frames
        .iter()
        .map(|row| row.iter().map(|&x| f64::from(x)).collect())
        .collect()
}

/// Ground-truth epoch labels for a set of feature channels.
pub fn reference_epochs(
    features: &[FeatureRecord],
    spans: &[LabelSpan],
    epoch_dur: f64,
) -> Result<Vec<EpochLabel>> {
    let mut refs = Vec::new();
    for record in features {
        let num_epochs = record.frames.len() / FRAMES_PER_EPOCH;
        let labels = label_epochs(spans, &record.channel_name, num_epochs, epoch_dur)?;
        refs.extend(labels.into_iter().enumerate().map(|(epoch, label)| EpochLabel {
            channel: record.channel_name.clone(),
            epoch,
            label,
        }));
    }
    Ok(refs)
}

/// Per-class pools of training epochs.
type EpochSets = ClassMap<Vec<Vec<Vec<f64>>>>;

fn pool_epochs(
    sets: &mut EpochSets,
    rows: &[Vec<f64>],
    spans: &[LabelSpan],
    channel: &str,
    epoch_dur: f64,
) -> Result<()> {
    let segments = epochs(rows, FRAMES_PER_EPOCH)?;
    let labels = label_epochs(spans, channel, segments.len(), epoch_dur)?;
    for (segment, label) in segments.iter().zip(labels) {
        sets.get_mut(label).push(segment.to_vec());
    }
    Ok(())
}

/// Train the six class models on pooled epochs, classes in parallel. Each
/// class trains from a seed derived from (run seed, class), so the result
/// does not depend on scheduling.
fn fit_models(
    sets: &EpochSets,
    system_id: u8,
    frame_period: f64,
    settings: &PipelineSettings,
) -> Result<ModelSet> {
    let trained: Vec<HmmModel> = EventClass::ALL
        .par_iter()
        .map(|&class| {
            let mut spec = settings.train;
            spec.seed = sub_seed(settings.train.seed, class.index() as u64);
            train_class(class.token(), sets.get(class), &spec)
        })
        .collect::<Result<_>>()?;
    let models: [HmmModel; EventClass::COUNT] =
        trained.try_into().expect("one model per class");
    let set = ModelSet {
        system_id: u32::from(system_id),
        frame_period,
        frames_per_epoch: FRAMES_PER_EPOCH,
        models: ClassMap(models),
    };
    set.validate()?;
    Ok(set)
}

/// Train a model set from extracted features plus their label spans.
pub fn train_models(
    features: &[FeatureRecord],
    spans: &[LabelSpan],
    settings: &PipelineSettings,
) -> Result<ModelSet> {
    let first = features
        .first()
        .ok_or_else(|| Error::InvalidSpec("no feature channels to train on".into()))?;
    for record in features {
        if record.dim() != first.dim() || record.system_id != first.system_id {
            return Err(Error::InvalidSpec(format!(
                "feature channels disagree: `{}` is system {} dim {}, `{}` is system {} dim {}",
                first.channel_name,
                first.system_id,
                first.dim(),
                record.channel_name,
                record.system_id,
                record.dim()
            )));
        }
    }
    // Trust the feature files' own frame period; the spans were laid down
    // against the signal the features came from, not the current config.
    let epoch_dur = FRAMES_PER_EPOCH as f64 * first.frame_period;
    let mut sets = EpochSets::default();
    for record in features {
        pool_epochs(&mut sets, &feature_rows(record), spans, &record.channel_name, epoch_dur)?;
    }
    let system_id = u8::try_from(first.system_id)
        .map_err(|_| Error::InvalidSpec(format!("bad system id {}", first.system_id)))?;
    fit_models(&sets, system_id, first.frame_period, settings)
}

/// Classify every epoch of every feature channel.
pub fn classify_features(
    models: &ModelSet,
    features: &[FeatureRecord],
) -> Result<Vec<EpochScore>> {
    let per_channel: Vec<Vec<EpochScore>> = features
        .par_iter()
        .map(|record| -> Result<Vec<EpochScore>> {
            let rows = feature_rows(record);
            let segments = epochs(&rows, models.frames_per_epoch)?;
            segments
                .iter()
                .enumerate()
                .map(|(epoch, segment)| {
                    let decision = models.classify(segment)?;
                    Ok(EpochScore {
                        channel: record.channel_name.clone(),
                        epoch,
                        label: decision.label,
                        score: decision.score,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_channel.into_iter().flatten().collect())
}

/// One row of an experiment report.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemRow {
    pub system_id: u8,
    pub dims: usize,
    /// Error rates as fractions in [0, 1].
    pub six: f64,
    pub four: f64,
    pub two: f64,
    pub det: Vec<DetPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<SystemRow>,
    pub eval_epochs: usize,
}

/// A record with its ground-truth spans.
pub type LabeledRecord = (SignalRecord, Vec<LabelSpan>);

/// Train on one corpus, score another, for each requested feature system.
///
/// Records are analyzed once and reused across systems. Scores are split by
/// the reference label (target vs background) to build the detection curve.
pub fn run_experiment(
    train_corpus: &[LabeledRecord],
    eval_corpus: &[LabeledRecord],
    systems: &[u8],
    settings: &PipelineSettings,
) -> Result<ExperimentReport> {
    if systems.is_empty() {
        return Err(Error::InvalidSpec("no feature systems requested".into()));
    }
    let analyze_all = |corpus: &[LabeledRecord]| -> Result<Vec<Vec<ChannelAnalysis>>> {
        corpus
            .iter()
            .map(|(record, _)| analyze_record(record, settings))
            .collect()
    };
    let train_analyses = analyze_all(train_corpus)?;
    let eval_analyses = analyze_all(eval_corpus)?;
    let epoch_dur = settings.epoch_dur();

    let mut rows = Vec::with_capacity(systems.len());
    let mut eval_epochs = 0;
    for &system_id in systems {
        let config = FeatureSystemConfig::system(system_id)?;
        let mut sets = EpochSets::default();
        for ((_, spans), analyses) in train_corpus.iter().zip(&train_analyses) {
            for analysis in analyses {
                let frames = assemble_system(analysis, system_id, &settings.deltas)?;
                pool_epochs(&mut sets, &frames, spans, &analysis.channel_name, epoch_dur)?;
            }
        }
        let models = fit_models(&sets, system_id, settings.frame.step_dur, settings)?;

        let mut refs = Vec::new();
        let mut hyps = Vec::new();
        let mut target_scores = Vec::new();
        let mut background_scores = Vec::new();
        for ((record, spans), analyses) in eval_corpus.iter().zip(&eval_analyses) {
            for analysis in analyses {
                let frames = assemble_system(analysis, system_id, &settings.deltas)?;
                let segments = epochs(&frames, FRAMES_PER_EPOCH)?;
                let labels =
                    label_epochs(spans, &analysis.channel_name, segments.len(), epoch_dur)?;
                // Qualify by record so equal channel names in different
                // records stay distinct cells.
                let cell = format!("{}/{}", record.record_id, analysis.channel_name);
                for (epoch, (segment, ref_label)) in
                    segments.iter().zip(labels).enumerate()
                {
                    let decision = models.classify(segment)?;
                    refs.push(EpochLabel {
                        channel: cell.clone(),
                        epoch,
                        label: ref_label,
                    });
                    hyps.push(EpochLabel {
                        channel: cell.clone(),
                        epoch,
                        label: decision.label,
                    });
                    if ref_label.is_target() {
                        target_scores.push(decision.score);
                    } else {
                        background_scores.push(decision.score);
                    }
                }
            }
        }
        let six = error_rate(&refs, &hyps, Paradigm::Six)?;
        let four = error_rate(&refs, &hyps, Paradigm::Four)?;
        let two = error_rate(&refs, &hyps, Paradigm::Two)?;
        let det = det_curve(&target_scores, &background_scores, settings.det_points)?;
        eval_epochs = refs.len();
        rows.push(SystemRow {
            system_id,
            dims: config.dim(),
            six,
            four,
            two,
            det,
        });
    }
    Ok(ExperimentReport { rows, eval_epochs })
}

/// Render a report as the classic fixed-width results table.
pub fn render_report(report: &ExperimentReport) -> String {
    let mut out = String::new();
    writeln!(out, "{:>3}  {:>4}  {:>7}  {:>7}  {:>7}", "No.", "Dims", "6-Way", "4-Way", "2-Way")
        .expect("writing to string");
    for row in &report.rows {
        writeln!(
            out,
            "{:>3}  {:>4}  {:>6.2}%  {:>6.2}%  {:>6.2}%",
            row.system_id,
            row.dims,
            100.0 * row.six,
            100.0 * row.four,
            100.0 * row.two
        )
        .expect("writing to string");
    }
    writeln!(out, "({} epochs scored)", report.eval_epochs).expect("writing to string");
    out
}
