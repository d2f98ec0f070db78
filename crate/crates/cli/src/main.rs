//! Command-line front end for the EEG event pipeline.
//!
//! Subcommands cover the whole chain: `synth` makes a labeled corpus,
//! `features` turns signals into per-channel feature files, `train` fits the
//! six class models, `classify` scores epochs, `score` and `det` evaluate
//! hypotheses against reference labels, and `experiment` runs everything end
//! to end for a list of feature systems. Every output is a pure function of
//! the inputs, the config, and `--seed`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use eegdet_core::config::Config;
use eegdet_core::dynamics::{read_features, write_features, FeatureRecord};
use eegdet_core::eval::{
    det_curve, error_rate, read_hypotheses, read_labels, write_det_csv, write_hypotheses,
    write_labels, EpochLabel, EpochScore, LabelSpan, Paradigm,
};
use eegdet_core::ingest::{read_csv_signal, read_edf_signal, write_csv_signal, SignalRecord};
use eegdet_core::models::{read_model_set, write_model_set, FRAMES_PER_EPOCH};
use eegdet_core::pipeline::{
    classify_features, extract_record, render_report, run_experiment, train_models,
    LabeledRecord, PipelineSettings,
};
use eegdet_core::synth::generate;

#[derive(Parser)]
#[command(name = "eegdet", version, about = "EEG event detection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args)]
struct Common {
    /// Flat key=value config file; flags and --set override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one config key, e.g. --set train.num_states=2 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Seed for corpus generation and model initialization.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

impl Common {
    fn config(&self) -> Result<Config> {
        let mut config = match &self.config {
            Some(path) => Config::read(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => Config::default(),
        };
        for pair in &self.set {
            config.set_pair(pair)?;
        }
        Ok(config)
    }

    fn settings(&self) -> Result<PipelineSettings> {
        Ok(PipelineSettings::from_config(&self.config()?, self.seed)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic record (see the synth.* config keys).
    Synth {
        #[command(flatten)]
        common: Common,
        /// Signal CSV to write.
        #[arg(long)]
        out_signal: PathBuf,
        /// Label CSV to write.
        #[arg(long)]
        out_labels: PathBuf,
    },

    /// Extract features from a signal file into one file per channel.
    Features {
        #[command(flatten)]
        common: Common,
        /// Input signal, .csv or .edf.
        #[arg(long)]
        input: PathBuf,
        /// Feature system, 1 through 16.
        #[arg(long, default_value_t = 15)]
        system: u8,
        /// Directory for the per-channel feature files.
        #[arg(long)]
        out_dir: PathBuf,
    },

    /// Train the six class models from feature files plus label spans.
    Train {
        #[command(flatten)]
        common: Common,
        /// Feature files, one per channel (repeatable).
        #[arg(long = "features", required = true)]
        features: Vec<PathBuf>,
        /// Reference label CSV covering those channels.
        #[arg(long)]
        labels: PathBuf,
        /// Model file to write.
        #[arg(long)]
        output: PathBuf,
    },

    /// Classify feature files into scored epoch hypotheses.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Feature files to classify (repeatable).
        #[arg(long = "features", required = true)]
        features: Vec<PathBuf>,
        /// Trained model file.
        #[arg(long)]
        models: PathBuf,
        /// Hypothesis CSV to write.
        #[arg(long)]
        output: PathBuf,
    },

    /// Score a hypothesis CSV against reference labels.
    Score {
        #[command(flatten)]
        common: Common,
        /// Reference label CSV.
        #[arg(long)]
        refs: PathBuf,
        /// Hypothesis CSV from `classify`.
        #[arg(long)]
        hyps: PathBuf,
    },

    /// Write the detection tradeoff curve for a hypothesis CSV.
    Det {
        #[command(flatten)]
        common: Common,
        /// Reference label CSV.
        #[arg(long)]
        refs: PathBuf,
        /// Hypothesis CSV from `classify`.
        #[arg(long)]
        hyps: PathBuf,
        /// DET CSV to write.
        #[arg(long)]
        output: PathBuf,
    },

    /// Train on one corpus, evaluate on another, across feature systems.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Training signal CSVs (repeatable, paired with --train-labels).
        #[arg(long = "train-signal", required = true)]
        train_signals: Vec<PathBuf>,
        /// Training label CSVs (repeatable).
        #[arg(long = "train-labels", required = true)]
        train_labels: Vec<PathBuf>,
        /// Evaluation signal CSVs (repeatable, paired with --eval-labels).
        #[arg(long = "eval-signal", required = true)]
        eval_signals: Vec<PathBuf>,
        /// Evaluation label CSVs (repeatable).
        #[arg(long = "eval-labels", required = true)]
        eval_labels: Vec<PathBuf>,
        /// Feature systems to compare, e.g. --systems 1,5,10.
        #[arg(long, value_delimiter = ',', required = true)]
        systems: Vec<u8>,
        /// Directory for one DET CSV per system.
        #[arg(long)]
        det_dir: PathBuf,
        /// Also write the report table to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() {
    env_logger::init();
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            common,
            out_signal,
            out_labels,
        } => cmd_synth(&common, &out_signal, &out_labels),
        Command::Features {
            common,
            input,
            system,
            out_dir,
        } => cmd_features(&common, &input, system, &out_dir),
        Command::Train {
            common,
            features,
            labels,
            output,
        } => cmd_train(&common, &features, &labels, &output),
        Command::Classify {
            common,
            features,
            models,
            output,
        } => cmd_classify(&common, &features, &models, &output),
        Command::Score { common, refs, hyps } => cmd_score(&common, &refs, &hyps),
        Command::Det {
            common,
            refs,
            hyps,
            output,
        } => cmd_det(&common, &refs, &hyps, &output),
        Command::Experiment {
            common,
            train_signals,
            train_labels,
            eval_signals,
            eval_labels,
            systems,
            det_dir,
            report,
        } => cmd_experiment(
            &common,
            &train_signals,
            &train_labels,
            &eval_signals,
            &eval_labels,
            &systems,
            &det_dir,
            report.as_deref(),
        ),
    }
}

fn cmd_synth(common: &Common, out_signal: &Path, out_labels: &Path) -> Result<()> {
    let spec = common.config()?.synth_spec(common.seed)?;
    let out = generate(&spec).context("generating corpus")?;
    write_csv_signal(&out.record, out_signal).context("writing signal")?;
    write_labels(out_labels, &out.labels).context("writing labels")?;
    println!(
        "wrote {} ({} channels, {:.1} s) and {} ({} spans)",
        out_signal.display(),
        out.record.channels.len(),
        spec.duration,
        out_labels.display(),
        out.labels.len()
    );
    Ok(())
}

fn read_signal(path: &Path) -> Result<SignalRecord> {
    let is_edf = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("edf"));
    let record = if is_edf {
        read_edf_signal(path)?
    } else {
        read_csv_signal(path)?
    };
    Ok(record)
}

/// Channel names become file names; keep them path-safe.
fn channel_file_name(channel: &str) -> String {
    let safe: String = channel
        .chars()
        .map(|c| if c == '/' || c == '\\' || c == '\0' { '_' } else { c })
        .collect();
    format!("{safe}.feat")
}

fn cmd_features(common: &Common, input: &Path, system: u8, out_dir: &Path) -> Result<()> {
    let settings = common.settings()?;
    let record = read_signal(input).context("features stage")?;
    let features = extract_record(&record, system, &settings).context("features stage")?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    for feature in &features {
        let path = out_dir.join(channel_file_name(&feature.channel_name));
        write_features(&path, feature).context("features stage")?;
        println!(
            "wrote {} ({} frames, dim {})",
            path.display(),
            feature.frames.len(),
            feature.dim()
        );
    }
    Ok(())
}

fn read_feature_files(paths: &[PathBuf]) -> Result<Vec<FeatureRecord>> {
    paths.iter().map(|p| Ok(read_features(p)?)).collect()
}

fn cmd_train(common: &Common, features: &[PathBuf], labels: &Path, output: &Path) -> Result<()> {
    let settings = common.settings()?;
    let features = read_feature_files(features).context("train stage")?;
    let spans = read_labels(labels).context("train stage")?;
    let models = train_models(&features, &spans, &settings).context("train stage")?;
    write_model_set(output, &models).context("train stage")?;
    println!(
        "wrote {} (system {}, dim {})",
        output.display(),
        models.system_id,
        models.dim()
    );
    Ok(())
}

fn cmd_classify(common: &Common, features: &[PathBuf], models: &Path, output: &Path) -> Result<()> {
    let _ = common.config()?; // validate config even though nothing here reads it
    let models = read_model_set(models).context("classify stage")?;
    let features = read_feature_files(features).context("classify stage")?;
    let scored = classify_features(&models, &features).context("classify stage")?;
    write_hypotheses(output, &scored).context("classify stage")?;
    println!("wrote {} ({} epochs)", output.display(), scored.len());
    Ok(())
}

/// Project reference spans onto the epoch grid the hypotheses were scored
/// on: every channel in the hypothesis file, epochs 0..=max seen.
fn reference_cells(
    spans: &[LabelSpan],
    hyps: &[EpochScore],
    epoch_dur: f64,
) -> Result<Vec<EpochLabel>> {
    let mut channels: Vec<&str> = hyps.iter().map(|h| h.channel.as_str()).collect();
    channels.sort_unstable();
    channels.dedup();
    let mut refs = Vec::with_capacity(hyps.len());
    for channel in channels {
        let num_epochs = hyps
            .iter()
            .filter(|h| h.channel == channel)
            .map(|h| h.epoch + 1)
            .max()
            .unwrap_or(0);
        let labels = eegdet_core::eval::label_epochs(spans, channel, num_epochs, epoch_dur)?;
        refs.extend(labels.into_iter().enumerate().map(|(epoch, label)| EpochLabel {
            channel: channel.to_string(),
            epoch,
            label,
        }));
    }
    Ok(refs)
}

fn epoch_grid(common: &Common) -> Result<(Config, f64)> {
    let config = common.config()?;
    let rate = config.target_rate()?;
    let epoch_dur = FRAMES_PER_EPOCH as f64 * config.frame_spec(rate)?.step_dur;
    Ok((config, epoch_dur))
}

fn cmd_score(common: &Common, refs: &Path, hyps: &Path) -> Result<()> {
    let (_, epoch_dur) = epoch_grid(common)?;
    let spans = read_labels(refs).context("score stage")?;
    let scored = read_hypotheses(hyps).context("score stage")?;
    let refs = reference_cells(&spans, &scored, epoch_dur)?;
    let hyp_labels: Vec<EpochLabel> = scored
        .iter()
        .map(|s| EpochLabel {
            channel: s.channel.clone(),
            epoch: s.epoch,
            label: s.label,
        })
        .collect();
    for (paradigm, label) in Paradigm::ALL.into_iter().zip(["6-way", "4-way", "2-way"]) {
        let rate = error_rate(&refs, &hyp_labels, paradigm).context("score stage")?;
        println!("{label}: {rate:.2}%", rate = 100.0 * rate);
    }
    Ok(())
}

fn cmd_det(common: &Common, refs: &Path, hyps: &Path, output: &Path) -> Result<()> {
    let (config, epoch_dur) = epoch_grid(common)?;
    let spans = read_labels(refs).context("det stage")?;
    let scored = read_hypotheses(hyps).context("det stage")?;
    let refs = reference_cells(&spans, &scored, epoch_dur)?;
    let ref_labels: std::collections::HashMap<(&str, usize), _> = refs
        .iter()
        .map(|r| ((r.channel.as_str(), r.epoch), r.label))
        .collect();
    let mut target_scores = Vec::new();
    let mut background_scores = Vec::new();
    for h in &scored {
        let label = ref_labels
            .get(&(h.channel.as_str(), h.epoch))
            .expect("reference cells cover every hypothesis cell");
        if label.is_target() {
            target_scores.push(h.score);
        } else {
            background_scores.push(h.score);
        }
    }
    let points = det_curve(&target_scores, &background_scores, config.det_points()?)
        .context("det stage")?;
    write_det_csv(output, &points).context("det stage")?;
    println!("wrote {} ({} points)", output.display(), points.len());
    Ok(())
}

fn load_corpus(signals: &[PathBuf], labels: &[PathBuf], which: &str) -> Result<Vec<LabeledRecord>> {
    if signals.len() != labels.len() {
        bail!(
            "{which} corpus: {} signal files but {} label files",
            signals.len(),
            labels.len()
        );
    }
    signals
        .iter()
        .zip(labels)
        .map(|(s, l)| {
            let record = read_signal(s)?;
            let spans = read_labels(l)?;
            Ok((record, spans))
        })
        .collect::<Result<Vec<_>>>()
        .with_context(|| format!("loading {which} corpus"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    common: &Common,
    train_signals: &[PathBuf],
    train_labels: &[PathBuf],
    eval_signals: &[PathBuf],
    eval_labels: &[PathBuf],
    systems: &[u8],
    det_dir: &Path,
    report_path: Option<&Path>,
) -> Result<()> {
    let settings = common.settings()?;
    let train_corpus = load_corpus(train_signals, train_labels, "train")?;
    let eval_corpus = load_corpus(eval_signals, eval_labels, "eval")?;
    let report = run_experiment(&train_corpus, &eval_corpus, systems, &settings)
        .context("experiment")?;
    fs::create_dir_all(det_dir)
        .with_context(|| format!("creating {}", det_dir.display()))?;
    for row in &report.rows {
        let path = det_dir.join(format!("det_system_{:02}.csv", row.system_id));
        write_det_csv(&path, &row.det).context("writing det curves")?;
    }
    let text = render_report(&report);
    print!("{text}");
    if let Some(path) = report_path {
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
