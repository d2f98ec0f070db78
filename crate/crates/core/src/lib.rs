//! EEG event detection toolkit: signal ingest, a cepstral filter-bank front
//! end with time/frequency/differential energy terms, regression deltas,
//! per-epoch classification with mixture-model Markov chains, and scoring
//! with detection-error tradeoff curves.
//!
//! The crate is a library; the `eegdet` binary in the companion CLI crate
//! wires these pieces into subcommands.

pub mod classes;
pub mod config;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod frontend;
pub mod ingest;
pub mod eval;
pub mod models;
pub mod pipeline;
pub mod synth;

pub use classes::EventClass;
pub use error::{Error, Result};
