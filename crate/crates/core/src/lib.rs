//! EEG seizure-detection pipeline: EDF ingest, bipolar montages, channel
//! presets, LFCC features, a CNN-LSTM detector, postprocessing and
//! Any-Overlap scoring, plus a synthetic data generator.

pub mod channel_select;
pub mod detector;
pub mod edf;
pub mod error;
pub mod events;
pub mod features;
pub mod manifest;
pub mod montage;
pub mod pipeline;
pub mod postprocess;
pub mod scoring;
pub mod synthgen;

pub use error::{Error, Result};
