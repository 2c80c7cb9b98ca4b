//! Mini-batch training over fixed-length segments.
//!
//! Each recording is cut into `segment_epochs`-long segments. Segments are
//! shuffled every pass and grouped into batches. Per-segment gradients are
//! computed in parallel and summed in segment order, and every dropout mask
//! comes from an RNG keyed on `(seed, step, segment)`, so results do not
//! depend on the thread count.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig};
use super::network::{Gradients, Weights};
use crate::error::{Error, Result};
use crate::features::FeatureTensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub passes: usize,
    pub batch_segments: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            passes: 10,
            batch_segments: 4,
            seed: 0,
        }
    }
}

/// One recording's features with a 0/1 target per epoch.
#[derive(Debug, Clone)]
pub struct TrainExample {
    pub features: FeatureTensor,
    pub labels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutcome {
    /// Dropout-on mean squared error of every optimizer step.
    pub iteration_losses: Vec<f64>,
    /// Dropout-off mean squared error over all training epochs; index 0 is
    /// before the first update.
    pub pass_losses: Vec<f64>,
    pub steps: u64,
    pub warnings: Vec<String>,
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 over the three words
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean squared error over every epoch of `data`, without dropout.
pub fn dataset_loss(weights: &Weights, data: &[TrainExample]) -> Result<f64> {
    let per = data
        .par_iter()
        .map(|ex| weights.loss(&ex.features, &ex.labels).map(|l| l * ex.labels.len() as f64))
        .collect::<Result<Vec<_>>>()?;
    let n: usize = data.iter().map(|ex| ex.labels.len()).sum();
    Ok(per.iter().sum::<f64>() / n.max(1) as f64)
}

pub fn train(weights: &mut Weights, data: &[TrainExample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    if cfg.batch_segments == 0 {
        return Err(Error::InvalidConfig("batch_segments must be positive".into()));
    }
    let mut segments = Vec::new();
    for (i, ex) in data.iter().enumerate() {
        if ex.labels.len() != ex.features.epochs {
            return Err(Error::LengthMismatch(format!(
                "example {i}: {} labels for {} epochs",
                ex.labels.len(),
                ex.features.epochs
            )));
        }
        segments.extend(weights.segments(ex.features.epochs).into_iter().map(|(a, b)| (i, a, b)));
    }
    if segments.is_empty() {
        return Err(Error::InvalidConfig("no training epochs".into()));
    }

    let mut warnings = Vec::new();
    let positives = data.iter().flat_map(|ex| &ex.labels).filter(|&&l| l > 0.5).count();
    let total: usize = data.iter().map(|ex| ex.labels.len()).sum();
    if positives == 0 || positives == total {
        warnings.push(format!(
            "degenerate training set: {positives} of {total} epochs are seizure; the detector can only learn a constant"
        ));
    }

    let mut outcome = TrainOutcome {
        iteration_losses: Vec::new(),
        pass_losses: vec![dataset_loss(weights, data)?],
        steps: 0,
        warnings,
    };
    let mut order: Vec<usize> = (0..segments.len()).collect();
    for pass in 0..cfg.passes {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, u64::MAX, pass as u64));
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_segments) {
            let step = weights.adam.step;
            let w: &Weights = weights;
            let parts = batch
                .par_iter()
                .map(|&s| {
                    let (i, a, b) = segments[s];
                    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, step, s as u64));
                    let ex = &data[i];
                    w.segment_sse_grad(&ex.features, a, b, &ex.labels[a..b], Some(&mut rng))
                })
                .collect::<Result<Vec<_>>>()?;
            let epochs: usize = batch.iter().map(|&s| segments[s].2 - segments[s].1).sum();
            let mut grads = Gradients::zeros_like(weights);
            let mut sse = 0.0;
            for (s, g) in &parts {
                sse += s;
                grads.add(g);
            }
            grads.scale(1.0 / epochs as f64);
            let Weights { tensors, adam, .. } = weights;
            adam_step(&cfg.adam, tensors, adam, &grads)?;
            outcome.iteration_losses.push(sse / epochs as f64);
        }
        outcome.pass_losses.push(dataset_loss(weights, data)?);
    }
    outcome.steps = weights.adam.step;
    Ok(outcome)
}
