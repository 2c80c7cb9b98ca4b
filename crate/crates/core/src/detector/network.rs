//! CNN-LSTM forward pass and gradients.
//!
//! Per epoch: `conv blocks -> flatten -> dense (ELU)`. The dense outputs of
//! consecutive epochs form the sequence for a bidirectional LSTM; the two
//! hidden states of each epoch are concatenated and mapped to a sigmoid
//! posterior. Dropout follows every conv block, the dense layer and the
//! LSTM output during training only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::adam::AdamState;
use super::layers::{self, LstmCache, LstmParams};
use super::spec::{shape_plan, NetworkSpec, ShapePlan, KERNEL};
use crate::error::{Error, Result};
use crate::features::FeatureTensor;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    fn zeros(name: String, shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            name,
            shape,
            data: vec![0.0; n],
        }
    }
}

/// Per-epoch seizure posteriors, one per second of input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochPosteriors {
    pub values: Vec<f64>,
    pub epoch_duration: f64,
}

impl EpochPosteriors {
    pub fn new(values: Vec<f64>, epoch_duration: f64) -> Self {
        Self {
            values,
            epoch_duration,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.values.len() as f64 * self.epoch_duration
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,posterior\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{i},{v}\n"));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("epoch") {
                continue;
            }
            let v = line
                .split(',')
                .nth(1)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .filter(|v| (0.0..=1.0).contains(v))
                .ok_or_else(|| Error::Annotation {
                    line: i + 1,
                    message: format!("expected epoch,posterior in [0,1]; got {line:?}"),
                })?;
            values.push(v);
        }
        Ok(Self::new(values, 1.0))
    }
}

/// Gradients aligned with [`Weights::tensors`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn zeros_like(w: &Weights) -> Self {
        Self(w.tensors.iter().map(|t| vec![0.0; t.data.len()]).collect())
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.0.iter_mut().flatten().for_each(|x| *x *= s);
    }
}

/// Parameters, input normalization and optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub spec: NetworkSpec,
    pub plan: ShapePlan,
    pub input_dim: usize,
    pub tensors: Vec<Tensor>,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub adam: AdamState,
    /// Hash of the feature configuration the weights were trained on.
    pub feature_hash: String,
    /// Channel labels of the training input; empty means unchecked.
    pub channel_labels: Vec<String>,
}

// Tensor positions.
fn conv_w(l: usize) -> usize {
    2 * l
}
fn conv_b(l: usize) -> usize {
    2 * l + 1
}

struct Idx {
    dense_w: usize,
    dense_b: usize,
    lstm: [usize; 2],
    out_w: usize,
    out_b: usize,
}

impl Idx {
    fn new(layers: usize) -> Self {
        let d = 2 * layers;
        Self {
            dense_w: d,
            dense_b: d + 1,
            lstm: [d + 2, d + 5],
            out_w: d + 8,
            out_b: d + 9,
        }
    }
}

impl Weights {
    /// All-zero parameters with identity input normalization.
    pub fn zeros(spec: &NetworkSpec, channels: usize, frames: usize, input_dim: usize) -> Result<Self> {
        let plan = shape_plan(channels, frames, spec)?;
        let k = spec.kernels;
        let hsz = spec.lstm_hidden;
        let mut tensors = Vec::new();
        let mut cin = input_dim;
        for l in 0..plan.conv_layers() {
            tensors.push(Tensor::zeros(format!("conv{}.weight", l + 1), vec![k, cin, KERNEL, KERNEL]));
            tensors.push(Tensor::zeros(format!("conv{}.bias", l + 1), vec![k]));
            cin = k;
        }
        let flat = plan.flat_len(k);
        tensors.push(Tensor::zeros("dense.weight".into(), vec![spec.dense_units, flat]));
        tensors.push(Tensor::zeros("dense.bias".into(), vec![spec.dense_units]));
        for dir in ["fwd", "bwd"] {
            tensors.push(Tensor::zeros(format!("lstm_{dir}.wx"), vec![4 * hsz, spec.dense_units]));
            tensors.push(Tensor::zeros(format!("lstm_{dir}.wh"), vec![4 * hsz, hsz]));
            tensors.push(Tensor::zeros(format!("lstm_{dir}.bias"), vec![4 * hsz]));
        }
        tensors.push(Tensor::zeros("out.weight".into(), vec![1, 2 * hsz]));
        tensors.push(Tensor::zeros("out.bias".into(), vec![1]));
        let adam = AdamState::for_tensors(&tensors);
        Ok(Self {
            spec: spec.clone(),
            plan,
            input_dim,
            tensors,
            input_mean: vec![0.0; input_dim],
            input_scale: vec![1.0; input_dim],
            adam,
            feature_hash: String::new(),
            channel_labels: Vec::new(),
        })
    }

    /// Seeded uniform fan-in initialization, `U(-sqrt(3/fan_in), sqrt(3/fan_in))`.
    /// LSTM forget-gate biases start at 1.
    pub fn init(spec: &NetworkSpec, channels: usize, frames: usize, input_dim: usize, seed: u64) -> Result<Self> {
        let mut w = Self::zeros(spec, channels, frames, input_dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hsz = spec.lstm_hidden;
        for t in w.tensors.iter_mut() {
            if t.name.ends_with("bias") {
                if t.name.starts_with("lstm") {
                    t.data[hsz..2 * hsz].fill(1.0);
                }
                continue;
            }
            let fan_in: usize = t.shape[1..].iter().product();
            let limit = (3.0 / fan_in as f64).sqrt();
            for v in t.data.iter_mut() {
                *v = rng.random_range(-limit..limit);
            }
        }
        Ok(w)
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn channels(&self) -> usize {
        self.plan.channels
    }

    /// Sets the per-feature normalization to zero mean and unit variance over `data`.
    pub fn fit_normalizer<'a>(&mut self, data: impl IntoIterator<Item = &'a FeatureTensor>) {
        let d = self.input_dim;
        let mut sum = vec![0.0; d];
        let mut sq = vec![0.0; d];
        let mut n = 0usize;
        for t in data {
            for chunk in t.values.chunks_exact(d) {
                for k in 0..d {
                    let v = chunk[k] as f64;
                    sum[k] += v;
                    sq[k] += v * v;
                }
                n += 1;
            }
        }
        if n == 0 {
            return;
        }
        for k in 0..d {
            let mean = sum[k] / n as f64;
            let var = (sq[k] / n as f64 - mean * mean).max(0.0);
            self.input_mean[k] = mean;
            self.input_scale[k] = if var > 1e-12 { 1.0 / var.sqrt() } else { 1.0 };
        }
    }

    fn check_input(&self, features: &FeatureTensor) -> Result<()> {
        if features.channels != self.plan.channels
            || features.frames_per_epoch != self.plan.frames
            || features.dim != self.input_dim
        {
            return Err(Error::ShapeMismatch(format!(
                "features are {} channels x {} frames x {} values, network expects {} x {} x {}",
                features.channels,
                features.frames_per_epoch,
                features.dim,
                self.plan.channels,
                self.plan.frames,
                self.input_dim
            )));
        }
        if !self.channel_labels.is_empty()
            && (self.channel_labels.len() != features.channel_labels.len()
                || self
                    .channel_labels
                    .iter()
                    .zip(&features.channel_labels)
                    .any(|(a, b)| !a.eq_ignore_ascii_case(b)))
        {
            return Err(Error::ShapeMismatch(format!(
                "features have channels {:?}, network was trained on {:?}",
                features.channel_labels, self.channel_labels
            )));
        }
        Ok(())
    }

    /// Normalized input planes `[feature][channel][frame]` for one epoch.
    fn epoch_input(&self, features: &FeatureTensor, epoch: usize) -> Vec<f64> {
        let (c, f, d) = (features.channels, features.frames_per_epoch, features.dim);
        let src = features.epoch(epoch);
        let mut out = vec![0.0; d * c * f];
        for fr in 0..f {
            for ch in 0..c {
                for k in 0..d {
                    let v = src[(fr * c + ch) * d + k] as f64;
                    out[(k * c + ch) * f + fr] = (v - self.input_mean[k]) * self.input_scale[k];
                }
            }
        }
        out
    }

    /// Non-overlapping `segment_epochs`-long windows covering `0..epochs`.
    pub fn segments(&self, epochs: usize) -> Vec<(usize, usize)> {
        let n = self.spec.segment_epochs;
        (0..epochs).step_by(n).map(|s| (s, (s + n).min(epochs))).collect()
    }

    /// Posteriors for every epoch; the LSTM context resets at segment boundaries.
    pub fn forward(&self, features: &FeatureTensor) -> Result<EpochPosteriors> {
        self.check_input(features)?;
        let mut values = Vec::with_capacity(features.epochs);
        for (a, b) in self.segments(features.epochs) {
            let xs: Vec<Vec<f64>> = (a..b).map(|e| self.epoch_input(features, e)).collect();
            values.extend(self.run(&xs, None)?.y);
        }
        Ok(EpochPosteriors::new(values, 1.0))
    }

    /// Mean squared error over all epochs and its gradient (no dropout).
    pub fn loss_and_grad(&self, features: &FeatureTensor, labels: &[f64]) -> Result<(f64, Gradients)> {
        self.check_input(features)?;
        if labels.len() != features.epochs {
            return Err(Error::LengthMismatch(format!(
                "{} labels for {} epochs",
                labels.len(),
                features.epochs
            )));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut sse = 0.0;
        for (a, b) in self.segments(features.epochs) {
            let (s, g) = self.segment_sse_grad(features, a, b, &labels[a..b], None)?;
            sse += s;
            grads.add(&g);
        }
        let n = features.epochs.max(1) as f64;
        grads.scale(1.0 / n);
        Ok((sse / n, grads))
    }

    /// Mean squared error without gradients (no dropout).
    pub fn loss(&self, features: &FeatureTensor, labels: &[f64]) -> Result<f64> {
        let p = self.forward(features)?;
        if labels.len() != p.len() {
            return Err(Error::LengthMismatch(format!("{} labels for {} epochs", labels.len(), p.len())));
        }
        Ok(p.values.iter().zip(labels).map(|(y, l)| (y - l).powi(2)).sum::<f64>() / p.len().max(1) as f64)
    }

    /// Sum of squared errors over epochs `a..b` and its gradient. Dropout is
    /// applied when `rng` is given.
    pub(crate) fn segment_sse_grad(
        &self,
        features: &FeatureTensor,
        a: usize,
        b: usize,
        labels: &[f64],
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, Gradients)> {
        let xs: Vec<Vec<f64>> = (a..b).map(|e| self.epoch_input(features, e)).collect();
        let cache = self.run(&xs, rng)?;
        let sse = cache.y.iter().zip(labels).map(|(y, l)| (y - l).powi(2)).sum();
        let grads = self.backward(&cache, labels);
        Ok((sse, grads))
    }

    fn run(&self, xs: &[Vec<f64>], mut rng: Option<&mut ChaCha8Rng>) -> Result<Cache> {
        let spec = &self.spec;
        let keep = 1.0 - spec.dropout;
        let mask = |n: usize, rng: &mut Option<&mut ChaCha8Rng>| -> Option<Vec<f64>> {
            let r = rng.as_deref_mut()?;
            if spec.dropout == 0.0 {
                return None;
            }
            Some((0..n).map(|_| if r.random::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect())
        };
        let idx = Idx::new(self.plan.conv_layers());
        let k = spec.kernels;

        let mut epochs = Vec::with_capacity(xs.len());
        for x in xs {
            let mut conv = Vec::with_capacity(self.plan.conv_layers());
            let mut act = x.clone();
            let mut cin = self.input_dim;
            for (l, lp) in self.plan.layers.iter().enumerate() {
                let padded = layers::pad(&act, cin, lp);
                let z = layers::conv_forward(
                    &padded,
                    cin,
                    k,
                    lp,
                    &self.tensors[conv_w(l)].data,
                    &self.tensors[conv_b(l)].data,
                );
                let a: Vec<f64> = z.iter().map(|&v| layers::elu(v)).collect();
                let (mut pooled, arg) = layers::maxpool_forward(&a, k, lp);
                let m = mask(pooled.len(), &mut rng);
                if let Some(m) = &m {
                    pooled.iter_mut().zip(m).for_each(|(v, s)| *v *= s);
                }
                finite(&pooled, || format!("conv layer {}", l + 1))?;
                conv.push(ConvCache {
                    padded,
                    z,
                    arg,
                    mask: m,
                });
                act = pooled;
                cin = k;
            }
            let u = layers::affine(&self.tensors[idx.dense_w].data, &self.tensors[idx.dense_b].data, &act);
            let mut h: Vec<f64> = u.iter().map(|&v| layers::elu(v)).collect();
            let m = mask(h.len(), &mut rng);
            if let Some(m) = &m {
                h.iter_mut().zip(m).for_each(|(v, s)| *v *= s);
            }
            finite(&h, || "dense layer".into())?;
            epochs.push(EpochCache {
                conv,
                flat: act,
                u,
                dense_mask: m,
                h,
            });
        }

        let seq: Vec<Vec<f64>> = epochs.iter().map(|e| e.h.clone()).collect();
        let lstm: Vec<LstmCache> = (0..2)
            .map(|d| layers::lstm_forward(&self.lstm_params(&idx, d), &seq, d == 1))
            .collect();
        let steps = xs.len();
        let mut r = vec![Vec::new(); steps];
        for cache in &lstm {
            for (s, &t) in cache.order.iter().enumerate() {
                r[t].extend_from_slice(&cache.h[s]);
            }
        }
        let mut out_masks = Vec::with_capacity(steps);
        for rt in r.iter_mut() {
            let m = mask(rt.len(), &mut rng);
            if let Some(m) = &m {
                rt.iter_mut().zip(m).for_each(|(v, s)| *v *= s);
            }
            out_masks.push(m);
        }
        let w = &self.tensors[idx.out_w].data;
        let bias = self.tensors[idx.out_b].data[0];
        let y: Vec<f64> = r
            .iter()
            .map(|rt| layers::sigmoid(bias + rt.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()))
            .collect();
        finite(&y, || "lstm/output layer".into())?;
        Ok(Cache {
            epochs,
            seq,
            lstm,
            r,
            out_masks,
            y,
        })
    }

    fn lstm_params(&self, idx: &Idx, dir: usize) -> LstmParams<'_> {
        let base = idx.lstm[dir];
        LstmParams {
            wx: &self.tensors[base].data,
            wh: &self.tensors[base + 1].data,
            b: &self.tensors[base + 2].data,
            hidden: self.spec.lstm_hidden,
        }
    }

    /// Gradient of `sum_t (y_t - label_t)^2`.
    fn backward(&self, cache: &Cache, labels: &[f64]) -> Gradients {
        let idx = Idx::new(self.plan.conv_layers());
        let mut g = Gradients::zeros_like(self);
        let k = self.spec.kernels;
        let hsz = self.spec.lstm_hidden;
        let steps = cache.y.len();

        // output layer
        let w = &self.tensors[idx.out_w].data;
        let mut dh: [Vec<Vec<f64>>; 2] = [vec![vec![0.0; hsz]; steps], vec![vec![0.0; hsz]; steps]];
        for t in 0..steps {
            let y = cache.y[t];
            let dz = 2.0 * (y - labels[t]) * y * (1.0 - y);
            g.0[idx.out_b][0] += dz;
            for (j, rj) in cache.r[t].iter().enumerate() {
                g.0[idx.out_w][j] += dz * rj;
            }
            let scale = |j: usize| cache.out_masks[t].as_ref().map_or(1.0, |m| m[j]);
            for j in 0..hsz {
                dh[0][t][j] = dz * w[j] * scale(j);
                dh[1][t][j] = dz * w[hsz + j] * scale(hsz + j);
            }
        }

        // bidirectional LSTM
        let mut dseq = vec![vec![0.0; self.spec.dense_units]; steps];
        for d in 0..2 {
            let base = idx.lstm[d];
            let (mut dwx, mut dwh, mut db) = (
                std::mem::take(&mut g.0[base]),
                std::mem::take(&mut g.0[base + 1]),
                std::mem::take(&mut g.0[base + 2]),
            );
            layers::lstm_backward(
                &self.lstm_params(&idx, d),
                &cache.seq,
                &cache.lstm[d],
                &dh[d],
                &mut dwx,
                &mut dwh,
                &mut db,
                &mut dseq,
            );
            g.0[base] = dwx;
            g.0[base + 1] = dwh;
            g.0[base + 2] = db;
        }

        // per-epoch dense + conv stack
        for (t, ep) in cache.epochs.iter().enumerate() {
            let mut du = dseq[t].clone();
            for (j, v) in du.iter_mut().enumerate() {
                let m = ep.dense_mask.as_ref().map_or(1.0, |m| m[j]);
                *v *= m * layers::elu_grad(ep.u[j]);
            }
            let (dw_slot, db_slot) = (idx.dense_w, idx.dense_b);
            let mut dw = std::mem::take(&mut g.0[dw_slot]);
            let mut db = std::mem::take(&mut g.0[db_slot]);
            let mut dact = layers::affine_backward(&self.tensors[dw_slot].data, &ep.flat, &du, &mut dw, &mut db);
            g.0[dw_slot] = dw;
            g.0[db_slot] = db;

            for l in (0..self.plan.conv_layers()).rev() {
                let lp = &self.plan.layers[l];
                let cc = &ep.conv[l];
                if let Some(m) = &cc.mask {
                    dact.iter_mut().zip(m).for_each(|(v, s)| *v *= s);
                }
                let da = layers::maxpool_backward(&dact, &cc.arg, cc.z.len());
                let dz: Vec<f64> = da.iter().zip(&cc.z).map(|(d, &z)| d * layers::elu_grad(z)).collect();
                let cin = if l == 0 { self.input_dim } else { k };
                let mut dw = std::mem::take(&mut g.0[conv_w(l)]);
                let mut db = std::mem::take(&mut g.0[conv_b(l)]);
                if l > 0 {
                    let mut dpad = vec![0.0; cc.padded.len()];
                    layers::conv_backward(
                        &cc.padded,
                        cin,
                        k,
                        lp,
                        &self.tensors[conv_w(l)].data,
                        &dz,
                        &mut dw,
                        &mut db,
                        Some(&mut dpad),
                    );
                    dact = layers::unpad(&dpad, cin, lp);
                } else {
                    layers::conv_backward(
                        &cc.padded,
                        cin,
                        k,
                        lp,
                        &self.tensors[conv_w(l)].data,
                        &dz,
                        &mut dw,
                        &mut db,
                        None,
                    );
                }
                g.0[conv_w(l)] = dw;
                g.0[conv_b(l)] = db;
            }
        }
        g
    }
}

fn finite(v: &[f64], what: impl FnOnce() -> String) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what()))
    }
}

struct ConvCache {
    padded: Vec<f64>,
    z: Vec<f64>,
    arg: Vec<usize>,
    mask: Option<Vec<f64>>,
}

struct EpochCache {
    conv: Vec<ConvCache>,
    flat: Vec<f64>,
    u: Vec<f64>,
    dense_mask: Option<Vec<f64>>,
    #[allow(dead_code)]
    h: Vec<f64>,
}

struct Cache {
    epochs: Vec<EpochCache>,
    seq: Vec<Vec<f64>>,
    lstm: Vec<LstmCache>,
    r: Vec<Vec<f64>>,
    out_masks: Vec<Option<Vec<f64>>>,
    y: Vec<f64>,
}
