//! Linear-frequency cepstral features.
//!
//! Every 0.1 s frame gets a base vector computed over a 0.2 s window centred
//! on it:
//!
//! ```text
//! [ log frame energy, c1 .. c7, differential energy ]
//! ```
//!
//! The cepstra come from a Hamming-windowed power spectrum passed through a
//! linearly spaced triangular filterbank over [0, Nyquist], log-compressed
//! and decorrelated with an orthonormal DCT-II (c0 dropped). Differential
//! energy is the spread (max - min) of 10 ms subframe log energies inside the
//! window. First and second regression deltas are appended; the standard
//! layout drops the second delta of differential energy for 26 values per
//! frame and channel.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::config_hash;
use crate::montage::DifferentialRecording;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureLayout {
    /// base + deltas + second deltas without the differential-energy term (26 values).
    Standard,
    /// base + deltas + all second deltas (27 values).
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub frame_duration: f64,
    pub window_duration: f64,
    pub epoch_duration: f64,
    pub cepstral_count: usize,
    pub filterbank_size: usize,
    pub fft_floor: f64,
    pub delta_window: usize,
    pub subframe_duration: f64,
    pub layout: FeatureLayout,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            frame_duration: 0.1,
            window_duration: 0.2,
            epoch_duration: 1.0,
            cepstral_count: 7,
            filterbank_size: 20,
            fft_floor: 1e-10,
            delta_window: 9,
            subframe_duration: 0.01,
            layout: FeatureLayout::Standard,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.frame_duration > 0.0 && self.window_duration >= self.frame_duration) {
            return bad(format!(
                "need 0 < frame_duration ({}) <= window_duration ({})",
                self.frame_duration, self.window_duration
            ));
        }
        if self.cepstral_count == 0 || self.cepstral_count >= self.filterbank_size {
            return bad(format!(
                "need 0 < cepstral_count ({}) < filterbank_size ({})",
                self.cepstral_count, self.filterbank_size
            ));
        }
        if self.delta_window < 3 || self.delta_window % 2 == 0 {
            return bad(format!("delta_window {} must be odd and >= 3", self.delta_window));
        }
        if !(self.fft_floor > 0.0) || !(self.subframe_duration > 0.0) {
            return bad("fft_floor and subframe_duration must be positive".into());
        }
        let ratio = self.epoch_duration / self.frame_duration;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return bad(format!(
                "epoch_duration {} is not a whole number of frames",
                self.epoch_duration
            ));
        }
        Ok(())
    }

    pub fn base_dim(&self) -> usize {
        self.cepstral_count + 2
    }

    pub fn feature_dim(&self) -> usize {
        match self.layout {
            FeatureLayout::Standard => 3 * self.base_dim() - 1,
            FeatureLayout::Full => 3 * self.base_dim(),
        }
    }

    pub fn frames_per_epoch(&self) -> usize {
        (self.epoch_duration / self.frame_duration).round() as usize
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }

    fn window_samples(&self, sample_rate: f64) -> usize {
        (self.window_duration * sample_rate).round() as usize
    }
}

/// Cuts `samples` into frame-centred analysis windows, zero-padding past
/// either end. Window `t` starts `(window - frame) / 2` seconds before frame
/// `t` begins.
pub fn frame_signal(samples: &[f64], sample_rate: f64, cfg: &FeatureConfig) -> Result<Vec<Vec<f64>>> {
    if samples.is_empty() {
        return Err(Error::EmptySignal);
    }
    if sample_rate * cfg.frame_duration < 1.0 || sample_rate * cfg.window_duration < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "sample rate {sample_rate} Hz gives less than one sample per frame"
        )));
    }
    let frames = frame_count(samples.len(), sample_rate, cfg);
    let len = cfg.window_samples(sample_rate);
    let pad = (cfg.window_duration - cfg.frame_duration) / 2.0;
    Ok((0..frames)
        .map(|t| {
            let start = ((t as f64 * cfg.frame_duration - pad) * sample_rate + 1e-9).floor() as i64;
            (0..len as i64)
                .map(|i| {
                    let j = start + i;
                    if j >= 0 && (j as usize) < samples.len() {
                        samples[j as usize]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect())
}

fn frame_count(n: usize, sample_rate: f64, cfg: &FeatureConfig) -> usize {
    (n as f64 / sample_rate / cfg.frame_duration + 1e-9).floor() as usize
}

pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / denom).cos())
        .collect()
}

/// |DFT|^2 of `samples` zero-padded to `nfft`, all `nfft` bins.
pub fn power_spectrum(samples: &[f64], nfft: usize) -> Vec<f64> {
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    power_spectrum_with(&*fft, samples, nfft)
}

fn power_spectrum_with(fft: &dyn Fft<f64>, samples: &[f64], nfft: usize) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .map(|&x| Complex::new(x, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(nfft)
        .collect();
    fft.process(&mut buf);
    buf.iter().map(|c| c.norm_sqr()).collect()
}

/// Centre frequencies (Hz) of `count` triangular filters spaced evenly over
/// [0, Nyquist].
pub fn filter_centers(count: usize, sample_rate: f64) -> Vec<f64> {
    let step = sample_rate / 2.0 / (count + 1) as f64;
    (1..=count).map(|m| m as f64 * step).collect()
}

/// Triangular filter weights over the one-sided bins `0..=nfft/2`.
pub fn filterbank(count: usize, nfft: usize, sample_rate: f64) -> Vec<Vec<f64>> {
    let step = sample_rate / 2.0 / (count + 1) as f64;
    let bins = nfft / 2 + 1;
    (0..count)
        .map(|m| {
            let lo = m as f64 * step;
            let mid = lo + step;
            let hi = mid + step;
            (0..bins)
                .map(|k| {
                    let f = k as f64 * sample_rate / nfft as f64;
                    if f > lo && f <= mid {
                        (f - lo) / step
                    } else if f > mid && f < hi {
                        (hi - f) / step
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II coefficients `first..first+count` of `values`.
pub fn dct2(values: &[f64], first: usize, count: usize) -> Vec<f64> {
    let m = values.len() as f64;
    let norm = (2.0 / m).sqrt();
    (first..first + count)
        .map(|i| {
            norm * values
                .iter()
                .enumerate()
                .map(|(j, v)| v * (std::f64::consts::PI * i as f64 * (j as f64 + 0.5) / m).cos())
                .sum::<f64>()
        })
        .collect()
}

/// Precomputed window, filterbank and FFT plan for one window length.
pub struct LfccExtractor {
    cfg: FeatureConfig,
    window_len: usize,
    nfft: usize,
    subframe_len: usize,
    taper: Vec<f64>,
    bank: Vec<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl LfccExtractor {
    pub fn new(window_len: usize, sample_rate: f64, cfg: &FeatureConfig) -> Result<Self> {
        if window_len < 2 {
            return Err(Error::WindowTooShort(window_len));
        }
        let nfft = window_len.next_power_of_two();
        Ok(Self {
            cfg: cfg.clone(),
            window_len,
            nfft,
            subframe_len: ((cfg.subframe_duration * sample_rate).round() as usize).clamp(1, window_len),
            taper: hamming(window_len),
            bank: filterbank(cfg.filterbank_size, nfft, sample_rate),
            fft: FftPlanner::new().plan_fft_forward(nfft),
        })
    }

    fn check(&self, window: &[f64]) -> Result<()> {
        if window.len() != self.window_len {
            return Err(Error::DimensionMismatch(format!(
                "window has {} samples, extractor built for {}",
                window.len(),
                self.window_len
            )));
        }
        Ok(())
    }

    /// Natural-log filterbank energies, floored at `fft_floor`.
    pub fn log_filter_energies(&self, window: &[f64]) -> Result<Vec<f64>> {
        self.check(window)?;
        let tapered: Vec<f64> = window.iter().zip(&self.taper).map(|(x, w)| x * w).collect();
        let power = power_spectrum_with(&*self.fft, &tapered, self.nfft);
        Ok(self
            .bank
            .iter()
            .map(|weights| {
                let e: f64 = weights.iter().zip(&power).map(|(w, p)| w * p).sum();
                e.max(self.cfg.fft_floor).ln()
            })
            .collect())
    }

    /// `[log energy, c1..cN, differential energy]`.
    pub fn base(&self, window: &[f64]) -> Result<Vec<f64>> {
        let log_bank = self.log_filter_energies(window)?;
        let floor = self.cfg.fft_floor;
        let energy = (window.iter().map(|x| x * x).sum::<f64>() + floor).ln();

        let sub = window
            .chunks_exact(self.subframe_len)
            .map(|c| (c.iter().map(|x| x * x).sum::<f64>() + floor).ln());
        let (lo, hi) = sub.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            (lo.min(e), hi.max(e))
        });

        let mut out = Vec::with_capacity(self.cfg.base_dim());
        out.push(energy);
        out.extend(dct2(&log_bank, 1, self.cfg.cepstral_count));
        out.push(hi - lo);
        Ok(out)
    }
}

/// Base features of a single analysis window.
pub fn lfcc_frame(window: &[f64], sample_rate: f64, cfg: &FeatureConfig) -> Result<Vec<f64>> {
    LfccExtractor::new(window.len(), sample_rate, cfg)?.base(window)
}

/// Regression deltas with edge replication:
/// `d_t = sum_{n=1..N} n (x_{t+n} - x_{t-n}) / (2 sum n^2)`, `N = (window - 1) / 2`.
pub fn deltas(seq: &[Vec<f64>], window: usize) -> Vec<Vec<f64>> {
    let n = (window.max(3) - 1) / 2;
    let denom = 2.0 * (1..=n).map(|k| (k * k) as f64).sum::<f64>();
    let last = seq.len().saturating_sub(1);
    (0..seq.len())
        .map(|t| {
            let dim = seq[t].len();
            (0..dim)
                .map(|j| {
                    (1..=n)
                        .map(|k| {
                            let ahead = &seq[(t + k).min(last)];
                            let behind = &seq[t.saturating_sub(k)];
                            k as f64 * (ahead[j] - behind[j])
                        })
                        .sum::<f64>()
                        / denom
                })
                .collect()
        })
        .collect()
}

pub fn assemble(base: &[f64], d1: &[f64], d2: &[f64], cfg: &FeatureConfig) -> Result<Vec<f64>> {
    let want = cfg.base_dim();
    if base.len() != want || d1.len() != want || d2.len() != want {
        return Err(Error::DimensionMismatch(format!(
            "expected {want} base/delta/delta-delta values, got ({}, {}, {})",
            base.len(),
            d1.len(),
            d2.len()
        )));
    }
    let keep = match cfg.layout {
        FeatureLayout::Standard => want - 1,
        FeatureLayout::Full => want,
    };
    let mut out = Vec::with_capacity(cfg.feature_dim());
    out.extend_from_slice(base);
    out.extend_from_slice(d1);
    out.extend_from_slice(&d2[..keep]);
    Ok(out)
}

/// Per-frame feature vectors for one channel.
pub fn channel_features(samples: &[f64], sample_rate: f64, cfg: &FeatureConfig) -> Result<Vec<Vec<f64>>> {
    let windows = frame_signal(samples, sample_rate, cfg)?;
    let ex = LfccExtractor::new(cfg.window_samples(sample_rate), sample_rate, cfg)?;
    let base = windows.iter().map(|w| ex.base(w)).collect::<Result<Vec<_>>>()?;
    let d1 = deltas(&base, cfg.delta_window);
    let d2 = deltas(&d1, cfg.delta_window);
    base.iter()
        .zip(&d1)
        .zip(&d2)
        .map(|((b, x), y)| assemble(b, x, y, cfg))
        .collect()
}

/// Features laid out `[epoch][frame][channel][feature]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub epochs: usize,
    pub frames_per_epoch: usize,
    pub channels: usize,
    pub dim: usize,
    pub channel_labels: Vec<String>,
    pub config_hash: String,
    pub values: Vec<f32>,
}

const FEATURE_MAGIC: &[u8; 8] = b"EEGFEAT1";

impl FeatureTensor {
    pub fn zeros(epochs: usize, frames_per_epoch: usize, channel_labels: Vec<String>, dim: usize) -> Self {
        let channels = channel_labels.len();
        Self {
            epochs,
            frames_per_epoch,
            channels,
            dim,
            channel_labels,
            config_hash: String::new(),
            values: vec![0.0; epochs * frames_per_epoch * channels * dim],
        }
    }

    pub fn epoch_len(&self) -> usize {
        self.frames_per_epoch * self.channels * self.dim
    }

    fn index(&self, epoch: usize, frame: usize, channel: usize, k: usize) -> usize {
        ((epoch * self.frames_per_epoch + frame) * self.channels + channel) * self.dim + k
    }

    pub fn get(&self, epoch: usize, frame: usize, channel: usize, k: usize) -> f32 {
        self.values[self.index(epoch, frame, channel, k)]
    }

    pub fn set(&mut self, epoch: usize, frame: usize, channel: usize, k: usize, v: f32) {
        let i = self.index(epoch, frame, channel, k);
        self.values[i] = v;
    }

    /// Values of one epoch, `[frame][channel][feature]`.
    pub fn epoch(&self, epoch: usize) -> &[f32] {
        let n = self.epoch_len();
        &self.values[epoch * n..(epoch + 1) * n]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.values.len() * 4);
        out.extend_from_slice(FEATURE_MAGIC);
        for v in [self.epochs, self.frames_per_epoch, self.channels, self.dim] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        let hash = self.config_hash.as_bytes();
        out.extend_from_slice(&(hash.len() as u16).to_le_bytes());
        out.extend_from_slice(hash);
        for l in &self.channel_labels {
            out.extend_from_slice(&(l.len() as u16).to_le_bytes());
            out.extend_from_slice(l.as_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = crate::manifest::ByteReader::new(bytes);
        if r.take(8)? != FEATURE_MAGIC {
            return Err(Error::Container("not a feature tensor (bad magic)".into()));
        }
        let epochs = r.u32()? as usize;
        let frames_per_epoch = r.u32()? as usize;
        let channels = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let config_hash = r.string16()?;
        let channel_labels = (0..channels).map(|_| r.string16()).collect::<Result<Vec<_>>>()?;
        let n = epochs * frames_per_epoch * channels * dim;
        let raw = r.take(n * 4)?;
        if !r.is_done() {
            return Err(Error::Container("trailing bytes after feature values".into()));
        }
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self {
            epochs,
            frames_per_epoch,
            channels,
            dim,
            channel_labels,
            config_hash,
            values,
        })
    }

    /// One row per (epoch, frame, channel).
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("epoch,frame,channel");
        for k in 0..self.dim {
            let _ = write!(s, ",f{k}");
        }
        s.push('\n');
        for e in 0..self.epochs {
            for f in 0..self.frames_per_epoch {
                for c in 0..self.channels {
                    let _ = write!(s, "{e},{f},{}", self.channel_labels[c]);
                    for k in 0..self.dim {
                        let _ = write!(s, ",{}", self.get(e, f, c, k));
                    }
                    s.push('\n');
                }
            }
        }
        s
    }
}

/// Features for every channel of `rec`. Channels are processed in parallel;
/// the result does not depend on the thread count.
pub fn extract(rec: &DifferentialRecording, cfg: &FeatureConfig) -> Result<FeatureTensor> {
    cfg.validate()?;
    if rec.samples.is_empty() || rec.is_empty() {
        return Err(Error::EmptySignal);
    }
    let per_channel = rec
        .samples
        .par_iter()
        .map(|s| channel_features(s, rec.sample_rate, cfg))
        .collect::<Result<Vec<_>>>()?;

    let fpe = cfg.frames_per_epoch();
    let epochs = (rec.duration() / cfg.epoch_duration + 1e-9).floor() as usize;
    let epochs = epochs.min(per_channel[0].len() / fpe);
    let mut t = FeatureTensor::zeros(epochs, fpe, rec.labels.clone(), cfg.feature_dim());
    t.config_hash = cfg.hash();
    for (c, frames) in per_channel.iter().enumerate() {
        for (fi, v) in frames.iter().take(epochs * fpe).enumerate() {
            for (k, &x) in v.iter().enumerate() {
                t.set(fi / fpe, fi % fpe, c, k, x as f32);
            }
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> FeatureConfig {
        FeatureConfig::default()
    }

    #[test]
    fn frame_counts() {
        let w = frame_signal(&vec![1.0; 2500], 250.0, &cfg()).unwrap();
        assert_eq!(w.len(), 100);
        assert!(w.iter().all(|x| x.len() == 50));
        assert_eq!(frame_signal(&vec![1.0; 237], 250.0, &cfg()).unwrap().len(), 9);
        assert!(matches!(frame_signal(&[], 250.0, &cfg()), Err(Error::EmptySignal)));
    }

    #[test]
    fn frames_are_centred_and_zero_padded() {
        let x: Vec<f64> = (1..=500).map(|v| v as f64).collect();
        let w = frame_signal(&x, 250.0, &cfg()).unwrap();
        // frame 0 starts 12.5 samples early -> 13 leading zeros
        assert!(w[0][..13].iter().all(|&v| v == 0.0));
        assert_eq!(w[0][13], 1.0);
        assert_eq!(w[1][0], x[12]);
        let last = w.last().unwrap();
        assert_eq!(*last.last().unwrap(), 0.0);
    }

    #[test]
    fn zero_window() {
        let c = cfg();
        let b = lfcc_frame(&[0.0; 50], 250.0, &c).unwrap();
        assert_eq!(b.len(), 9);
        assert_abs_diff_eq!(b[0], c.fft_floor.ln(), epsilon = 1e-12);
        for v in &b[1..8] {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12);
        }
        assert_eq!(b[8], 0.0);
    }

    #[test]
    fn short_window_rejected() {
        assert!(matches!(lfcc_frame(&[1.0], 250.0, &cfg()), Err(Error::WindowTooShort(1))));
    }

    /// Filterbank energies from a direct O(N^2) DFT.
    fn oracle_filter_energies(x: &[f64], sr: f64, filters: usize) -> Vec<f64> {
        let n = x.len();
        let nfft = n.next_power_of_two();
        let w: Vec<f64> = (0..n)
            .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
            .collect();
        let power: Vec<f64> = (0..=nfft / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for i in 0..n {
                    let a = -2.0 * std::f64::consts::PI * (k * i) as f64 / nfft as f64;
                    re += x[i] * w[i] * a.cos();
                    im += x[i] * w[i] * a.sin();
                }
                re * re + im * im
            })
            .collect();
        let step = sr / 2.0 / (filters + 1) as f64;
        (0..filters)
            .map(|m| {
                let centre = (m + 1) as f64 * step;
                power
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let f = k as f64 * sr / nfft as f64;
                        (1.0 - (f - centre).abs() / step).max(0.0) * p
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn sinusoid_peaks_in_its_filter() {
        let c = cfg();
        let sr = 250.0;
        let n = 512;
        let ex = LfccExtractor::new(n, sr, &c).unwrap();
        for (k, f) in filter_centers(c.filterbank_size, sr).into_iter().enumerate() {
            let x: Vec<f64> = (0..n)
                .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / sr).sin())
                .collect();
            let got = ex.log_filter_energies(&x).unwrap();
            let want = oracle_filter_energies(&x, sr, c.filterbank_size);
            let argmax = |v: &[f64]| {
                v.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .unwrap()
            };
            assert_eq!(argmax(&want), k, "oracle disagrees at filter {k}");
            assert_eq!(argmax(&got), k, "filter {k}");
            for (g, w) in got.iter().zip(&want) {
                assert_abs_diff_eq!(*g, w.max(c.fft_floor).ln(), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn doubling_amplitude_shifts_only_energy() {
        let c = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..50).map(|_| rng.random_range(-50.0..50.0)).collect();
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = lfcc_frame(&x, 250.0, &c).unwrap();
        let b = lfcc_frame(&x2, 250.0, &c).unwrap();
        assert_abs_diff_eq!(b[0] - a[0], 4.0_f64.ln(), epsilon = 1e-9);
        for i in 1..9 {
            assert_abs_diff_eq!(a[i], b[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn delta_of_constant_is_zero() {
        let seq = vec![vec![3.25, -1.0]; 12];
        for d in deltas(&seq, 9) {
            assert_eq!(d, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn delta_of_ramp_is_one_inside() {
        let seq: Vec<Vec<f64>> = (0..20).map(|t| vec![t as f64]).collect();
        let d = deltas(&seq, 9);
        for row in &d[4..16] {
            assert_abs_diff_eq!(row[0], 1.0, epsilon = 1e-12);
        }
        assert!(d[0][0] < 1.0);
    }

    #[test]
    fn deltas_match_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let seq: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.random_range(-5.0..5.0)]).collect();
        let x: Vec<f64> = seq.iter().map(|v| v[0]).collect();
        let clamp = |i: i64| x[i.clamp(0, 19) as usize];
        let got = deltas(&seq, 9);
        for t in 0..20i64 {
            let num = 1.0 * (clamp(t + 1) - clamp(t - 1))
                + 2.0 * (clamp(t + 2) - clamp(t - 2))
                + 3.0 * (clamp(t + 3) - clamp(t - 3))
                + 4.0 * (clamp(t + 4) - clamp(t - 4));
            assert_abs_diff_eq!(got[t as usize][0], num / 60.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn assemble_layout() {
        let c = cfg();
        let z = vec![0.0; 9];
        assert_eq!(assemble(&z, &z, &z, &c).unwrap(), vec![0.0; 26]);
        let base: Vec<f64> = (0..9).map(|v| v as f64).collect();
        let d1: Vec<f64> = (10..19).map(|v| v as f64).collect();
        let d2: Vec<f64> = (20..29).map(|v| v as f64).collect();
        let v = assemble(&base, &d1, &d2, &c).unwrap();
        assert_eq!(v.len(), 26);
        assert_eq!(v[25], 27.0);
        let full = FeatureConfig { layout: FeatureLayout::Full, ..cfg() };
        assert_eq!(assemble(&base, &d1, &d2, &full).unwrap().len(), 27);
        let s = vec![0.0; 8];
        assert!(matches!(assemble(&s, &s, &s, &c), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn tensor_shape_and_container() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rec = DifferentialRecording {
            labels: vec!["A-B".into(), "C-D".into()],
            samples: (0..2)
                .map(|_| (0..250 * 3 + 100).map(|_| rng.random_range(-20.0..20.0)).collect())
                .collect(),
            sample_rate: 250.0,
        };
        let t = extract(&rec, &cfg()).unwrap();
        assert_eq!((t.epochs, t.frames_per_epoch, t.channels, t.dim), (3, 10, 2, 26));
        assert_eq!(t.values.len(), 3 * 10 * 2 * 26);
        let back = FeatureTensor::from_bytes(&t.to_bytes()).unwrap();
        assert_eq!(back, t);
        assert!(FeatureTensor::from_bytes(&t.to_bytes()[..40]).is_err());
        assert_eq!(t.to_csv().lines().count(), 1 + 3 * 10 * 2);
    }

    #[test]
    fn extraction_independent_of_thread_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rec = DifferentialRecording {
            labels: (0..6).map(|i| format!("C{i}")).collect(),
            samples: (0..6)
                .map(|_| (0..500).map(|_| rng.random_range(-20.0..20.0)).collect())
                .collect(),
            sample_rate: 250.0,
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| extract(&rec, &cfg()).unwrap())
        };
        assert_eq!(run(1).to_bytes(), run(3).to_bytes());
    }

    proptest! {
        #[test]
        fn parseval(x in prop::collection::vec(-100.0..100.0f64, 2..80)) {
            let w = hamming(x.len());
            let tapered: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
            let nfft = x.len().next_power_of_two();
            let time: f64 = tapered.iter().map(|v| v * v).sum();
            let freq: f64 = power_spectrum(&tapered, nfft).iter().sum::<f64>() / nfft as f64;
            prop_assert!((time - freq).abs() <= 1e-6 * time.max(1e-12));
        }

        #[test]
        fn scale_lands_in_energy_only(x in prop::collection::vec(-100.0..100.0f64, 50), s in 0.5..10.0f64) {
            prop_assume!(x.iter().map(|v| v * v).sum::<f64>() > 100.0);
            let c = cfg();
            let a = lfcc_frame(&x, 250.0, &c).unwrap();
            let y: Vec<f64> = x.iter().map(|v| v * s).collect();
            let b = lfcc_frame(&y, 250.0, &c).unwrap();
            prop_assert!((b[0] - a[0] - 2.0 * s.ln()).abs() < 1e-9);
            for i in 1..8 {
                prop_assert!((a[i] - b[i]).abs() < 1e-9, "c{} moved: {} vs {}", i, a[i], b[i]);
            }
        }

        #[test]
        fn constant_sequences_have_zero_deltas(v in -1e6..1e6f64, len in 1usize..30) {
            let seq = vec![vec![v]; len];
            for d in deltas(&seq, 9) {
                prop_assert_eq!(d[0], 0.0);
            }
        }
    }
}
