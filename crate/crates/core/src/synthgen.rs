//! Synthetic referential EEG with annotated seizure-like bursts.
//!
//! Every electrode carries independent pink noise. Burst intervals come from
//! a renewal process; inside each one the footprint electrodes get a 3 Hz
//! spike-and-slow-wave pattern scaled by `gain * amplitude_uv * weight`.
//! Background and burst timing draw from separate seeded streams, so
//! `gain = 0` reproduces the background exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::edf::Recording;
use crate::error::{Error, Result};
use crate::events::{Event, EventList, SEIZURE_LABEL};
use crate::montage::TCP_ELECTRODES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintEntry {
    pub electrode: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BurstConfig {
    pub rate_per_hour: f64,
    pub min_duration: f64,
    pub max_duration: f64,
    /// Minimum quiet time before each burst, seconds.
    pub min_gap: f64,
    pub frequency: f64,
    pub amplitude_uv: f64,
    pub gain: f64,
    pub footprint: Vec<FootprintEntry>,
}

impl Default for BurstConfig {
    fn default() -> Self {
        let fp = |e: &str, w: f64| FootprintEntry {
            electrode: e.into(),
            weight: w,
        };
        Self {
            rate_per_hour: 12.0,
            min_duration: 10.0,
            max_duration: 30.0,
            min_gap: 10.0,
            frequency: 3.0,
            amplitude_uv: 50.0,
            gain: 3.0,
            // Unequal weights keep the F7-T3 and T3-T5 differences non-zero.
            footprint: vec![fp("F7", 0.6), fp("T3", 1.0), fp("T5", 0.6)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub duration: f64,
    pub sample_rate: f64,
    /// RMS of the pink background, µV.
    pub background_uv: f64,
    pub burst: BurstConfig,
    pub seed: u64,
    /// Number of recordings in a generated dataset.
    pub recordings: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            duration: 3600.0,
            sample_rate: 250.0,
            background_uv: 20.0,
            burst: BurstConfig::default(),
            seed: 0,
            recordings: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration {} must be positive", self.duration));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return bad(format!("sample rate {}", self.sample_rate));
        }
        let b = &self.burst;
        if !(b.min_duration > 0.0 && b.max_duration >= b.min_duration) {
            return bad(format!("burst durations [{}, {}]", b.min_duration, b.max_duration));
        }
        if !(b.rate_per_hour >= 0.0 && b.min_gap >= 0.0 && b.frequency > 0.0 && b.gain >= 0.0) {
            return bad("burst rate, gap, frequency and gain must be non-negative".into());
        }
        if b.footprint.is_empty() {
            return bad("burst footprint is empty".into());
        }
        for f in &b.footprint {
            if !TCP_ELECTRODES.iter().any(|e| e.eq_ignore_ascii_case(&f.electrode)) {
                return bad(format!("footprint electrode {} is not a 10-20 electrode", f.electrode));
            }
        }
        Ok(())
    }

    /// Parses JSON, or `key = value` lines where burst fields use a `burst.`
    /// prefix and the footprint is written `F7:0.6, T3:1.0`.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        let cfg: Self = if trimmed.starts_with('{') {
            serde_json::from_str(trimmed).map_err(|e| Error::InvalidConfig(e.to_string()))?
        } else {
            let mut top = serde_json::Map::new();
            let mut burst = serde_json::Map::new();
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidConfig(format!("config line {}: expected key = value", i + 1)))?;
                let (k, v) = (k.trim(), v.trim());
                let value = if k == "burst.footprint" {
                    parse_footprint(v)?
                } else {
                    serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.into()))
                };
                match k.strip_prefix("burst.") {
                    Some(b) => burst.insert(b.into(), value),
                    None => top.insert(k.into(), value),
                };
            }
            if !burst.is_empty() {
                top.insert("burst".into(), serde_json::Value::Object(burst));
            }
            serde_json::from_value(serde_json::Value::Object(top)).map_err(|e| Error::InvalidConfig(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration of recording `index` in a dataset: same parameters,
    /// derived seed.
    pub fn for_recording(&self, index: usize) -> Self {
        Self {
            seed: derive_seed(self.seed, 0x5EED, index as u64),
            recordings: 1,
            ..self.clone()
        }
    }
}

fn parse_footprint(v: &str) -> Result<serde_json::Value> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (e, w) = part.split_once(':').unwrap_or((part, "1"));
        let w: f64 = w
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("footprint weight {w:?}")))?;
        out.push(serde_json::json!({"electrode": e.trim().to_ascii_uppercase(), "weight": w}));
    }
    Ok(serde_json::Value::Array(out))
}

fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pink (1/f) noise with unit RMS, via a sum of first-order filtered white noise.
pub fn pink_noise(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let mut b = [0.0f64; 7];
    let mut out: Vec<f64> = (0..n)
        .map(|_| {
            let w: f64 = normal.sample(rng);
            b[0] = 0.99886 * b[0] + w * 0.0555179;
            b[1] = 0.99332 * b[1] + w * 0.0750759;
            b[2] = 0.96900 * b[2] + w * 0.1538520;
            b[3] = 0.86650 * b[3] + w * 0.3104856;
            b[4] = 0.55000 * b[4] + w * 0.5329522;
            b[5] = -0.7616 * b[5] - w * 0.0168980;
            let y = b[0] + b[1] + b[2] + b[3] + b[4] + b[5] + b[6] + w * 0.5362;
            b[6] = w * 0.115926;
            y
        })
        .collect();
    let mean = out.iter().sum::<f64>() / n.max(1) as f64;
    let rms = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
    if rms > 0.0 {
        out.iter_mut().for_each(|v| *v = (*v - mean) / rms);
    }
    out
}

/// One period of the burst pattern at phase `p` in `[0, 1)`: a sharp spike
/// followed by a slow wave, roughly zero mean.
pub fn spike_wave(p: f64) -> f64 {
    let spike = (-((p - 0.08) / 0.03).powi(2)).exp();
    let slow = -0.45 * (std::f64::consts::PI * p).sin();
    let saw = 0.25 * (1.0 - 2.0 * p);
    spike + slow + saw
}

/// Seeded burst intervals within `[0, duration]`, disjoint and sorted.
pub fn burst_intervals(cfg: &SynthConfig) -> Vec<(f64, f64)> {
    let b = &cfg.burst;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xB0257, 0));
    if b.rate_per_hour <= 0.0 {
        return Vec::new();
    }
    let mean_dur = 0.5 * (b.min_duration + b.max_duration);
    let mean_gap = (3600.0 / b.rate_per_hour - mean_dur - b.min_gap).max(1.0);
    let exp = Exp::new(1.0 / mean_gap).expect("positive rate");
    let snap = |t: f64| (t * cfg.sample_rate).round() / cfg.sample_rate;
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += b.min_gap + exp.sample(&mut rng);
        let d = if b.max_duration > b.min_duration {
            rng.random_range(b.min_duration..b.max_duration)
        } else {
            b.min_duration
        };
        let (s, e) = (snap(t), snap(t + d));
        if e > cfg.duration || e <= s {
            break;
        }
        out.push((s, e));
        t = e;
    }
    out
}

/// A referential recording over the 19 TCP electrodes and its seizure events.
pub fn generate(cfg: &SynthConfig) -> Result<(Recording, EventList)> {
    cfg.validate()?;
    let n = (cfg.duration * cfg.sample_rate).round() as usize;
    let duration = n as f64 / cfg.sample_rate;
    let mut samples: Vec<Vec<f64>> = (0..TCP_ELECTRODES.len())
        .map(|e| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xBAC6, e as u64));
            let mut x = pink_noise(n, &mut rng);
            x.iter_mut().for_each(|v| *v *= cfg.background_uv);
            x
        })
        .collect();

    let intervals = burst_intervals(cfg);
    let b = &cfg.burst;
    let mut phase_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xFA5E, 0));
    for &(s, e) in &intervals {
        let phase0: f64 = phase_rng.random();
        let (i0, i1) = ((s * cfg.sample_rate).round() as usize, ((e * cfg.sample_rate).round() as usize).min(n));
        let wave: Vec<f64> = (i0..i1)
            .map(|i| {
                let t = (i - i0) as f64 / cfg.sample_rate;
                let p = (phase0 + b.frequency * t).fract();
                b.gain * b.amplitude_uv * spike_wave(p)
            })
            .collect();
        for f in &b.footprint {
            let idx = TCP_ELECTRODES
                .iter()
                .position(|x| x.eq_ignore_ascii_case(&f.electrode))
                .expect("validated footprint");
            for (v, w) in samples[idx][i0..i1].iter_mut().zip(&wave) {
                *v += f.weight * w;
            }
        }
    }

    let labels = TCP_ELECTRODES.iter().map(|s| s.to_string()).collect();
    let rec = Recording::new(labels, samples, cfg.sample_rate)?;
    let events = intervals
        .into_iter()
        .map(|(s, e)| Event::new(s, e, SEIZURE_LABEL))
        .collect();
    Ok((rec, EventList::new(events, duration)?))
}
