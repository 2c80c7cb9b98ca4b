//! Posteriors to hypothesis events: median smoothing, thresholding, gap
//! merging and a minimum-duration filter.

use serde::{Deserialize, Serialize};

use crate::detector::EpochPosteriors;
use crate::error::{Error, Result};
use crate::events::{Event, EventList, SEIZURE_LABEL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PostprocessConfig {
    /// An epoch is positive when its smoothed posterior is strictly above
    /// this; `0` marks every epoch positive.
    pub threshold: f64,
    /// Median filter width in epochs; 1 disables smoothing.
    pub smoothing: usize,
    pub min_duration: f64,
    pub merge_gap: f64,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            smoothing: 3,
            min_duration: 3.0,
            merge_gap: 1.0,
        }
    }
}

impl PostprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!("threshold {} not in [0, 1]", self.threshold)));
        }
        if self.smoothing % 2 == 0 {
            return Err(Error::InvalidConfig(format!("smoothing width {} must be odd", self.smoothing)));
        }
        if !(self.min_duration >= 0.0 && self.merge_gap >= 0.0) {
            return Err(Error::InvalidConfig("min_duration and merge_gap must be >= 0".into()));
        }
        Ok(())
    }
}

/// Running median with edge replication.
pub fn median_smooth(values: &[f64], width: usize) -> Vec<f64> {
    if width <= 1 || values.is_empty() {
        return values.to_vec();
    }
    let half = (width / 2) as isize;
    let n = values.len() as isize;
    let mut buf = vec![0.0; width];
    (0..n)
        .map(|i| {
            for (k, b) in buf.iter_mut().enumerate() {
                let j = (i + k as isize - half).clamp(0, n - 1);
                *b = values[j as usize];
            }
            buf.sort_by(f64::total_cmp);
            buf[width / 2]
        })
        .collect()
}

/// Smoothed and thresholded epoch decisions.
pub fn binarize(posteriors: &[f64], cfg: &PostprocessConfig) -> Vec<bool> {
    median_smooth(posteriors, cfg.smoothing)
        .into_iter()
        .map(|p| cfg.threshold <= 0.0 || p > cfg.threshold)
        .collect()
}

/// Maximal positive runs as `(first, end)` epoch ranges.
fn runs(mask: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &m) in mask.iter().chain(std::iter::once(&false)).enumerate() {
        match (m, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    out
}

pub fn to_events(posteriors: &EpochPosteriors, cfg: &PostprocessConfig) -> Result<EventList> {
    cfg.validate()?;
    let d = posteriors.epoch_duration;
    let total = posteriors.duration();
    let mask = binarize(&posteriors.values, cfg);
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in runs(&mask) {
        let (s, e) = (a as f64 * d, b as f64 * d);
        match merged.last_mut() {
            Some(last) if s - last.1 <= cfg.merge_gap + 1e-9 => last.1 = e,
            _ => merged.push((s, e)),
        }
    }
    let events = merged
        .into_iter()
        .filter(|(s, e)| e - s + 1e-9 >= cfg.min_duration)
        .map(|(s, e)| Event::new(s, e, SEIZURE_LABEL))
        .collect();
    EventList::new(events, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(threshold: f64, smoothing: usize, min_duration: f64, merge_gap: f64) -> PostprocessConfig {
        PostprocessConfig {
            threshold,
            smoothing,
            min_duration,
            merge_gap,
        }
    }

    fn spans(p: Vec<f64>, c: &PostprocessConfig) -> Vec<(f64, f64)> {
        to_events(&EpochPosteriors::new(p, 1.0), c)
            .unwrap()
            .events()
            .iter()
            .map(|e| (e.start, e.stop))
            .collect()
    }

    #[test]
    fn all_positive_is_one_event() {
        assert_eq!(spans(vec![0.9; 5], &cfg(0.5, 1, 3.0, 1.0)), vec![(0.0, 5.0)]);
    }

    #[test]
    fn isolated_epoch_is_dropped() {
        let p = vec![0.1, 0.1, 0.9, 0.1, 0.1];
        assert!(spans(p, &cfg(0.5, 1, 2.0, 0.0)).is_empty());
    }

    #[test]
    fn gaps_merge() {
        let p = vec![0.9, 0.9, 0.9, 0.1, 0.9, 0.9, 0.9, 0.1];
        assert_eq!(spans(p.clone(), &cfg(0.5, 1, 0.0, 1.0)), vec![(0.0, 7.0)]);
        assert_eq!(spans(p, &cfg(0.5, 1, 0.0, 0.0)), vec![(0.0, 3.0), (4.0, 7.0)]);
    }

    #[test]
    fn threshold_extremes() {
        let p = vec![0.0, 0.3, 1.0, 0.2];
        assert_eq!(spans(p.clone(), &cfg(0.0, 1, 0.0, 0.0)), vec![(0.0, 4.0)]);
        assert!(spans(p, &cfg(1.0, 1, 0.0, 0.0)).is_empty());
    }

    #[test]
    fn median_removes_spikes() {
        assert_eq!(median_smooth(&[0.0, 0.0, 1.0, 0.0, 0.0], 3), vec![0.0; 5]);
        assert_eq!(median_smooth(&[1.0, 0.0, 0.0], 3), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn lower_threshold_is_superset() {
        let p: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64) / 100.0).collect();
        let mut prev = vec![false; p.len()];
        for k in (0..=20).rev() {
            let mask = binarize(&p, &cfg(k as f64 / 20.0, 3, 0.0, 0.0));
            assert!(prev.iter().zip(&mask).all(|(a, b)| !a || *b));
            prev = mask;
        }
    }

    #[test]
    fn rejects_even_width() {
        assert!(to_events(&EpochPosteriors::new(vec![0.5], 1.0), &cfg(0.5, 2, 0.0, 0.0)).is_err());
    }
}
