//! Any-Overlap event scoring, epoch-based specificity, false-alarm rate and
//! ROC sweeps.
//!
//! Overlap is strict: intervals that only touch at an endpoint do not
//! overlap. A reference event is detected when at least one hypothesis event
//! overlaps it; a hypothesis event is a false alarm when it overlaps no
//! reference. Specificity is counted over 1 s epochs, each labeled positive
//! when more than half of it is covered by events.

use std::fmt::Write as _;

use serde::Serialize;

use crate::detector::EpochPosteriors;
use crate::error::{Error, Result};
use crate::events::{Event, EventList};
use crate::postprocess::{self, PostprocessConfig};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

fn same_duration(a: &EventList, b: &EventList) -> Result<()> {
    let (x, y) = (a.total_duration(), b.total_duration());
    if (x - y).abs() > 1e-9 * x.abs().max(1.0) {
        return Err(Error::DurationMismatch(x, y));
    }
    Ok(())
}

/// `hyp` re-stated over `total` seconds. Hypotheses derived from per-epoch
/// posteriors end at the last whole epoch, so a shortfall of less than one
/// epoch is accepted.
pub fn align_duration(hyp: &EventList, total: f64, epoch: f64) -> Result<EventList> {
    let d = hyp.total_duration();
    if d > total + 1e-9 || total - d >= epoch {
        return Err(Error::DurationMismatch(total, d));
    }
    EventList::new(hyp.events().to_vec(), total)
}

/// `(tp, fp)` under Any-Overlap scoring, by a sweep over sorted endpoints.
pub fn ovlp_score(reference: &EventList, hyp: &EventList) -> Result<(usize, usize)> {
    same_duration(reference, hyp)?;
    let lists = [reference.events(), hyp.events()];
    // (coordinate, is_start, list, index); ends sort before starts.
    let mut points: Vec<(f64, bool, usize, usize)> = Vec::with_capacity(2 * (lists[0].len() + lists[1].len()));
    for (l, evs) in lists.iter().enumerate() {
        for (i, e) in evs.iter().enumerate() {
            points.push((e.start, true, l, i));
            points.push((e.stop, false, l, i));
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut active = [vec![false; lists[0].len()], vec![false; lists[1].len()]];
    let mut active_count = [0usize; 2];
    let mut marked = [vec![false; lists[0].len()], vec![false; lists[1].len()]];
    // Active items not yet known to overlap anything (may hold stale entries).
    let mut unmarked: [Vec<usize>; 2] = [Vec::new(), Vec::new()];

    let mut g = 0;
    while g < points.len() {
        let x = points[g].0;
        let mut end = g;
        while end < points.len() && points[end].0 == x {
            end += 1;
        }
        let group = &points[g..end];
        for &(_, is_start, l, i) in group {
            if !is_start {
                active[l][i] = false;
                active_count[l] -= 1;
            }
        }
        for &(_, is_start, l, i) in group {
            if is_start {
                active[l][i] = true;
                active_count[l] += 1;
                unmarked[l].push(i);
            }
        }
        for &(_, is_start, l, i) in group {
            if !is_start {
                continue;
            }
            let other = 1 - l;
            if active_count[other] > 0 {
                marked[l][i] = true;
                for j in std::mem::take(&mut unmarked[other]) {
                    if active[other][j] {
                        marked[other][j] = true;
                    }
                }
            }
        }
        g = end;
    }
    let tp = marked[0].iter().filter(|&&m| m).count();
    let fp = marked[1].iter().filter(|&&m| !m).count();
    Ok((tp, fp))
}

/// False alarms normalized to 24 hours.
pub fn fa_per_24h(fp: usize, total_duration: f64) -> Result<f64> {
    if !(total_duration > 0.0 && total_duration.is_finite()) {
        return Err(Error::ZeroDuration(total_duration));
    }
    Ok(fp as f64 * SECONDS_PER_DAY / total_duration)
}

/// Number of whole epochs in `total_duration`.
pub fn epoch_count(total_duration: f64, epoch: f64) -> usize {
    (total_duration / epoch + 1e-9).floor() as usize
}

/// Per-epoch majority labels: an epoch is positive when the union of
/// events covers more than half of it.
pub fn epoch_labels(events: &[Event], epochs: usize, epoch: f64) -> Vec<bool> {
    epoch_labels_at(events, epochs, epoch, 0.5)
}

/// Epoch labels with a configurable coverage fraction (strictly exceeded).
pub fn epoch_labels_at(events: &[Event], epochs: usize, epoch: f64, fraction: f64) -> Vec<bool> {
    let mut sorted: Vec<(f64, f64)> = events.iter().map(|e| (e.start, e.stop)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut union: Vec<(f64, f64)> = Vec::new();
    for (s, e) in sorted {
        match union.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => union.push((s, e)),
        }
    }
    let mut cover = vec![0.0; epochs];
    for (s, e) in union {
        let first = (s / epoch).floor().max(0.0) as usize;
        let mut k = first;
        while k < epochs && (k as f64) * epoch < e {
            let lo = (k as f64 * epoch).max(s);
            let hi = ((k + 1) as f64 * epoch).min(e);
            if hi > lo {
                cover[k] += hi - lo;
            }
            k += 1;
        }
    }
    cover.into_iter().map(|c| c > fraction * epoch).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EpochConfusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl EpochConfusion {
    pub fn add(&mut self, o: &EpochConfusion) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
    }

    /// `100 tn / (tn + fp)`; 100 when there are no negative epochs.
    pub fn specificity(&self) -> f64 {
        let neg = self.tn + self.fp;
        if neg == 0 {
            100.0
        } else {
            100.0 * self.tn as f64 / neg as f64
        }
    }

    /// `fp / (fp + tn)`; 0 when there are no negative epochs.
    pub fn fpr(&self) -> f64 {
        let neg = self.tn + self.fp;
        if neg == 0 {
            0.0
        } else {
            self.fp as f64 / neg as f64
        }
    }
}

pub fn epoch_confusion(reference: &EventList, hyp: &EventList, epoch: f64) -> Result<EpochConfusion> {
    same_duration(reference, hyp)?;
    let n = epoch_count(reference.total_duration(), epoch);
    let r = epoch_labels(reference.events(), n, epoch);
    let h = epoch_labels(hyp.events(), n, epoch);
    let mut c = EpochConfusion::default();
    for (a, b) in r.into_iter().zip(h) {
        match (a, b) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
    pub sensitivity: f64,
    pub fa_per_24h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub recordings: usize,
    pub ref_events: usize,
    pub hyp_events: usize,
    pub tp: usize,
    pub fp: usize,
    pub sensitivity: f64,
    pub specificity: f64,
    pub fa_per_24h: f64,
    pub total_duration: f64,
    pub epochs: EpochConfusion,
    pub specificity_basis: String,
    pub roc: Vec<RocPoint>,
}

fn sensitivity(tp: usize, refs: usize) -> f64 {
    if refs == 0 {
        0.0
    } else {
        100.0 * tp as f64 / refs as f64
    }
}

/// Scores paired recordings and sums counts in input order.
pub fn score(refs: &[EventList], hyps: &[EventList]) -> Result<ScoreReport> {
    if refs.len() != hyps.len() {
        return Err(Error::LengthMismatch(format!(
            "{} reference lists, {} hypothesis lists",
            refs.len(),
            hyps.len()
        )));
    }
    let (mut tp, mut fp, mut nref, mut nhyp, mut total) = (0, 0, 0, 0, 0.0);
    let mut epochs = EpochConfusion::default();
    for (r, h) in refs.iter().zip(hyps) {
        let (t, f) = ovlp_score(r, h)?;
        tp += t;
        fp += f;
        nref += r.len();
        nhyp += h.len();
        total += r.total_duration();
        epochs.add(&epoch_confusion(r, h, 1.0)?);
    }
    Ok(ScoreReport {
        recordings: refs.len(),
        ref_events: nref,
        hyp_events: nhyp,
        tp,
        fp,
        sensitivity: sensitivity(tp, nref),
        specificity: epochs.specificity(),
        fa_per_24h: fa_per_24h(fp, total)?,
        total_duration: total,
        epochs,
        specificity_basis: "1 s epochs, majority coverage".into(),
        roc: Vec::new(),
    })
}

/// Validates a threshold grid: non-empty, within `[0, 1]`, returned sorted
/// descending without duplicates.
pub fn check_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty threshold grid".into()));
    }
    if let Some(t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::InvalidGrid(format!("threshold {t} not in [0, 1]")));
    }
    let mut g = grid.to_vec();
    g.sort_by(|a, b| b.total_cmp(a));
    g.dedup();
    Ok(g)
}

/// Thresholds from a file: numbers separated by commas or newlines, `#`
/// comments and a non-numeric header allowed.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok.parse::<f64>() {
                Ok(v) => out.push(v),
                Err(_) if out.is_empty() => {}
                Err(_) => return Err(Error::InvalidGrid(format!("not a number: {tok:?}"))),
            }
        }
    }
    check_grid(&out)
}

/// `n + 1` evenly spaced thresholds from 1 down to 0.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|i| 1.0 - i as f64 / n as f64).collect()
}

/// One ROC point per threshold, in descending threshold order.
pub fn roc_sweep(
    posteriors: &[EpochPosteriors],
    refs: &[EventList],
    cfg: &PostprocessConfig,
    grid: &[f64],
) -> Result<Vec<RocPoint>> {
    let grid = check_grid(grid)?;
    if posteriors.len() != refs.len() {
        return Err(Error::LengthMismatch(format!(
            "{} posterior sets, {} reference lists",
            posteriors.len(),
            refs.len()
        )));
    }
    grid.iter()
        .map(|&threshold| {
            let c = PostprocessConfig { threshold, ..*cfg };
            let hyps = posteriors
                .iter()
                .zip(refs)
                .map(|(p, r)| {
                    let h = postprocess::to_events(p, &c)?;
                    align_duration(&h, r.total_duration(), p.epoch_duration)
                })
                .collect::<Result<Vec<_>>>()?;
            let rep = score(refs, &hyps)?;
            Ok(RocPoint {
                threshold,
                fpr: rep.epochs.fpr(),
                tpr: rep.sensitivity / 100.0,
                sensitivity: rep.sensitivity,
                fa_per_24h: rep.fa_per_24h,
            })
        })
        .collect()
}

/// Trapezoidal area under `(fpr, tpr)` points, closed with (0,0) and (1,1).
pub fn roc_auc(points: &[RocPoint]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.fpr, p.tpr)).collect();
    pts.push((0.0, 0.0));
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
}

/// Probability that a random positive epoch outscores a random negative one
/// (ties count half). `None` without both classes.
pub fn epoch_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut idx: Vec<usize> = (0..scores.len().min(labels.len())).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let npos = idx.iter().filter(|&&i| labels[i]).count();
    let nneg = idx.len() - npos;
    if npos == 0 || nneg == 0 {
        return None;
    }
    // Sum of (1-based, tie-averaged) ranks of positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        rank_sum += avg * idx[i..j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j;
    }
    let u = rank_sum - (npos * (npos + 1)) as f64 / 2.0;
    Some(u / (npos as f64 * nneg as f64))
}

pub fn roc_csv(points: &[RocPoint]) -> String {
    let mut s = String::from("threshold,fpr,tpr\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", p.threshold, p.fpr, p.tpr);
    }
    s
}

/// Minimal standalone SVG line plot of an ROC curve.
pub fn roc_svg(points: &[RocPoint], title: &str) -> String {
    let (w, h, m) = (420.0, 420.0, 50.0);
    let plot = w - 2.0 * m;
    let x = |v: f64| m + v * plot;
    let y = |v: f64| h - m - v * plot;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{plot}" height="{plot}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#bbb" stroke-dasharray="4 4"/>"##,
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{v:.1}</text>"#, x(v), h - m + 18.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.1}</text>"#, m - 6.0, y(v) + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">False positive rate</text>"#,
        w / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">True positive rate</text>"#,
        h / 2.0,
        h / 2.0
    );
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.fpr, p.tpr)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let path: Vec<String> = pts.iter().map(|&(a, b)| format!("{:.2},{:.2}", x(a), y(b))).collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#1f5fa8" stroke-width="2"/>"##,
        path.join(" ")
    );
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(spans: &[(f64, f64)], total: f64) -> EventList {
        EventList::new(spans.iter().map(|&(a, b)| Event::new(a, b, "seiz")).collect(), total).unwrap()
    }

    #[test]
    fn overlap_examples() {
        let t = 100.0;
        assert_eq!(ovlp_score(&list(&[(10.0, 20.0)], t), &list(&[(15.0, 30.0)], t)).unwrap(), (1, 0));
        assert_eq!(
            ovlp_score(&list(&[(10.0, 20.0), (40.0, 50.0)], t), &list(&[(15.0, 45.0)], t)).unwrap(),
            (2, 0)
        );
        assert_eq!(ovlp_score(&list(&[(10.0, 20.0)], t), &list(&[(20.0, 30.0)], t)).unwrap(), (0, 1));
        assert_eq!(ovlp_score(&list(&[(10.0, 20.0)], t), &list(&[(10.0, 20.0)], t)).unwrap(), (1, 0));
        assert!(ovlp_score(&list(&[], t), &list(&[], 50.0)).is_err());
    }

    #[test]
    fn fa_rate() {
        assert_eq!(fa_per_24h(2, 12.0 * 3600.0).unwrap(), 4.0);
        assert_eq!(fa_per_24h(0, 5.0).unwrap(), 0.0);
        assert_eq!(fa_per_24h(23, 86400.0).unwrap(), 23.0);
        assert!(fa_per_24h(1, 0.0).is_err());
    }

    #[test]
    fn confusion_extremes() {
        let r = list(&[(2.0, 5.0)], 10.0);
        let c = epoch_confusion(&r, &r, 1.0).unwrap();
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (3, 0, 7, 0));
        assert_eq!(c.specificity(), 100.0);
        let c = epoch_confusion(&list(&[], 10.0), &list(&[(0.0, 10.0)], 10.0), 1.0).unwrap();
        assert_eq!(c.specificity(), 0.0);
    }

    #[test]
    fn half_coverage_is_negative() {
        assert_eq!(epoch_labels(&[Event::new(0.5, 1.0, "s")], 2, 1.0), vec![false, false]);
        assert_eq!(epoch_labels(&[Event::new(0.4, 1.0, "s")], 2, 1.0), vec![true, false]);
        let split = [Event::new(0.0, 0.3, "s"), Event::new(0.2, 0.6, "s")];
        assert_eq!(epoch_labels(&split, 1, 1.0), vec![true]);
    }

    #[test]
    fn auc_with_ties() {
        assert_eq!(epoch_auc(&[0.1, 0.9], &[false, true]), Some(1.0));
        assert_eq!(epoch_auc(&[0.5, 0.5], &[false, true]), Some(0.5));
        assert_eq!(epoch_auc(&[0.5], &[true]), None);
        let pts = [RocPoint {
            threshold: 0.5,
            fpr: 0.0,
            tpr: 1.0,
            sensitivity: 100.0,
            fa_per_24h: 0.0,
        }];
        assert_eq!(roc_auc(&pts), 1.0);
        assert_eq!(roc_auc(&[]), 0.5);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("threshold\n0.2\n0.8, 0.5\n").unwrap(), vec![0.8, 0.5, 0.2]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1.5").is_err());
        assert_eq!(uniform_grid(4), vec![1.0, 0.75, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn svg_is_well_formed() {
        let s = roc_svg(&[], "a<b");
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("a&lt;b"));
    }
}
