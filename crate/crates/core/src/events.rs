//! Labeled time intervals and the CSV annotation format.
//!
//! One event per line, `start_seconds,stop_seconds,label`. Blank lines and
//! lines starting with `#` are skipped. Files written here carry a
//! `# duration=<seconds>` comment so they can be read back without the
//! matching recording.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label used for seizure events unless configured otherwise.
pub const SEIZURE_LABEL: &str = "seiz";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub start: f64,
    pub stop: f64,
    pub label: String,
}

impl Event {
    pub fn new(start: f64, stop: f64, label: impl Into<String>) -> Self {
        Self {
            start,
            stop,
            label: label.into(),
        }
    }

    pub fn duration(&self) -> f64 {
        self.stop - self.start
    }

    /// Open-interval intersection of positive length. Touching endpoints do not overlap.
    pub fn overlaps(&self, other: &Event) -> bool {
        self.start < other.stop && other.start < self.stop
    }
}

/// Events sorted by start time, each within `[0, total_duration]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventList {
    events: Vec<Event>,
    total_duration: f64,
}

impl EventList {
    pub fn new(mut events: Vec<Event>, total_duration: f64) -> Result<Self> {
        if !(total_duration.is_finite() && total_duration >= 0.0) {
            return Err(Error::ZeroDuration(total_duration));
        }
        for ev in &events {
            validate_interval(ev.start, ev.stop, total_duration)?;
        }
        events.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.stop.total_cmp(&b.stop)));
        Ok(Self {
            events,
            total_duration,
        })
    }

    pub fn empty(total_duration: f64) -> Result<Self> {
        Self::new(Vec::new(), total_duration)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn total_duration(&self) -> f64 {
        self.total_duration
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Keeps only events whose label matches `label` (case-insensitive).
    pub fn with_label(&self, label: &str) -> Self {
        Self {
            events: self
                .events
                .iter()
                .filter(|e| e.label.eq_ignore_ascii_case(label))
                .cloned()
                .collect(),
            total_duration: self.total_duration,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# duration={}", self.total_duration);
        for e in &self.events {
            let _ = writeln!(out, "{},{},{}", e.start, e.stop, e.label);
        }
        out
    }
}

fn validate_interval(start: f64, stop: f64, total: f64) -> Result<()> {
    if !(start.is_finite() && stop.is_finite()) {
        return Err(Error::IntervalOutOfRange { start, stop, total });
    }
    if stop <= start {
        return Err(Error::InvertedInterval { start, stop });
    }
    if start < 0.0 || stop > total {
        return Err(Error::IntervalOutOfRange { start, stop, total });
    }
    Ok(())
}

/// Parses CSV annotations, keeping only events labeled `seizure_label`.
pub fn read_annotations(text: &str, total_duration: f64, seizure_label: &str) -> Result<EventList> {
    let mut events = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.splitn(3, ',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Annotation {
                line: line_no,
                message: format!("expected start,stop,label; got {line:?}"),
            });
        }
        let parse = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|_| Error::Annotation {
                line: line_no,
                message: format!("non-numeric {what} {s:?}"),
            })
        };
        let start = parse(fields[0], "start")?;
        let stop = parse(fields[1], "stop")?;
        validate_interval(start, stop, total_duration).map_err(|e| match e {
            Error::InvertedInterval { .. } => Error::Annotation {
                line: line_no,
                message: format!("inverted interval ({start}, {stop})"),
            },
            other => Error::Annotation {
                line: line_no,
                message: other.to_string(),
            },
        })?;
        if fields[2].eq_ignore_ascii_case(seizure_label) {
            events.push(Event::new(start, stop, fields[2]));
        }
    }
    EventList::new(events, total_duration)
}

/// Reads the `# duration=` comment written by [`EventList::to_csv`], if present.
pub fn duration_hint(text: &str) -> Option<f64> {
    text.lines()
        .map(str::trim)
        .take_while(|l| l.is_empty() || l.starts_with('#'))
        .find_map(|l| l.trim_start_matches('#').trim().strip_prefix("duration="))
        .and_then(|v| v.trim().parse().ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_event() {
        let list = read_annotations("10.0,20.0,seiz\n", 60.0, SEIZURE_LABEL).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!((list.events()[0].start, list.events()[0].stop), (10.0, 20.0));
    }

    #[test]
    fn empty_file() {
        let list = read_annotations("", 60.0, SEIZURE_LABEL).unwrap();
        assert!(list.is_empty());
        assert_eq!(list.total_duration(), 60.0);
    }

    #[test]
    fn inverted_interval_rejected() {
        let err = read_annotations("20.0,10.0,seiz", 60.0, SEIZURE_LABEL).unwrap_err();
        assert!(err.to_string().contains("inverted interval"), "{err}");
    }

    #[test]
    fn stop_past_duration_rejected() {
        assert!(read_annotations("10,70,seiz", 60.0, SEIZURE_LABEL).is_err());
    }

    #[test]
    fn malformed_lines_rejected() {
        assert!(read_annotations("10,seiz", 60.0, SEIZURE_LABEL).is_err());
        assert!(read_annotations("a,20,seiz", 60.0, SEIZURE_LABEL).is_err());
    }

    #[test]
    fn other_labels_filtered_and_sorted() {
        let text = "30,40,seiz\n# comment\n\n5,8,bckg\n1,2,SEIZ\n";
        let list = read_annotations(text, 60.0, SEIZURE_LABEL).unwrap();
        let starts: Vec<f64> = list.events().iter().map(|e| e.start).collect();
        assert_eq!(starts, vec![1.0, 30.0]);
    }

    #[test]
    fn csv_round_trip_with_duration_hint() {
        let list = EventList::new(
            vec![Event::new(12.5, 20.25, "seiz"), Event::new(1.0, 3.0, "seiz")],
            100.0,
        )
        .unwrap();
        let text = list.to_csv();
        assert_eq!(duration_hint(&text), Some(100.0));
        let back = read_annotations(&text, 100.0, SEIZURE_LABEL).unwrap();
        assert_eq!(back, list);
    }

    #[test]
    fn touching_is_not_overlap() {
        let a = Event::new(10.0, 20.0, "seiz");
        assert!(!a.overlaps(&Event::new(20.0, 30.0, "seiz")));
        assert!(a.overlaps(&Event::new(19.5, 30.0, "seiz")));
    }
}
