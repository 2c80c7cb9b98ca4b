//! Bipolar montages.
//!
//! A montage is an ordered list of (anode, cathode) electrode pairs; each
//! output channel is the anode signal minus the cathode signal. Electrode
//! lookup is case-insensitive after applying an [`AliasTable`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::edf::Recording;
use crate::error::{Error, Result};

/// The 22-channel temporal-central-parasagittal montage.
pub const TCP_PAIRS: [(&str, &str); 22] = [
    ("FP1", "F7"),
    ("F7", "T3"),
    ("T3", "T5"),
    ("T5", "O1"),
    ("FP2", "F8"),
    ("F8", "T4"),
    ("T4", "T6"),
    ("T6", "O2"),
    ("A1", "T3"),
    ("T3", "C3"),
    ("C3", "CZ"),
    ("CZ", "C4"),
    ("C4", "T4"),
    ("T4", "A2"),
    ("FP1", "F3"),
    ("F3", "C3"),
    ("C3", "P3"),
    ("P3", "O1"),
    ("FP2", "F4"),
    ("F4", "C4"),
    ("C4", "P4"),
    ("P4", "O2"),
];

/// Electrodes referenced by the TCP montage.
pub const TCP_ELECTRODES: [&str; 19] = [
    "FP1", "FP2", "F7", "F3", "F4", "F8", "A1", "T3", "C3", "CZ", "C4", "T4", "A2", "T5", "P3",
    "P4", "T6", "O1", "O2",
];

/// Channel label for a differential pair, e.g. `FP1-F7`.
pub fn channel_label(anode: &str, cathode: &str) -> String {
    format!("{anode}-{cathode}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MontageSpec {
    pub name: String,
    pairs: Vec<(String, String)>,
}

impl MontageSpec {
    pub fn new(name: impl Into<String>, pairs: Vec<(String, String)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidMontage("no pairs".into()));
        }
        for (i, (a, c)) in pairs.iter().enumerate() {
            if a.trim().is_empty() || c.trim().is_empty() {
                return Err(Error::InvalidMontage(format!("pair {} has an empty label", i + 1)));
            }
            if pairs[..i].iter().any(|p| p == &pairs[i]) {
                return Err(Error::InvalidMontage(format!("duplicate pair {a}-{c}")));
            }
        }
        Ok(Self {
            name: name.into(),
            pairs,
        })
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn channel_labels(&self) -> Vec<String> {
        self.pairs.iter().map(|(a, c)| channel_label(a, c)).collect()
    }

    /// Parses one `ANODE-CATHODE` pair per line; `#` starts a comment.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (a, c) = line.split_once('-').ok_or_else(|| {
                Error::InvalidMontage(format!("line {}: expected ANODE-CATHODE, got {line:?}", i + 1))
            })?;
            pairs.push((a.trim().to_ascii_uppercase(), c.trim().to_ascii_uppercase()));
        }
        Self::new(name, pairs)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# montage {}\n", self.name);
        for (a, c) in &self.pairs {
            s.push_str(&channel_label(a, c));
            s.push('\n');
        }
        s
    }
}

pub fn default_tcp_montage() -> MontageSpec {
    MontageSpec::new(
        "tcp",
        TCP_PAIRS
            .iter()
            .map(|(a, c)| (a.to_string(), c.to_string()))
            .collect(),
    )
    .expect("TCP pair list is valid")
}

/// Maps alternative electrode names onto the canonical ones used by montages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasTable {
    map: HashMap<String, String>,
}

impl Default for AliasTable {
    /// Modern 10-10 names for the temporal electrodes.
    fn default() -> Self {
        let mut t = Self::empty();
        for (from, to) in [("T7", "T3"), ("T8", "T4"), ("P7", "T5"), ("P8", "T6")] {
            t.insert(from, to);
        }
        t
    }
}

impl AliasTable {
    pub fn empty() -> Self {
        Self {
            map: HashMap::new(),
        }
    }

    pub fn insert(&mut self, from: &str, to: &str) {
        self.map
            .insert(from.trim().to_ascii_uppercase(), to.trim().to_ascii_uppercase());
    }

    /// Parses `FROM=TO` lines on top of the default table.
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (from, to) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("alias line {}: expected FROM=TO", i + 1))
            })?;
            t.insert(from, to);
        }
        Ok(t)
    }

    /// `(from, to)` entries sorted by `from`.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut v: Vec<_> = self.map.iter().map(|(a, b)| (a.clone(), b.clone())).collect();
        v.sort();
        v
    }

    pub fn canonical(&self, label: &str) -> String {
        let up = label.trim().to_ascii_uppercase();
        self.map.get(&up).cloned().unwrap_or(up)
    }
}

/// Bipolar channels derived from a [`Recording`].
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialRecording {
    pub labels: Vec<String>,
    pub samples: Vec<Vec<f64>>,
    pub sample_rate: f64,
}

impl DifferentialRecording {
    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    pub fn channel(&self, label: &str) -> Option<&[f64]> {
        self.labels
            .iter()
            .position(|l| l.eq_ignore_ascii_case(label))
            .map(|i| self.samples[i].as_slice())
    }
}

pub fn apply_montage(
    recording: &Recording,
    spec: &MontageSpec,
    aliases: &AliasTable,
) -> Result<DifferentialRecording> {
    let index: HashMap<String, usize> = recording
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| (aliases.canonical(l), i))
        .collect();
    let lookup = |name: &str| {
        index
            .get(&aliases.canonical(name))
            .map(|&i| &recording.samples[i])
            .ok_or_else(|| Error::MissingElectrode(name.to_string()))
    };

    let mut samples = Vec::with_capacity(spec.pairs.len());
    for (anode, cathode) in &spec.pairs {
        let a = lookup(anode)?;
        let c = lookup(cathode)?;
        if a.len() != c.len() {
            return Err(Error::LengthMismatch(format!(
                "{anode} has {} samples, {cathode} has {}",
                a.len(),
                c.len()
            )));
        }
        samples.push(a.iter().zip(c).map(|(x, y)| x - y).collect());
    }
    Ok(DifferentialRecording {
        labels: spec.channel_labels(),
        samples,
        sample_rate: recording.sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(labels: &[&str], samples: Vec<Vec<f64>>) -> Recording {
        Recording::new(labels.iter().map(|s| s.to_string()).collect(), samples, 1.0).unwrap()
    }

    #[test]
    fn tcp_has_22_pairs_two_with_ears() {
        let m = default_tcp_montage();
        assert_eq!(m.pairs().len(), 22);
        let ears = m
            .pairs()
            .iter()
            .filter(|(a, c)| ["A1", "A2"].contains(&a.as_str()) || ["A1", "A2"].contains(&c.as_str()))
            .count();
        assert_eq!(ears, 2);
    }

    #[test]
    fn every_electrode_used() {
        let m = default_tcp_montage();
        for e in TCP_ELECTRODES {
            assert!(
                m.pairs().iter().any(|(a, c)| a == e || c == e),
                "{e} unused"
            );
        }
    }

    #[test]
    fn cz_in_two_pairs() {
        let n = TCP_PAIRS.iter().filter(|(a, c)| *a == "CZ" || *c == "CZ").count();
        assert_eq!(n, 2);
    }

    #[test]
    fn subtraction() {
        let r = rec(&["FP1", "F7"], vec![vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 1.0]]);
        let spec = MontageSpec::new("t", vec![("FP1".into(), "F7".into())]).unwrap();
        let d = apply_montage(&r, &spec, &AliasTable::default()).unwrap();
        assert_eq!(d.labels, vec!["FP1-F7"]);
        assert_eq!(d.samples[0], vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn same_signal_gives_zero() {
        let r = rec(&["A", "B"], vec![vec![4.0, -2.5], vec![4.0, -2.5]]);
        let spec = MontageSpec::new("t", vec![("A".into(), "B".into())]).unwrap();
        let d = apply_montage(&r, &spec, &AliasTable::empty()).unwrap();
        assert_eq!(d.samples[0], vec![0.0, 0.0]);
    }

    #[test]
    fn missing_electrode_named() {
        let r = rec(&["FP1"], vec![vec![1.0]]);
        let spec = MontageSpec::new("t", vec![("FP1".into(), "XX".into())]).unwrap();
        let err = apply_montage(&r, &spec, &AliasTable::default()).unwrap_err();
        assert_eq!(err.to_string(), "missing electrode XX");
    }

    #[test]
    fn aliases_and_case() {
        let r = rec(&["t7", "Fp1"], vec![vec![5.0], vec![1.0]]);
        let spec = MontageSpec::new("t", vec![("FP1".into(), "T3".into())]).unwrap();
        let d = apply_montage(&r, &spec, &AliasTable::default()).unwrap();
        assert_eq!(d.samples[0], vec![-4.0]);
        assert!(apply_montage(&r, &spec, &AliasTable::empty()).is_err());
    }

    #[test]
    fn parse_config_file() {
        let text = "# custom\nfp1-f7\n\nC3-CZ  # central\n";
        let m = MontageSpec::parse("custom", text).unwrap();
        assert_eq!(m.channel_labels(), vec!["FP1-F7", "C3-CZ"]);
        assert_eq!(MontageSpec::parse("rt", &m.to_text()).unwrap().pairs(), m.pairs());
        assert!(MontageSpec::parse("dup", "A-B\nA-B").is_err());
        assert!(MontageSpec::parse("bad", "AB").is_err());
        assert!(MontageSpec::parse("empty", "# nothing").is_err());
    }

    fn electrode_signals() -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-1e3..1e3f64, 8), TCP_ELECTRODES.len())
    }

    proptest! {
        #[test]
        fn linearity(x in electrode_signals(), y in electrode_signals(), a in -4.0..4.0f64, b in -4.0..4.0f64) {
            let labels: Vec<&str> = TCP_ELECTRODES.to_vec();
            let m = default_tcp_montage();
            let al = AliasTable::default();
            let combo: Vec<Vec<f64>> = x.iter().zip(&y)
                .map(|(u, v)| u.iter().zip(v).map(|(p, q)| a * p + b * q).collect())
                .collect();
            let lhs = apply_montage(&rec(&labels, combo), &m, &al).unwrap();
            let dx = apply_montage(&rec(&labels, x), &m, &al).unwrap();
            let dy = apply_montage(&rec(&labels, y), &m, &al).unwrap();
            for ch in 0..lhs.samples.len() {
                for t in 0..8 {
                    let rhs = a * dx.samples[ch][t] + b * dy.samples[ch][t];
                    prop_assert!((lhs.samples[ch][t] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
                }
            }
        }

        #[test]
        fn common_mode_rejected(x in electrode_signals(), common in prop::collection::vec(-1e3..1e3f64, 8)) {
            let labels: Vec<&str> = TCP_ELECTRODES.to_vec();
            let m = default_tcp_montage();
            let al = AliasTable::default();
            let shifted: Vec<Vec<f64>> = x.iter()
                .map(|u| u.iter().zip(&common).map(|(p, c)| p + c).collect())
                .collect();
            let base = apply_montage(&rec(&labels, x), &m, &al).unwrap();
            let moved = apply_montage(&rec(&labels, shifted), &m, &al).unwrap();
            prop_assert_eq!(&base.labels, &moved.labels);
            for (u, v) in base.samples.iter().zip(&moved.samples) {
                for (p, q) in u.iter().zip(v) {
                    prop_assert!((p - q).abs() <= 1e-9);
                }
            }
        }
    }
}
