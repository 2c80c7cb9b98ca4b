//! Named channel subsets of the TCP montage.
//!
//! Reduced presets follow a fixed set of rules: the ear-referenced channels
//! (A1-T3, T4-A2) go first, then the frontal-polar channels; a CZ channel is
//! always kept; the 4- and 2-channel sets keep a single occipital channel.
//! `+Ax` variants add the two ear-referenced channels back to a reduced set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montage::{DifferentialRecording, TCP_PAIRS};

/// The ear-referenced (A_x) channels of the TCP montage.
pub const AX_CHANNELS: [&str; 2] = ["A1-T3", "T4-A2"];

const FP_CHANNELS: [&str; 4] = ["FP1-F7", "FP2-F8", "FP1-F3", "FP2-F4"];
const CH8: [&str; 8] = [
    "F7-T3", "T3-T5", "F8-T4", "T4-T6", "C3-CZ", "CZ-C4", "P3-O1", "P4-O2",
];
const CH4: [&str; 4] = ["C3-CZ", "CZ-C4", "T3-T5", "T5-O1"];
const CH2: [&str; 2] = ["C3-CZ", "P3-O1"];

/// Names of the built-in presets, in the order of the two result tables.
pub const PRESET_NAMES: [&str; 11] = [
    "ch22", "ch20", "ch16", "ch8", "ch4", "ch2", "ch22+Ax", "ch18+Ax", "ch10+Ax", "ch6+Ax",
    "ch4+Ax",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub name: String,
    pub members: Vec<String>,
    pub includes_ax: bool,
}

impl ChannelConfig {
    pub fn new(name: impl Into<String>, members: Vec<String>) -> Result<Self> {
        let name = name.into();
        if members.is_empty() {
            return Err(Error::InvalidConfig(format!("channel config {name:?} has no members")));
        }
        for (i, m) in members.iter().enumerate() {
            if members[..i].iter().any(|p| p.eq_ignore_ascii_case(m)) {
                return Err(Error::InvalidConfig(format!("{name}: duplicate channel {m}")));
            }
        }
        let includes_ax = members
            .iter()
            .any(|m| AX_CHANNELS.iter().any(|a| a.eq_ignore_ascii_case(m)));
        Ok(Self {
            name,
            members,
            includes_ax,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn tcp_labels() -> impl Iterator<Item = String> {
    TCP_PAIRS.iter().map(|(a, c)| format!("{a}-{c}"))
}

/// TCP channels satisfying `keep`, in montage order.
fn tcp_where(keep: impl Fn(&str) -> bool) -> Vec<String> {
    tcp_labels().filter(|l| keep(l)).collect()
}

fn base_preset(n: usize) -> Option<Vec<String>> {
    let list: Vec<String> = match n {
        22 => tcp_labels().collect(),
        20 => tcp_where(|l| !AX_CHANNELS.contains(&l)),
        16 => tcp_where(|l| !AX_CHANNELS.contains(&l) && !FP_CHANNELS.contains(&l)),
        8 => tcp_where(|l| CH8.contains(&l)),
        4 => tcp_where(|l| CH4.contains(&l)),
        2 => tcp_where(|l| CH2.contains(&l)),
        _ => return None,
    };
    Some(list)
}

/// A built-in preset by name (`ch22`, `ch16`, `ch18+Ax`, ...). Names are
/// case-insensitive.
pub fn preset(name: &str) -> Result<ChannelConfig> {
    let unknown = || Error::UnknownPreset(name.to_string());
    let lower = name.trim().to_ascii_lowercase();
    let (count, with_ax) = match lower.strip_suffix("+ax") {
        Some(base) => (base, true),
        None => (lower.as_str(), false),
    };
    let n: usize = count
        .strip_prefix("ch")
        .and_then(|c| c.parse().ok())
        .ok_or_else(unknown)?;
    let members = if with_ax {
        let base = n.checked_sub(2).and_then(base_preset).ok_or_else(unknown)?;
        tcp_where(|l| base.iter().any(|b| b == l) || AX_CHANNELS.contains(&l))
    } else {
        base_preset(n).ok_or_else(unknown)?
    };
    let canonical = if with_ax { format!("ch{n}+Ax") } else { format!("ch{n}") };
    ChannelConfig::new(canonical, members)
}

/// Built-in presets plus entries loaded from override files.
#[derive(Debug, Clone, Default)]
pub struct PresetRegistry {
    overrides: BTreeMap<String, ChannelConfig>,
}

impl PresetRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `name: channel, channel, ...` lines. Later entries replace
    /// earlier ones and built-ins of the same name.
    pub fn parse(text: &str) -> Result<Self> {
        let mut reg = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, rest) = line.split_once(':').ok_or_else(|| {
                Error::InvalidConfig(format!("preset line {}: expected `name: ch, ch, ...`", i + 1))
            })?;
            let members = rest
                .split(',')
                .map(|m| m.trim().to_ascii_uppercase())
                .filter(|m| !m.is_empty())
                .collect();
            let cfg = ChannelConfig::new(name.trim(), members)?;
            reg.overrides.insert(cfg.name.to_ascii_lowercase(), cfg);
        }
        Ok(reg)
    }

    pub fn get(&self, name: &str) -> Result<ChannelConfig> {
        match self.overrides.get(&name.trim().to_ascii_lowercase()) {
            Some(cfg) => Ok(cfg.clone()),
            None => preset(name),
        }
    }
}

pub fn select(rec: &DifferentialRecording, cfg: &ChannelConfig) -> Result<DifferentialRecording> {
    let mut labels = Vec::with_capacity(cfg.members.len());
    let mut samples = Vec::with_capacity(cfg.members.len());
    for m in &cfg.members {
        let i = rec
            .labels
            .iter()
            .position(|l| l.eq_ignore_ascii_case(m))
            .ok_or_else(|| Error::MissingChannel(m.clone()))?;
        labels.push(rec.labels[i].clone());
        samples.push(rec.samples[i].clone());
    }
    Ok(DifferentialRecording {
        labels,
        samples,
        sample_rate: rec.sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn set(cfg: &ChannelConfig) -> BTreeSet<String> {
        cfg.members.iter().cloned().collect()
    }

    fn rec_from(labels: Vec<String>) -> DifferentialRecording {
        let samples = (0..labels.len()).map(|i| vec![i as f64, -(i as f64)]).collect();
        DifferentialRecording {
            labels,
            samples,
            sample_rate: 1.0,
        }
    }

    #[test]
    fn cardinalities() {
        let plain: Vec<usize> = ["ch22", "ch20", "ch16", "ch8", "ch4", "ch2"]
            .iter()
            .map(|n| preset(n).unwrap().len())
            .collect();
        assert_eq!(plain, vec![22, 20, 16, 8, 4, 2]);
        let ax: Vec<usize> = ["ch22+Ax", "ch18+Ax", "ch10+Ax", "ch6+Ax", "ch4+Ax"]
            .iter()
            .map(|n| preset(n).unwrap().len())
            .collect();
        assert_eq!(ax, vec![22, 18, 10, 6, 4]);
    }

    #[test]
    fn ch20_drops_ear_channels() {
        let diff: BTreeSet<_> = set(&preset("ch22").unwrap())
            .difference(&set(&preset("ch20").unwrap()))
            .cloned()
            .collect();
        assert_eq!(diff, AX_CHANNELS.iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn ch16_drops_frontal_polar() {
        let diff: BTreeSet<_> = set(&preset("ch20").unwrap())
            .difference(&set(&preset("ch16").unwrap()))
            .cloned()
            .collect();
        let fp: BTreeSet<String> = FP_CHANNELS.iter().map(|s| s.to_string()).collect();
        assert_eq!(diff, fp);
    }

    #[test]
    fn ax_variants_add_exactly_the_ear_channels() {
        let ax: BTreeSet<String> = AX_CHANNELS.iter().map(|s| s.to_string()).collect();
        for (with, without) in [
            ("ch22+Ax", "ch20"),
            ("ch18+Ax", "ch16"),
            ("ch10+Ax", "ch8"),
            ("ch6+Ax", "ch4"),
            ("ch4+Ax", "ch2"),
        ] {
            let w = preset(with).unwrap();
            assert!(w.includes_ax);
            let o = preset(without).unwrap();
            assert!(!o.includes_ax);
            let diff: BTreeSet<_> = set(&w).difference(&set(&o)).cloned().collect();
            assert_eq!(diff, ax, "{with} vs {without}");
            assert!(set(&o).is_subset(&set(&w)));
        }
        assert_eq!(set(&preset("ch22+Ax").unwrap()), set(&preset("ch22").unwrap()));
    }

    #[test]
    fn constraint_rules_hold() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            if cfg.len() < 22 {
                assert!(cfg.members.iter().any(|m| m.contains("CZ")), "{name} lacks CZ");
            }
            if cfg.len() < 20 {
                assert!(
                    !cfg.members.iter().any(|m| m.contains("FP")),
                    "{name} keeps a frontal-polar channel"
                );
            }
        }
        for name in ["ch4", "ch2", "ch6+Ax", "ch4+Ax"] {
            let occ = preset(name)
                .unwrap()
                .members
                .iter()
                .filter(|m| m.contains("O1") || m.contains("O2"))
                .count();
            assert_eq!(occ, 1, "{name}");
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("ch7"), Err(Error::UnknownPreset(_))));
        assert!(matches!(preset("ch20+Ax"), Err(Error::UnknownPreset(_))));
        assert!(matches!(preset("banana"), Err(Error::UnknownPreset(_))));
        assert_eq!(preset("CH18+AX").unwrap().name, "ch18+Ax");
    }

    #[test]
    fn select_identity_and_subset() {
        let rec22 = rec_from(preset("ch22").unwrap().members);
        assert_eq!(select(&rec22, &preset("ch22").unwrap()).unwrap(), rec22);
        let two = select(&rec22, &preset("ch2").unwrap()).unwrap();
        assert_eq!(two.labels.len(), 2);
        assert_eq!(two.channel("P3-O1"), rec22.channel("P3-O1"));
    }

    #[test]
    fn select_missing_member() {
        let rec20 = rec_from(preset("ch20").unwrap().members);
        assert!(matches!(
            select(&rec20, &preset("ch22").unwrap()),
            Err(Error::MissingChannel(_))
        ));
    }

    #[test]
    fn select_is_idempotent() {
        let rec22 = rec_from(preset("ch22").unwrap().members);
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            let once = select(&rec22, &cfg).unwrap();
            assert_eq!(select(&once, &cfg).unwrap(), once);
            assert_eq!(once.labels, cfg.members);
        }
    }

    #[test]
    fn override_file() {
        let reg = PresetRegistry::parse("# mine\nch2: t3-t5, c3-cz\ntiny: CZ-C4\n").unwrap();
        assert_eq!(reg.get("ch2").unwrap().members, vec!["T3-T5", "C3-CZ"]);
        assert_eq!(reg.get("tiny").unwrap().len(), 1);
        assert_eq!(reg.get("ch4").unwrap(), preset("ch4").unwrap());
        assert!(PresetRegistry::parse("nocolon").is_err());
        assert!(PresetRegistry::parse("empty:").is_err());
    }
}
