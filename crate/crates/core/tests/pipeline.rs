use eegpipe::channel_select::preset;
use eegpipe::edf::{parse_edf, write_edf, EdfHeader};
use eegpipe::events::{duration_hint, read_annotations, SEIZURE_LABEL};
use eegpipe::features::{FeatureConfig, FeatureTensor};
use eegpipe::montage::{default_tcp_montage, AliasTable};
use eegpipe::pipeline::{epoch_targets, recording_features};
use eegpipe::synthgen::{generate, SynthConfig};

fn small() -> SynthConfig {
    SynthConfig {
        duration: 120.0,
        sample_rate: 200.0,
        seed: 17,
        burst: eegpipe::synthgen::BurstConfig {
            rate_per_hour: 90.0,
            ..Default::default()
        },
        ..SynthConfig::default()
    }
}

#[test]
fn synthetic_recording_survives_edf_and_csv() {
    let (rec, events) = generate(&small()).unwrap();
    let header = EdfHeader::for_recording(&rec).unwrap();
    let (back, _) = parse_edf(&write_edf(&rec, &header).unwrap()).unwrap();
    assert_eq!(back.labels, rec.labels);
    assert_eq!(back.sample_rate, rec.sample_rate);
    let step = header.signals[0].physical_max * 2.0 / 65535.0;
    for (a, b) in back.samples.iter().flatten().zip(rec.samples.iter().flatten()) {
        assert!((a - b).abs() <= step);
    }

    let csv = events.to_csv();
    let total = duration_hint(&csv).unwrap();
    assert_eq!(read_annotations(&csv, total, SEIZURE_LABEL).unwrap(), events);
}

#[test]
fn features_for_every_preset() {
    let (rec, events) = generate(&small()).unwrap();
    let cfg = FeatureConfig::default();
    for name in ["ch22", "ch16", "ch8", "ch4", "ch2", "ch10+Ax"] {
        let p = preset(name).unwrap();
        let f = recording_features(&rec, &default_tcp_montage(), &AliasTable::default(), &p, &cfg).unwrap();
        assert_eq!((f.epochs, f.frames_per_epoch, f.channels, f.dim), (120, 10, p.len(), 26));
        assert_eq!(f.channel_labels, p.members);
        assert!(f.values.iter().all(|v| v.is_finite()));
        assert_eq!(FeatureTensor::from_bytes(&f.to_bytes()).unwrap(), f);
    }
    let targets = epoch_targets(&events, 120, 1.0, 0.5);
    assert!(targets.contains(&1.0) && targets.contains(&0.0));
}

#[test]
fn aliases_resolve_modern_names() {
    let (mut rec, _) = generate(&small()).unwrap();
    for l in rec.labels.iter_mut() {
        *l = match l.as_str() {
            "T3" => "T7".into(),
            "T4" => "t8".into(),
            other => other.to_lowercase(),
        };
    }
    let p = preset("ch22").unwrap();
    assert!(recording_features(&rec, &default_tcp_montage(), &AliasTable::default(), &p, &FeatureConfig::default()).is_ok());
    assert!(recording_features(&rec, &default_tcp_montage(), &AliasTable::empty(), &p, &FeatureConfig::default()).is_err());
}
