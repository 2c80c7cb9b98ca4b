use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use eegpipe::channel_select::{ChannelConfig, PresetRegistry};
use eegpipe::detector::{checkpoint, shape_plan, train as fit, AdamConfig, Adaptation, EpochPosteriors, NetworkSpec, TrainConfig, TrainExample, TrainOutcome, Weights};
use eegpipe::edf::{parse_edf, write_edf, EdfHeader, Recording};
use eegpipe::events::EventList;
use eegpipe::features::{FeatureConfig, FeatureTensor};
use eegpipe::manifest::{config_hash, parse_config};
use eegpipe::montage::{default_tcp_montage, AliasTable, MontageSpec};
use eegpipe::pipeline::{epoch_targets, recording_features};
use eegpipe::postprocess::{to_events, PostprocessConfig};
use eegpipe::scoring::{align_duration, parse_grid, roc_auc, roc_csv, roc_svg, roc_sweep, score as score_lists, uniform_grid, ScoreReport};
use eegpipe::synthgen::{generate, SynthConfig};
use eegpipe::Error;
use rayon::prelude::*;
use serde_json::json;

use crate::io::{self, digest, Manifest};
use crate::{FeatureArgs, FrontEndArgs, GridArgs, InferArgs, ModelArgs, PostArgs, ScoreArgs, SynthArgs, TrainArgs, UsageError};

const FEATURE_CONFIG_FILE: &str = "feature_config.json";
const MANIFEST: &str = "manifest.json";

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn names(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

// ---------------------------------------------------------------- synth

pub fn synth(a: &SynthArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => SynthConfig::parse(&io::read_text(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => SynthConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(d) = a.duration {
        cfg.duration = d;
    }
    if let Some(n) = a.recordings {
        cfg.recordings = n;
    }
    if let Some(g) = a.gain {
        cfg.burst.gain = g;
    }
    cfg.validate()?;
    if cfg.recordings == 0 {
        return Err(usage("--recordings must be at least 1"));
    }

    let files = (0..cfg.recordings)
        .into_par_iter()
        .map(|i| {
            let (rec, events) = generate(&cfg.for_recording(i))?;
            let edf = write_edf(&rec, &EdfHeader::for_recording(&rec)?)?;
            Ok((format!("rec_{i:03}"), edf, events.to_csv()))
        })
        .collect::<eegpipe::Result<Vec<_>>>()?;

    let mut m = Manifest::new("synth", a);
    for (stem, edf, csv) in &files {
        let edf_path = a.out.join(format!("{stem}.edf"));
        let csv_path = a.out.join(format!("{stem}.csv"));
        io::write(&edf_path, edf)?;
        io::write(&csv_path, csv)?;
        m.outputs.extend(names(&[edf_path, csv_path]));
    }
    m.config = json!({ "synth": cfg });
    m.hashes = json!({ "synth": config_hash(&cfg) });
    m.write(&a.out.join(MANIFEST))?;
    println!("wrote {} recordings to {}", files.len(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------- features

struct FrontEnd {
    montage: MontageSpec,
    aliases: AliasTable,
    presets: PresetRegistry,
    features: FeatureConfig,
}

impl FrontEnd {
    fn load(a: &FrontEndArgs) -> Result<Self> {
        let montage = match &a.montage {
            Some(p) => MontageSpec::parse(p.display().to_string(), &io::read_text(p)?)
                .with_context(|| format!("parsing {}", p.display()))?,
            None => default_tcp_montage(),
        };
        let aliases = match &a.aliases {
            Some(p) => AliasTable::parse(&io::read_text(p)?).with_context(|| format!("parsing {}", p.display()))?,
            None => AliasTable::default(),
        };
        let presets = match &a.presets_file {
            Some(p) => PresetRegistry::parse(&io::read_text(p)?).with_context(|| format!("parsing {}", p.display()))?,
            None => PresetRegistry::new(),
        };
        let features: FeatureConfig = match &a.feature_config {
            Some(p) => parse_config(&io::read_text(p)?).with_context(|| format!("parsing {}", p.display()))?,
            None => FeatureConfig::default(),
        };
        features.validate()?;
        Ok(Self {
            montage,
            aliases,
            presets,
            features,
        })
    }

    fn preset(&self, name: &str) -> Result<ChannelConfig> {
        self.presets.get(name).map_err(|e| usage(e.to_string()))
    }

    fn describe(&self, preset: &ChannelConfig) -> serde_json::Value {
        json!({
            "montage": { "name": self.montage.name, "pairs": self.montage.pairs() },
            "aliases": self.aliases.entries(),
            "preset": preset,
            "features": self.features,
        })
    }

    fn extract(&self, recs: &[(String, Recording)], preset: &ChannelConfig) -> Result<Vec<(String, FeatureTensor)>> {
        recs.par_iter()
            .map(|(stem, rec)| {
                let f = recording_features(rec, &self.montage, &self.aliases, preset, &self.features)
                    .with_context(|| format!("recording {stem}"))?;
                Ok((stem.clone(), f))
            })
            .collect()
    }
}

fn load_recordings(dir: &Path) -> Result<Vec<(String, Recording, PathBuf)>> {
    let files = io::list(dir, ".edf")?;
    if files.is_empty() {
        return Err(usage(format!("no .edf files in {}", dir.display())));
    }
    files
        .into_par_iter()
        .map(|(stem, path)| {
            let (rec, _) = parse_edf(&io::read(&path)?).with_context(|| format!("parsing {}", path.display()))?;
            Ok((stem, rec, path))
        })
        .collect()
}

pub fn features(a: &FeatureArgs) -> Result<()> {
    let fe = FrontEnd::load(&a.front)?;
    let preset = fe.preset(&a.preset)?;
    let loaded = load_recordings(&a.input)?;
    let recs: Vec<(String, Recording)> = loaded.iter().map(|(s, r, _)| (s.clone(), r.clone())).collect();
    let tensors = fe.extract(&recs, &preset)?;

    let mut m = Manifest::new("features", a);
    for (stem, t) in &tensors {
        let path = a.out.join(format!("{stem}.feat"));
        io::write(&path, t.to_bytes())?;
        m.outputs.push(path.display().to_string());
    }
    let cfg_path = a.out.join(FEATURE_CONFIG_FILE);
    io::write(&cfg_path, serde_json::to_string_pretty(&fe.features)? + "\n")?;
    m.outputs.push(cfg_path.display().to_string());
    m.inputs = loaded.iter().map(|(_, _, p)| digest(p)).collect::<Result<_>>()?;
    m.config = fe.describe(&preset);
    m.hashes = json!({ "features": fe.features.hash() });
    m.write(&a.out.join(MANIFEST))?;
    println!("extracted {} x {} channels into {}", tensors.len(), preset.len(), a.out.display());
    Ok(())
}

/// Feature tensors of a directory written by `features`, plus the config
/// they were computed with.
fn load_features(dir: &Path) -> Result<(Vec<(String, FeatureTensor, PathBuf)>, FeatureConfig)> {
    let files = io::list(dir, ".feat")?;
    if files.is_empty() {
        return Err(usage(format!("no .feat files in {}", dir.display())));
    }
    let cfg_path = dir.join(FEATURE_CONFIG_FILE);
    let cfg: FeatureConfig = if cfg_path.is_file() {
        parse_config(&io::read_text(&cfg_path)?)?
    } else {
        FeatureConfig::default()
    };
    let tensors = files
        .into_iter()
        .map(|(stem, path)| {
            let t = FeatureTensor::from_bytes(&io::read(&path)?).with_context(|| format!("reading {}", path.display()))?;
            if t.config_hash != cfg.hash() {
                bail!(Error::InvalidConfig(format!(
                    "{} was computed with feature config {}, directory config is {}",
                    path.display(),
                    t.config_hash,
                    cfg.hash()
                )));
            }
            Ok((stem, t, path))
        })
        .collect::<Result<Vec<_>>>()?;
    let first = &tensors[0].1;
    for (stem, t, _) in &tensors[1..] {
        if (t.frames_per_epoch, t.dim, &t.channel_labels) != (first.frames_per_epoch, first.dim, &first.channel_labels) {
            bail!(Error::DimensionMismatch(format!("{stem} does not match {}", tensors[0].0)));
        }
    }
    Ok((tensors, cfg))
}

// ---------------------------------------------------------------- train

fn parse_adaptation(s: &str) -> Result<Adaptation> {
    serde_json::from_value(json!(s.trim().to_ascii_lowercase()))
        .map_err(|_| usage(format!("unknown adaptation {s:?} (strict, preserve_dims, drop_layers)")))
}

fn load_spec(path: Option<&Path>) -> Result<NetworkSpec> {
    match path {
        Some(p) => Ok(NetworkSpec::parse(&io::read_text(p)?).with_context(|| format!("parsing {}", p.display()))?),
        None => Ok(NetworkSpec::default()),
    }
}

fn train_config(m: &ModelArgs) -> TrainConfig {
    TrainConfig {
        adam: AdamConfig {
            learning_rate: m.learning_rate,
            ..AdamConfig::default()
        },
        passes: m.passes,
        batch_segments: m.batch_segments,
        seed: m.seed,
    }
}

fn fit_model(
    data: &[(&FeatureTensor, &EventList)],
    spec: &NetworkSpec,
    m: &ModelArgs,
    epoch: f64,
) -> Result<(Weights, TrainOutcome)> {
    if !(0.0..1.0).contains(&m.label_fraction) {
        return Err(usage(format!("--label-fraction {} not in [0, 1)", m.label_fraction)));
    }
    let first = data[0].0;
    let mut w = Weights::init(spec, first.channels, first.frames_per_epoch, first.dim, m.seed)?;
    w.feature_hash = first.config_hash.clone();
    w.channel_labels = first.channel_labels.clone();
    w.fit_normalizer(data.iter().map(|(f, _)| *f));
    let examples: Vec<TrainExample> = data
        .iter()
        .map(|(f, e)| TrainExample {
            features: (*f).clone(),
            labels: epoch_targets(e, f.epochs, epoch, m.label_fraction),
        })
        .collect();
    let outcome = fit(&mut w, &examples, &train_config(m))?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    Ok((w, outcome))
}

fn loss_csv(outcome: &TrainOutcome) -> (String, String) {
    let mut it = String::from("step,loss\n");
    for (i, l) in outcome.iteration_losses.iter().enumerate() {
        let _ = writeln!(it, "{},{l}", i + 1);
    }
    let mut pass = String::from("pass,loss\n");
    for (i, l) in outcome.pass_losses.iter().enumerate() {
        let _ = writeln!(pass, "{i},{l}");
    }
    (it, pass)
}

fn write_checkpoint(path: &Path, w: &Weights, outcome: &TrainOutcome) -> Result<Vec<PathBuf>> {
    let (it, pass) = loss_csv(outcome);
    let loss = sidecar(path, ".loss.csv");
    let passes = sidecar(path, ".passes.csv");
    io::write(path, checkpoint::save(w))?;
    io::write(&loss, it)?;
    io::write(&passes, pass)?;
    Ok(vec![path.to_path_buf(), loss, passes])
}

/// Reference annotations for each stem; durations default to the feature
/// tensor's length.
fn labels_for(dir: &Path, stems: &[(String, usize)], epoch: f64, label: &str) -> Result<Vec<(EventList, PathBuf)>> {
    stems
        .iter()
        .map(|(stem, epochs)| {
            let path = dir.join(format!("{stem}.csv"));
            if !path.is_file() {
                bail!("no annotation file {} for {stem}", path.display());
            }
            Ok((io::read_events(&path, Some(*epochs as f64 * epoch), label)?, path))
        })
        .collect()
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let mut spec = load_spec(a.model.spec.as_deref())?;
    if let Some(ad) = &a.adaptation {
        spec.adaptation = parse_adaptation(ad)?;
    }
    let (tensors, fcfg) = load_features(&a.features)?;
    let stems: Vec<(String, usize)> = tensors.iter().map(|(s, t, _)| (s.clone(), t.epochs)).collect();
    let labels = labels_for(&a.labels, &stems, fcfg.epoch_duration, &a.model.label)?;
    let data: Vec<(&FeatureTensor, &EventList)> = tensors.iter().map(|(_, t, _)| t).zip(labels.iter().map(|(e, _)| e)).collect();
    let (w, outcome) = fit_model(&data, &spec, &a.model, fcfg.epoch_duration)?;

    let mut m = Manifest::new("train", a);
    m.outputs = names(&write_checkpoint(&a.out, &w, &outcome)?);
    m.inputs = tensors
        .iter()
        .map(|(_, _, p)| p)
        .chain(labels.iter().map(|(_, p)| p))
        .map(|p| digest(p))
        .collect::<Result<_>>()?;
    m.config = json!({ "spec": spec, "train": train_config(&a.model), "plan": w.plan, "features": fcfg });
    m.hashes = json!({ "spec": spec.hash(), "features": fcfg.hash() });
    m.write(&sidecar(&a.out, ".manifest.json"))?;
    let first = outcome.pass_losses.first().copied().unwrap_or(f64::NAN);
    let last = outcome.pass_losses.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained {} parameters ({} conv layers) for {} steps, loss {first:.5} -> {last:.5}",
        w.param_count(),
        w.plan.conv_layers(),
        outcome.steps
    );
    Ok(())
}

// ---------------------------------------------------------------- infer

fn post_config(p: &PostArgs) -> Result<PostprocessConfig> {
    let cfg = PostprocessConfig {
        threshold: p.threshold,
        smoothing: p.smoothing,
        min_duration: p.min_duration,
        merge_gap: p.merge_gap,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn posteriors(w: &Weights, t: &FeatureTensor, epoch: f64) -> Result<EpochPosteriors> {
    let mut p = w.forward(t)?;
    p.epoch_duration = epoch;
    Ok(p)
}

pub fn infer(a: &InferArgs) -> Result<()> {
    let post = post_config(&a.post)?;
    let w = checkpoint::load(&io::read(&a.ckpt)?).with_context(|| format!("loading {}", a.ckpt.display()))?;
    if let Some(p) = &a.spec {
        let requested = load_spec(Some(p))?.hash();
        let stored = w.spec.hash();
        if requested != stored {
            return Err(Error::SpecHashMismatch {
                checkpoint: stored,
                requested,
            }
            .into());
        }
    }
    let (tensors, fcfg) = load_features(&a.features)?;
    if !w.feature_hash.is_empty() && w.feature_hash != fcfg.hash() {
        bail!(Error::InvalidConfig(format!(
            "checkpoint expects feature config {}, features use {}",
            w.feature_hash,
            fcfg.hash()
        )));
    }
    let results = tensors
        .par_iter()
        .map(|(stem, t, _)| {
            let p = posteriors(&w, t, fcfg.epoch_duration).with_context(|| format!("recording {stem}"))?;
            let ev = to_events(&p, &post)?;
            Ok((stem.clone(), p, ev))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut m = Manifest::new("infer", a);
    for (stem, p, ev) in &results {
        let pp = a.out.join(format!("{stem}.post.csv"));
        let ep = a.out.join(format!("{stem}.csv"));
        io::write(&pp, p.to_csv())?;
        io::write(&ep, ev.to_csv())?;
        m.outputs.extend(names(&[pp, ep]));
    }
    m.inputs = std::iter::once(digest(&a.ckpt))
        .chain(tensors.iter().map(|(_, _, p)| digest(p)))
        .collect::<Result<_>>()?;
    m.config = json!({ "spec": w.spec, "postprocess": post, "features": fcfg });
    m.hashes = json!({ "spec": w.spec.hash(), "features": fcfg.hash(), "postprocess": config_hash(&post) });
    m.write(&a.out.join(MANIFEST))?;
    let events: usize = results.iter().map(|(_, _, e)| e.len()).sum();
    println!("{} recordings, {events} hypothesis events -> {}", results.len(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------- score

fn load_grid(path: Option<&Path>) -> Result<Vec<f64>> {
    match path {
        Some(p) => Ok(parse_grid(&io::read_text(p)?).with_context(|| format!("parsing {}", p.display()))?),
        None => Ok(uniform_grid(20)),
    }
}

fn write_report(dir: &Path, report: &ScoreReport, title: &str) -> Result<Vec<PathBuf>> {
    let mut out = vec![dir.join("report.json")];
    io::write(&out[0], serde_json::to_string_pretty(report)? + "\n")?;
    if !report.roc.is_empty() {
        let csv = dir.join("roc.csv");
        let svg = dir.join("roc.svg");
        io::write(&csv, roc_csv(&report.roc))?;
        io::write(&svg, roc_svg(&report.roc, title))?;
        out.extend([csv, svg]);
    }
    Ok(out)
}

fn summary_line(r: &ScoreReport) -> String {
    format!(
        "sensitivity {:.2}%  specificity {:.2}%  FA/24h {:.2}  ({} of {} events, {} false alarms)",
        r.sensitivity, r.specificity, r.fa_per_24h, r.tp, r.ref_events, r.fp
    )
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    let post = post_config(&a.post)?;
    let refs = io::annotation_files(&a.reference)?;
    if refs.is_empty() {
        return Err(usage(format!("no reference .csv files in {}", a.reference.display())));
    }
    let mut inputs = Vec::new();
    let mut ref_lists = Vec::new();
    let mut hyp_lists = Vec::new();
    let mut posts = Vec::new();
    for (stem, ref_path) in &refs {
        let post_path = a.hyp.join(format!("{stem}.post.csv"));
        let p = if post_path.is_file() {
            inputs.push(post_path.clone());
            Some(EpochPosteriors::from_csv(&io::read_text(&post_path)?).with_context(|| format!("parsing {}", post_path.display()))?)
        } else {
            None
        };
        let r = io::read_events(ref_path, p.as_ref().map(EpochPosteriors::duration), &a.label)?;
        let hyp_path = a.hyp.join(format!("{stem}.csv"));
        let (h, epoch) = if hyp_path.is_file() {
            inputs.push(hyp_path.clone());
            let epoch = p.as_ref().map_or(1.0, |p| p.epoch_duration);
            (io::read_events(&hyp_path, Some(r.total_duration()), &a.label)?, epoch)
        } else if let Some(p) = &p {
            (to_events(p, &post)?, p.epoch_duration)
        } else {
            bail!("no hypothesis for {stem}: neither {} nor {} exists", hyp_path.display(), post_path.display());
        };
        let h = align_duration(&h, r.total_duration(), epoch).with_context(|| format!("recording {stem}"))?;
        inputs.push(ref_path.clone());
        ref_lists.push(r);
        hyp_lists.push(h);
        posts.push(p);
    }
    let mut report = score_lists(&ref_lists, &hyp_lists)?;
    let grid = load_grid(a.roc.as_deref())?;
    if posts.iter().all(Option::is_some) {
        let posts: Vec<EpochPosteriors> = posts.into_iter().flatten().collect();
        report.roc = roc_sweep(&posts, &ref_lists, &post, &grid)?;
    } else if a.roc.is_some() {
        return Err(usage("--roc needs a <stem>.post.csv posterior file for every recording"));
    }

    let out = a.out.clone().unwrap_or_else(|| a.hyp.join("score"));
    let mut m = Manifest::new("score", a);
    m.outputs = names(&write_report(&out, &report, "ROC")?);
    m.inputs = inputs.iter().map(|p| digest(p)).collect::<Result<_>>()?;
    m.config = json!({ "postprocess": post, "grid": grid });
    m.hashes = json!({ "postprocess": config_hash(&post) });
    m.write(&out.join(MANIFEST))?;
    println!("{}", summary_line(&report));
    if !report.roc.is_empty() {
        println!("ROC area {:.4}", roc_auc(&report.roc));
    }
    Ok(())
}

// ---------------------------------------------------------------- grid

struct Dataset {
    recordings: Vec<(String, Recording)>,
    events: Vec<EventList>,
    files: Vec<PathBuf>,
}

fn load_dataset(dir: &Path, label: &str) -> Result<Dataset> {
    let loaded = load_recordings(dir)?;
    let mut ds = Dataset {
        recordings: Vec::new(),
        events: Vec::new(),
        files: Vec::new(),
    };
    for (stem, rec, path) in loaded {
        let csv = dir.join(format!("{stem}.csv"));
        if !csv.is_file() {
            bail!("no annotation file {} for {}", csv.display(), path.display());
        }
        ds.events.push(io::read_events(&csv, Some(rec.duration()), label)?);
        ds.recordings.push((stem, rec));
        ds.files.extend([path, csv]);
    }
    Ok(ds)
}

#[derive(Debug, serde::Serialize)]
struct GridRow {
    preset: String,
    strategy: Adaptation,
    channels: usize,
    conv_layers: usize,
    sensitivity: f64,
    specificity: f64,
    fa_per_24h: f64,
    auc: f64,
}

fn strategy_name(a: Adaptation) -> String {
    json!(a).as_str().unwrap_or_default().to_string()
}

fn summary_tables(rows: &[GridRow]) -> (String, String) {
    let mut csv = String::from("ch,conv_layers,sensitivity,specificity,fa_per_24h,preset,strategy,auc\n");
    let mut md = String::from(
        "| Ch. | 2D CNN Layers | Sensitivity (%) | Specificity (%) | FA/24 Hours | Preset | Strategy | AUC |\n\
         |----:|--------------:|----------------:|----------------:|------------:|--------|----------|----:|\n",
    );
    for r in rows {
        let s = strategy_name(r.strategy);
        let _ = writeln!(
            csv,
            "{},{},{:.2},{:.2},{:.2},{},{s},{:.4}",
            r.channels, r.conv_layers, r.sensitivity, r.specificity, r.fa_per_24h, r.preset, r.auc
        );
        let _ = writeln!(
            md,
            "| {} | {} | {:.2} | {:.2} | {:.2} | {} | {s} | {:.4} |",
            r.channels, r.conv_layers, r.sensitivity, r.specificity, r.fa_per_24h, r.preset, r.auc
        );
    }
    (csv, md)
}

pub fn grid(a: &GridArgs) -> Result<()> {
    let fe = FrontEnd::load(&a.front)?;
    let base = load_spec(a.model.spec.as_deref())?;
    let post = post_config(&a.post)?;
    let thresholds = load_grid(a.roc.as_deref())?;
    let strategies = a.strategies.iter().map(|s| parse_adaptation(s)).collect::<Result<Vec<_>>>()?;
    if strategies.is_empty() || a.presets.is_empty() {
        return Err(usage("--presets and --strategies must not be empty"));
    }
    let presets = a.presets.iter().map(|p| fe.preset(p)).collect::<Result<Vec<_>>>()?;
    let train_ds = load_dataset(&a.train, &a.model.label)?;
    let test_ds = load_dataset(&a.test, &a.model.label)?;
    let epoch = fe.features.epoch_duration;
    let frames = fe.features.frames_per_epoch();

    let mut m = Manifest::new("grid", a);
    let mut rows = Vec::new();
    for preset in &presets {
        let train_f = fe.extract(&train_ds.recordings, preset)?;
        let test_f = fe.extract(&test_ds.recordings, preset)?;
        let layers_of = |ad: Adaptation| {
            let spec = NetworkSpec { adaptation: ad, ..base.clone() };
            shape_plan(preset.len(), frames, &spec).map(|p| p.conv_layers())
        };
        let preserved = layers_of(Adaptation::PreserveDims).ok();
        for &strategy in &strategies {
            let name = strategy_name(strategy);
            let layers = match layers_of(strategy) {
                Ok(l) => l,
                Err(e) => {
                    eprintln!("skipping {} / {name}: {e}", preset.name);
                    continue;
                }
            };
            if strategy == Adaptation::DropLayers && strategies.contains(&Adaptation::PreserveDims) && Some(layers) == preserved {
                continue;
            }
            let spec = NetworkSpec { adaptation: strategy, ..base.clone() };
            let data: Vec<(&FeatureTensor, &EventList)> = train_f.iter().map(|(_, t)| t).zip(&train_ds.events).collect();
            let (w, outcome) = fit_model(&data, &spec, &a.model, epoch).with_context(|| format!("training {} / {name}", preset.name))?;
            let posts = test_f
                .iter()
                .map(|(_, t)| posteriors(&w, t, epoch))
                .collect::<Result<Vec<_>>>()?;
            let hyps = posts
                .iter()
                .zip(&test_ds.events)
                .map(|(p, r)| Ok(align_duration(&to_events(p, &post)?, r.total_duration(), epoch)?))
                .collect::<Result<Vec<_>>>()?;
            let mut report = score_lists(&test_ds.events, &hyps)?;
            report.roc = roc_sweep(&posts, &test_ds.events, &post, &thresholds)?;
            let auc = roc_auc(&report.roc);

            let dir = a.out.join(format!("{}_{name}", preset.name));
            let title = format!("{} ({} channels, {layers} conv layers)", preset.name, preset.len());
            m.outputs.extend(names(&write_report(&dir, &report, &title)?));
            m.outputs.extend(names(&write_checkpoint(&dir.join("model.ckpt"), &w, &outcome)?));
            eprintln!("{title} [{name}]: {}", summary_line(&report));
            rows.push(GridRow {
                preset: preset.name.clone(),
                strategy,
                channels: preset.len(),
                conv_layers: layers,
                sensitivity: report.sensitivity,
                specificity: report.specificity,
                fa_per_24h: report.fa_per_24h,
                auc,
            });
        }
    }
    if rows.is_empty() {
        return Err(anyhow!("no grid row could be run"));
    }

    let (csv, md) = summary_tables(&rows);
    let csv_path = a.out.join("summary.csv");
    let md_path = a.out.join("summary.md");
    io::write(&csv_path, &csv)?;
    io::write(&md_path, &md)?;
    m.outputs.extend(names(&[csv_path, md_path]));
    m.inputs = train_ds.files.iter().chain(&test_ds.files).map(|p| digest(p)).collect::<Result<_>>()?;
    m.config = json!({
        "front_end": presets.iter().map(|p| fe.describe(p)).collect::<Vec<_>>(),
        "spec": base,
        "train": train_config(&a.model),
        "postprocess": post,
        "grid": thresholds,
        "rows": rows,
    });
    m.hashes = json!({ "spec": base.hash(), "features": fe.features.hash(), "postprocess": config_hash(&post) });
    m.write(&a.out.join(MANIFEST))?;
    print!("{md}");
    Ok(())
}

