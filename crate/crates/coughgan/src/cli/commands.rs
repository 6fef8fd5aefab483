//! Subcommand implementations: thin orchestration over the library modules.
//! Every output embeds the config snapshot and the stage seed, so any
//! artifact can be reproduced from the command that made it.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::acgan::{
    self, build_discriminator, build_generator, synthesize, train_acgan, Discriminator, Generator,
    TrainingHistory,
};
use crate::audio_io::{
    balance_classes, filter_manifest, load_manifest, manifest_stats, read_wav, stratified_split,
    write_wav, DatasetSplit, ManifestRecord,
};
use crate::classifier::{
    augment_training_set, build_classifier, evaluate, train_classifier, Classifier, EvalMetrics,
};
use crate::dataset::{LabeledSpectrograms, Provenance};
use crate::dsp::{extract_segment, preprocess, segment_coughs, SegmentBounds};
use crate::error::{Error, Result};
use crate::features::{mel_spectrogram_db, scale_to_unit, unscale, MelSpectrogram};
use crate::nn::{AdamState, Tensor};
use crate::rng::Rng;

use super::checkpoint::CheckpointContainer;
use super::config::{derive_seed, PipelineConfig};
use super::plot;

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Filtered (and optionally balanced) manifest records, sorted by uuid for
/// deterministic processing order.
fn pipeline_records(cfg: &PipelineConfig) -> Result<Vec<ManifestRecord>> {
    let records = load_manifest(&cfg.paths.manifest)?;
    let mut kept = filter_manifest(
        &records,
        cfg.filter.min_cough_detected,
        cfg.filter.require_ssl,
    );
    if cfg.filter.balance_classes {
        kept = balance_classes(&kept, derive_seed(cfg.seed, "balance"))?;
    }
    kept.sort_by(|a, b| a.uuid.cmp(&b.uuid));
    Ok(kept)
}

/// Label vocabulary in canonical order: binary when only SSL-style labels
/// appear, three-way when self-reported symptomatic records are present.
fn class_vocab(records: &[ManifestRecord]) -> Vec<String> {
    let three_way = records
        .iter()
        .any(|r| r.class_label() == Some("symptomatic"));
    if three_way {
        vec!["healthy".into(), "symptomatic".into(), "COVID-19".into()]
    } else {
        vec!["healthy".into(), "COVID-19".into()]
    }
}

fn compute_split(
    cfg: &PipelineConfig,
    records: &[ManifestRecord],
) -> Result<(DatasetSplit, Vec<String>)> {
    stratified_split(records, cfg.split.ratios, derive_seed(cfg.seed, "split"))
}

/// Hash of the held-out test set (sorted uuids), asserted identical between
/// baseline and augmented runs.
pub fn test_manifest_hash(split: &DatasetSplit) -> String {
    let mut uuids: Vec<&str> = split.test.iter().map(|r| r.uuid.as_str()).collect();
    uuids.sort_unstable();
    let mut hasher = Sha256::new();
    for u in uuids {
        hasher.update(u.as_bytes());
        hasher.update(b"\n");
    }
    format!("{:x}", hasher.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessSummary {
    pub processed: usize,
    pub segments: usize,
    pub skipped: usize,
}

/// Per input clip: normalize, low-pass, resample, segment; each segment is
/// written as a WAV beside a CSV row. Unreadable files are logged and
/// skipped; the skip count feeds the exit status.
pub fn cmd_preprocess(cfg: &PipelineConfig) -> Result<PreprocessSummary> {
    let records = pipeline_records(cfg)?;
    let seg_dir = cfg.paths.work_dir.join("segments");
    ensure_dir(&seg_dir)?;
    let csv_path = cfg.paths.work_dir.join("segments.csv");
    let mut rows = String::from("uuid,segment_index,start_sample,end_sample\n");

    let mut summary = PreprocessSummary {
        processed: 0,
        segments: 0,
        skipped: 0,
    };
    for record in &records {
        let clip = match read_wav(&record.audio_path) {
            Ok(clip) if !clip.samples.is_empty() => clip,
            Ok(_) => {
                eprintln!("warning: {} is empty, skipping", record.audio_path.display());
                summary.skipped += 1;
                continue;
            }
            Err(e) => {
                eprintln!(
                    "warning: cannot read {}: {e}, skipping",
                    record.audio_path.display()
                );
                summary.skipped += 1;
                continue;
            }
        };
        let processed = preprocess(
            &clip,
            cfg.dsp.filter_order,
            cfg.dsp.cutoff_hz,
            cfg.dsp.target_rate_hz,
        )?;
        let bounds = segment_coughs(&processed, &cfg.dsp.segmentation)?;
        for (i, b) in bounds.iter().enumerate() {
            let mut segment = extract_segment(&processed, b)?;
            // filtering/resampling can overshoot the normalized peak slightly
            for s in &mut segment.samples {
                *s = s.clamp(-1.0, 1.0);
            }
            write_wav(&segment, &seg_dir.join(format!("{}_{i}.wav", record.uuid)))?;
            rows.push_str(&format!(
                "{},{},{},{}\n",
                record.uuid, i, b.start_sample, b.end_sample
            ));
            summary.segments += 1;
        }
        summary.processed += 1;
    }
    std::fs::write(&csv_path, rows).map_err(|e| Error::io(&csv_path, e))?;
    println!(
        "preprocess: {} clips -> {} segments ({} skipped)",
        summary.processed, summary.segments, summary.skipped
    );
    Ok(summary)
}

fn segments_csv(cfg: &PipelineConfig) -> Result<Vec<(String, usize, SegmentBounds)>> {
    let path = cfg.paths.work_dir.join("segments.csv");
    let mut reader = csv::Reader::from_path(&path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Row {
            row: i + 1,
            message: e.to_string(),
        })?;
        let field = |c: usize| -> Result<&str> {
            row.get(c).ok_or(Error::Row {
                row: i + 1,
                message: "missing column".into(),
            })
        };
        let parse_usize = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Row {
                row: i + 1,
                message: format!("bad number {s:?}"),
            })
        };
        out.push((
            field(0)?.to_string(),
            parse_usize(field(1)?)?,
            SegmentBounds {
                start_sample: parse_usize(field(2)?)?,
                end_sample: parse_usize(field(3)?)?,
            },
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeaturizeSummary {
    pub records: usize,
    pub skipped: usize,
    pub per_class: BTreeMap<String, usize>,
}

/// One dB mel record per segment, labels from the manifest, all in a single
/// container file.
pub fn cmd_featurize(cfg: &PipelineConfig) -> Result<FeaturizeSummary> {
    let records = pipeline_records(cfg)?;
    let vocab = class_vocab(&records);
    let labels: BTreeMap<&str, Option<&'static str>> = records
        .iter()
        .map(|r| (r.uuid.as_str(), r.class_label()))
        .collect();
    let seg_dir = cfg.paths.work_dir.join("segments");

    let mut summary = FeaturizeSummary {
        records: 0,
        skipped: 0,
        per_class: BTreeMap::new(),
    };
    let mut meta_records = Vec::new();
    let mut container = CheckpointContainer::new(serde_json::Value::Null);
    for (uuid, segment_idx, _) in segments_csv(cfg)? {
        let Some(Some(label)) = labels.get(uuid.as_str()) else {
            eprintln!("warning: no class label for {uuid}, skipping segment {segment_idx}");
            summary.skipped += 1;
            continue;
        };
        let wav = seg_dir.join(format!("{uuid}_{segment_idx}.wav"));
        let clip = read_wav(&wav)?;
        let spec = match mel_spectrogram_db(&clip, &cfg.features) {
            Ok(spec) => spec,
            Err(Error::Domain(msg)) => {
                eprintln!("warning: {uuid}_{segment_idx}: {msg}, skipping");
                summary.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        container.push(
            format!("{uuid}_{segment_idx}"),
            Tensor::from_vec(&[cfg.features.n_mels, cfg.features.n_frames], spec.values)?,
        );
        meta_records.push(serde_json::json!({
            "uuid": uuid,
            "segment": segment_idx,
            "label": label,
            "provenance": "real",
        }));
        *summary.per_class.entry(label.to_string()).or_insert(0) += 1;
        summary.records += 1;
    }
    container.metadata = serde_json::json!({
        "kind": "spectrograms",
        "scale": "db",
        "class_names": vocab,
        "mel_config": cfg.features,
        "records": meta_records,
        "config": cfg.snapshot(),
        "seed": cfg.seed,
    });
    let out = cfg.paths.work_dir.join("features.acgn");
    container.save(&out)?;
    println!("featurize: {} records ({} skipped)", summary.records, summary.skipped);
    for (label, count) in &summary.per_class {
        println!("  {label}: {count}");
    }
    Ok(summary)
}

pub struct SpectrogramFile {
    pub class_names: Vec<String>,
    pub mel: crate::features::MelConfig,
    /// (uuid, label index, provenance, dB values)
    pub records: Vec<(String, usize, Provenance, Vec<f64>)>,
}

pub fn load_spectrogram_file(path: &Path) -> Result<SpectrogramFile> {
    let container = CheckpointContainer::load(path)?;
    let meta = &container.metadata;
    if meta.get("kind").and_then(|k| k.as_str()) != Some("spectrograms") {
        return Err(Error::Format(format!(
            "{} is not a spectrogram container",
            path.display()
        )));
    }
    let class_names: Vec<String> = serde_json::from_value(
        meta.get("class_names")
            .cloned()
            .ok_or_else(|| Error::Format("missing class_names".into()))?,
    )
    .map_err(|e| Error::Format(format!("bad class_names: {e}")))?;
    let mel: crate::features::MelConfig = serde_json::from_value(
        meta.get("mel_config")
            .cloned()
            .ok_or_else(|| Error::Format("missing mel_config".into()))?,
    )
    .map_err(|e| Error::Format(format!("bad mel_config: {e}")))?;
    let record_meta = meta
        .get("records")
        .and_then(|r| r.as_array())
        .ok_or_else(|| Error::Format("missing records".into()))?;
    if record_meta.len() != container.entries.len() {
        return Err(Error::Format(
            "record metadata does not match entry count".into(),
        ));
    }
    let mut records = Vec::with_capacity(container.entries.len());
    for (meta, (_, tensor)) in record_meta.iter().zip(&container.entries) {
        let uuid = meta
            .get("uuid")
            .and_then(|u| u.as_str())
            .ok_or_else(|| Error::Format("record missing uuid".into()))?;
        let label = meta
            .get("label")
            .and_then(|l| l.as_str())
            .ok_or_else(|| Error::Format("record missing label".into()))?;
        let index = class_names
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::Data(format!("label {label} not in vocabulary")))?;
        let provenance = match meta.get("provenance").and_then(|p| p.as_str()) {
            Some("synthetic") => Provenance::Synthetic,
            _ => Provenance::Real,
        };
        records.push((uuid.to_string(), index, provenance, tensor.data().to_vec()));
    }
    Ok(SpectrogramFile {
        class_names,
        mel,
        records,
    })
}

impl SpectrogramFile {
    /// Unit-scaled subset of the records whose uuid passes the filter.
    pub fn subset(&self, keep: impl Fn(&str) -> bool) -> Result<LabeledSpectrograms> {
        let mut set = LabeledSpectrograms::empty(
            self.mel.n_mels,
            self.mel.n_frames,
            self.class_names.clone(),
        );
        for (uuid, label, provenance, db_values) in &self.records {
            if !keep(uuid) {
                continue;
            }
            let spec = MelSpectrogram {
                values: db_values.clone(),
                config: self.mel,
            };
            set.push(&scale_to_unit(&spec)?, *label, *provenance)?;
        }
        Ok(set)
    }
}

fn gan_checkpoint_meta(
    cfg: &PipelineConfig,
    gan_cfg: &acgan::GanConfig,
    kind: &str,
    class_names: &[String],
    epoch: usize,
) -> serde_json::Value {
    serde_json::json!({
        "kind": kind,
        "gan_config": gan_cfg,
        "class_names": class_names,
        "epoch": epoch,
        "seed": gan_cfg.seed,
        "config": cfg.snapshot(),
    })
}

fn pack_generator(gen: &Generator, opt: Option<&AdamState>, metadata: serde_json::Value) -> CheckpointContainer {
    let mut c = CheckpointContainer::new(metadata);
    for (name, t) in gen.named_params() {
        c.push(name, t.clone());
    }
    for (name, t) in gen.named_state() {
        c.push(name, t.clone());
    }
    if let Some(opt) = opt {
        for (name, t) in opt.named_tensors() {
            c.push(format!("gen.{name}"), t);
        }
    }
    c
}

fn pack_discriminator(
    disc: &Discriminator,
    opt: Option<&AdamState>,
    metadata: serde_json::Value,
) -> CheckpointContainer {
    let mut c = CheckpointContainer::new(metadata);
    for (name, t) in disc.named_params() {
        c.push(name, t.clone());
    }
    for (name, t) in disc.named_state() {
        c.push(name, t.clone());
    }
    if let Some(opt) = opt {
        for (name, t) in opt.named_tensors() {
            c.push(format!("disc.{name}"), t);
        }
    }
    c
}

fn gan_config_from_meta(container: &CheckpointContainer) -> Result<acgan::GanConfig> {
    serde_json::from_value(
        container
            .metadata
            .get("gan_config")
            .cloned()
            .ok_or_else(|| Error::Format("checkpoint missing gan_config".into()))?,
    )
    .map_err(|e| Error::Format(format!("bad gan_config in checkpoint: {e}")))
}

pub fn unpack_generator(container: &CheckpointContainer) -> Result<(Generator, Vec<String>)> {
    let gan_cfg = gan_config_from_meta(container)?;
    let class_names: Vec<String> = serde_json::from_value(
        container
            .metadata
            .get("class_names")
            .cloned()
            .unwrap_or_default(),
    )
    .unwrap_or_default();
    let mut gen = build_generator(&gan_cfg, &mut Rng::seed_from_u64(0))?;
    for (name, tensor) in &container.entries {
        if name.starts_with("gen.adam.") {
            continue;
        }
        gen.assign(name, tensor.clone())?;
    }
    Ok((gen, class_names))
}

pub fn unpack_discriminator(container: &CheckpointContainer) -> Result<Discriminator> {
    let gan_cfg = gan_config_from_meta(container)?;
    let mut disc = build_discriminator(&gan_cfg, &mut Rng::seed_from_u64(0))?;
    for (name, tensor) in &container.entries {
        if name.starts_with("disc.adam.") {
            continue;
        }
        disc.assign(name, tensor.clone())?;
    }
    Ok(disc)
}

pub fn history_csv(history: &TrainingHistory) -> String {
    let mut out =
        String::from("epoch,disc_real_loss,disc_fake_loss,gen_loss,p_real,p_fake,real_class_acc,noise_var\n");
    for r in &history.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.epoch,
            r.disc_real_loss,
            r.disc_fake_loss,
            r.gen_loss,
            r.p_real,
            r.p_fake,
            r.real_class_acc,
            r.noise_var
        ));
    }
    out
}

/// Trains the GAN on the training split of the featurized set.
pub fn cmd_train_gan(cfg: &PipelineConfig) -> Result<TrainingHistory> {
    let features = load_spectrogram_file(&cfg.paths.work_dir.join("features.acgn"))?;
    if features.class_names.len() != cfg.gan.n_classes {
        return Err(Error::Config(format!(
            "gan.n_classes = {} but the feature set has {} classes",
            cfg.gan.n_classes,
            features.class_names.len()
        )));
    }
    let records = pipeline_records(cfg)?;
    let (split, warnings) = compute_split(cfg, &records)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let train_uuids: HashSet<&str> = split.train.iter().map(|r| r.uuid.as_str()).collect();
    let train_set = features.subset(|uuid| train_uuids.contains(uuid))?;
    if train_set.is_empty() {
        return Err(Error::Data("training split has no feature records".into()));
    }

    let mut gan_cfg = cfg.gan.clone();
    gan_cfg.seed = derive_seed(cfg.seed, "gan");
    let gan_dir = cfg.paths.work_dir.join("gan");
    ensure_dir(&gan_dir)?;

    let mut cb = |epoch: usize, gen: &Generator, disc: &Discriminator| -> Result<()> {
        let meta = gan_checkpoint_meta(cfg, &gan_cfg, "generator", &features.class_names, epoch);
        pack_generator(gen, None, meta).save(&gan_dir.join(format!("generator_epoch{epoch}.acgn")))?;
        let meta = gan_checkpoint_meta(cfg, &gan_cfg, "discriminator", &features.class_names, epoch);
        pack_discriminator(disc, None, meta)
            .save(&gan_dir.join(format!("discriminator_epoch{epoch}.acgn")))
    };
    let trained = train_acgan(&train_set, &gan_cfg, Some(&mut cb))?;

    let last_epoch = gan_cfg.epochs - 1;
    let meta = gan_checkpoint_meta(cfg, &gan_cfg, "generator", &features.class_names, last_epoch);
    pack_generator(&trained.generator, None, meta).save(&gan_dir.join("generator.acgn"))?;
    let meta = gan_checkpoint_meta(cfg, &gan_cfg, "discriminator", &features.class_names, last_epoch);
    pack_discriminator(&trained.discriminator, None, meta)
        .save(&gan_dir.join("discriminator.acgn"))?;
    let csv_path = gan_dir.join("history.csv");
    std::fs::write(&csv_path, history_csv(&trained.history)).map_err(|e| Error::io(&csv_path, e))?;

    let last = trained.history.records.last().expect("at least one epoch");
    println!(
        "train-gan: {} epochs on {} samples; final p_real {:.3}, p_fake {:.3}, class acc {:.3}",
        gan_cfg.epochs,
        train_set.len(),
        last.p_real,
        last.p_fake,
        last.real_class_acc
    );
    Ok(trained.history)
}

/// Conditionally generates `count` spectrograms per requested class from the
/// saved generator checkpoint.
pub fn cmd_synth(cfg: &PipelineConfig, class: Option<&str>, count: usize) -> Result<usize> {
    if count == 0 {
        return Err(Error::Config(
            "synthesis requires an explicit positive --count".into(),
        ));
    }
    let container = CheckpointContainer::load(&cfg.paths.work_dir.join("gan").join("generator.acgn"))?;
    let (mut gen, class_names) = unpack_generator(&container)?;
    let classes: Vec<usize> = match class {
        Some(name) => vec![class_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Domain(format!("unknown class label {name:?}")))?],
        None => (0..class_names.len()).collect(),
    };

    let synth_seed = derive_seed(cfg.seed, "synth");
    let mut out = CheckpointContainer::new(serde_json::Value::Null);
    let mut meta_records = Vec::new();
    let mut total = 0usize;
    for &class_index in &classes {
        let samples = synthesize(
            &mut gen,
            class_index,
            count,
            derive_seed(synth_seed, &class_names[class_index]),
        )?;
        for (i, unit) in samples.iter().enumerate() {
            let spec = unscale(unit, &cfg.features)?;
            let name = format!("synth_{}_{i}", class_names[class_index]);
            out.push(
                name.clone(),
                Tensor::from_vec(&[cfg.features.n_mels, cfg.features.n_frames], spec.values)?,
            );
            meta_records.push(serde_json::json!({
                "uuid": name,
                "segment": 0,
                "label": class_names[class_index],
                "provenance": "synthetic",
            }));
            total += 1;
        }
    }
    out.metadata = serde_json::json!({
        "kind": "spectrograms",
        "scale": "db",
        "class_names": class_names,
        "mel_config": cfg.features,
        "records": meta_records,
        "config": cfg.snapshot(),
        "seed": synth_seed,
    });
    let synth_dir = cfg.paths.work_dir.join("synth");
    ensure_dir(&synth_dir)?;
    out.save(&synth_dir.join("synthetic.acgn"))?;
    println!("synth: {total} records across {} class(es)", classes.len());
    Ok(total)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ClassifierRunReport {
    pub test: EvalMetrics,
    pub validation: EvalMetrics,
    pub best_epoch: usize,
    pub test_manifest_hash: String,
    pub train_size: usize,
    pub synthetic_count: usize,
    pub seed: u64,
    pub config: serde_json::Value,
}

fn clf_history_csv(history: &crate::classifier::ClassifierHistory) -> String {
    let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
    for r in &history.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc
        ));
    }
    out
}

fn pack_classifier(
    clf: &Classifier,
    cfg: &PipelineConfig,
    clf_cfg: &crate::classifier::ClassifierConfig,
    class_names: &[String],
    opt: Option<&AdamState>,
) -> CheckpointContainer {
    let mut c = CheckpointContainer::new(serde_json::json!({
        "kind": "classifier",
        "clf_config": clf_cfg,
        "class_names": class_names,
        "seed": clf_cfg.seed,
        "config": cfg.snapshot(),
    }));
    for (name, t) in clf.named_params() {
        c.push(name, t.clone());
    }
    for (name, t) in clf.named_state() {
        c.push(name, t.clone());
    }
    if let Some(opt) = opt {
        for (name, t) in opt.named_tensors() {
            c.push(format!("clf.{name}"), t);
        }
    }
    c
}

pub fn unpack_classifier(container: &CheckpointContainer) -> Result<Classifier> {
    let clf_cfg: crate::classifier::ClassifierConfig = serde_json::from_value(
        container
            .metadata
            .get("clf_config")
            .cloned()
            .ok_or_else(|| Error::Format("checkpoint missing clf_config".into()))?,
    )
    .map_err(|e| Error::Format(format!("bad clf_config in checkpoint: {e}")))?;
    let mut clf = build_classifier(&clf_cfg, &mut Rng::seed_from_u64(0))?;
    for (name, tensor) in &container.entries {
        if name.starts_with("clf.adam.") {
            continue;
        }
        clf.assign(name, tensor.clone())?;
    }
    Ok(clf)
}

/// Trains the classifier on the training split (optionally augmented with a
/// synthetic container) and evaluates on the untouched validation and test
/// splits.
pub fn cmd_train_clf(
    cfg: &PipelineConfig,
    augment_file: Option<&Path>,
) -> Result<ClassifierRunReport> {
    let features = load_spectrogram_file(&cfg.paths.work_dir.join("features.acgn"))?;
    let records = pipeline_records(cfg)?;
    let (split, warnings) = compute_split(cfg, &records)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let part_uuids = |part: &[ManifestRecord]| -> HashSet<String> {
        part.iter().map(|r| r.uuid.clone()).collect()
    };
    let train_uuids = part_uuids(&split.train);
    let val_uuids = part_uuids(&split.validation);
    let test_uuids = part_uuids(&split.test);
    let mut train_set = features.subset(|u| train_uuids.contains(u))?;
    let val_set = features.subset(|u| val_uuids.contains(u))?;
    let test_set = features.subset(|u| test_uuids.contains(u))?;

    let mut synthetic_count = 0;
    if let Some(path) = augment_file {
        let synth = load_spectrogram_file(path)?;
        let synth_set = synth.subset(|_| true)?;
        synthetic_count = synth_set.len();
        // validation and test sets are never augmented
        train_set = augment_training_set(&train_set, &synth_set, derive_seed(cfg.seed, "augment"))?;
    }

    let mut clf_cfg = cfg.classifier.clone();
    clf_cfg.seed = derive_seed(cfg.seed, "clf");
    let outcome = train_classifier(&train_set, &val_set, &clf_cfg)?;
    let mut final_model = outcome.final_model;
    let test = evaluate(&mut final_model, &test_set)?;
    let validation = evaluate(&mut final_model, &val_set)?;

    let report = ClassifierRunReport {
        test,
        validation,
        best_epoch: outcome.best_epoch,
        test_manifest_hash: test_manifest_hash(&split),
        train_size: train_set.len(),
        synthetic_count,
        seed: clf_cfg.seed,
        config: cfg.snapshot(),
    };

    let clf_dir = cfg.paths.work_dir.join("clf");
    ensure_dir(&clf_dir)?;
    let suffix = if augment_file.is_some() { "_augmented" } else { "" };
    pack_classifier(&final_model, cfg, &clf_cfg, &features.class_names, None)
        .save(&clf_dir.join(format!("classifier{suffix}.acgn")))?;
    pack_classifier(&outcome.best_model, cfg, &clf_cfg, &features.class_names, None)
        .save(&clf_dir.join(format!("best{suffix}.acgn")))?;
    let hist_path = clf_dir.join(format!("history{suffix}.csv"));
    std::fs::write(&hist_path, clf_history_csv(&outcome.history))
        .map_err(|e| Error::io(&hist_path, e))?;
    let metrics_path = clf_dir.join(format!("metrics{suffix}.json"));
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Format(format!("metrics serialization failed: {e}")))?;
    std::fs::write(&metrics_path, json).map_err(|e| Error::io(&metrics_path, e))?;

    println!(
        "train-clf: {} train ({} synthetic), test accuracy {:.4}, val accuracy {:.4}",
        report.train_size, report.synthetic_count, report.test.accuracy, report.validation.accuracy
    );
    println!("test manifest hash {}", report.test_manifest_hash);
    Ok(report)
}

/// Evaluates a classifier checkpoint on the held-out test split.
pub fn cmd_eval(cfg: &PipelineConfig, checkpoint: &Path) -> Result<EvalMetrics> {
    let container = CheckpointContainer::load(checkpoint)?;
    let mut clf = unpack_classifier(&container)?;
    let features = load_spectrogram_file(&cfg.paths.work_dir.join("features.acgn"))?;
    let records = pipeline_records(cfg)?;
    let (split, _) = compute_split(cfg, &records)?;
    let test_uuids: HashSet<&str> = split.test.iter().map(|r| r.uuid.as_str()).collect();
    let test_set = features.subset(|u| test_uuids.contains(u))?;
    let metrics = evaluate(&mut clf, &test_set)?;
    let json = serde_json::to_string_pretty(&metrics)
        .map_err(|e| Error::Format(format!("metrics serialization failed: {e}")))?;
    println!("{json}");
    println!("test accuracy {:.4} on {} samples", metrics.accuracy, metrics.sample_count);
    Ok(metrics)
}

/// Renders a history CSV as curves or a spectrogram container as a grayscale
/// grid (first 16 records).
pub fn cmd_plot(input: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("plot");
    let out = out_dir.join(format!("{stem}.png"));
    match input.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let series = plot::parse_history_csv(input)?;
            plot::render_curves(&series, &out)?;
        }
        Some("acgn") => {
            let file = load_spectrogram_file(input)?;
            let records: Vec<(&str, &[f64])> = file
                .records
                .iter()
                .take(16)
                .map(|(uuid, _, _, values)| (uuid.as_str(), values.as_slice()))
                .collect();
            plot::render_spectrogram_grid(
                &records,
                file.mel.n_mels,
                file.mel.n_frames,
                -file.mel.top_db,
                0.0,
                &out,
            )?;
        }
        _ => {
            return Err(Error::Format(format!(
                "cannot plot {}: expected .csv or .acgn",
                input.display()
            )))
        }
    }
    println!("plot: wrote {}", out.display());
    Ok(vec![out])
}

/// Prints manifest statistics (class counts and cough_detected histogram)
/// before and after quality filtering.
pub fn cmd_stats(cfg: &PipelineConfig) -> Result<crate::audio_io::ManifestStats> {
    let records = load_manifest(&cfg.paths.manifest)?;
    let stats = manifest_stats(&records);
    println!("manifest: {}", cfg.paths.manifest.display());
    print!("{stats}");
    let kept = filter_manifest(
        &records,
        cfg.filter.min_cough_detected,
        cfg.filter.require_ssl,
    );
    println!(
        "after filter (cough_detected >= {}, require_ssl = {}): {} records",
        cfg.filter.min_cough_detected,
        cfg.filter.require_ssl,
        kept.len()
    );
    Ok(stats)
}
