//! End-to-end pipeline runs over a synthetic fixture corpus, exercising the
//! CLI surface: file formats, split reuse, augmentation, and rerun
//! determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

use coughgan::audio_io::{write_wav, AudioClip};
use coughgan::cli::{self, CheckpointContainer, PipelineConfig};
use coughgan::rng::Rng;

/// One-second 48 kHz clip: quiet noise floor plus a tone burst whose
/// frequency depends on the class.
fn fixture_clip(covid: bool, seed: u64) -> AudioClip {
    let mut rng = Rng::seed_from_u64(seed);
    let rate = 48000;
    let freq = if covid { 2000.0 } else { 400.0 };
    let mut samples: Vec<f64> = (0..rate).map(|_| rng.uniform_in(-0.01, 0.01)).collect();
    let start = 12000 + rng.below(6000);
    for i in 0..7200 {
        let t = (start + i) as f64 / rate as f64;
        let envelope = (std::f64::consts::PI * i as f64 / 7200.0).sin();
        samples[start + i] += 0.8 * envelope * (std::f64::consts::TAU * freq * t).sin();
    }
    for s in &mut samples {
        *s = s.clamp(-1.0, 1.0);
    }
    AudioClip::new(samples, rate as u32).unwrap()
}

/// Writes WAVs + manifest + config into `dir`; returns the config path.
fn build_corpus(dir: &Path, per_class: usize) -> PathBuf {
    let audio_dir = dir.join("audio");
    std::fs::create_dir_all(&audio_dir).unwrap();
    let mut manifest = String::from("uuid,cough_detected,status,status_SSL,SNR\n");
    for i in 0..per_class * 2 {
        let covid = i % 2 == 1;
        let uuid = format!("clip{i:03}");
        write_wav(
            &fixture_clip(covid, 1000 + i as u64),
            &audio_dir.join(format!("{uuid}.wav")),
        )
        .unwrap();
        let ssl = if covid { "COVID-19" } else { "healthy" };
        manifest.push_str(&format!("{uuid},0.95,,{ssl},12.0\n"));
    }
    let manifest_path = audio_dir.join("manifest.csv");
    std::fs::write(&manifest_path, manifest).unwrap();

    let work_dir = dir.join("work");
    let config = serde_json::json!({
        "seed": 41,
        "paths": { "manifest": manifest_path, "work_dir": work_dir },
        "gan": {
            "latent_dim": 8,
            "epochs": 2,
            "batch_size": 8,
            "disc_base_filters": 1,
            "gen_base_maps": 4,
            "embedding_dim": 4,
        },
        "classifier": {
            "epochs": 2,
            "batch_size": 8,
            "base_filters": 1,
        },
    });
    let config_path = dir.join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    config_path
}

#[test]
fn full_pipeline_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = build_corpus(dir.path(), 20);
    let cfg = PipelineConfig::load(&config_path).unwrap();
    let work = dir.path().join("work");

    // preprocess: every clip has exactly one padded burst segment
    let summary = cli::cmd_preprocess(&cfg).unwrap();
    assert_eq!(summary.processed, 40);
    assert_eq!(summary.skipped, 0);
    assert!(summary.segments >= 40, "segments {}", summary.segments);
    assert!(work.join("segments.csv").exists());

    // featurize: one record per segment, classes counted
    let feat = cli::cmd_featurize(&cfg).unwrap();
    assert_eq!(feat.records, summary.segments);
    assert_eq!(feat.skipped, 0);
    assert_eq!(feat.per_class.len(), 2);
    let features = cli::load_spectrogram_file(&work.join("features.acgn")).unwrap();
    assert_eq!(features.class_names, vec!["healthy", "COVID-19"]);
    assert_eq!(features.records.len(), feat.records);

    // GAN smoke: runs, leaves checkpoints and a history CSV behind
    let history = cli::cmd_train_gan(&cfg).unwrap();
    assert_eq!(history.records.len(), 2);
    assert!(work.join("gan/generator.acgn").exists());
    assert!(work.join("gan/discriminator.acgn").exists());
    let hist_text = std::fs::read_to_string(work.join("gan/history.csv")).unwrap();
    assert!(hist_text.starts_with(
        "epoch,disc_real_loss,disc_fake_loss,gen_loss,p_real,p_fake,real_class_acc,noise_var"
    ));

    // synthesis: count per class, both classes by default
    let total = cli::cmd_synth(&cfg, None, 5).unwrap();
    assert_eq!(total, 10);
    let synth = cli::load_spectrogram_file(&work.join("synth/synthetic.acgn")).unwrap();
    assert_eq!(synth.records.len(), 10);
    assert!(synth
        .records
        .iter()
        .all(|(_, _, p, _)| *p == coughgan::dataset::Provenance::Synthetic));

    // baseline and augmented classifier runs share the test split
    let baseline = cli::cmd_train_clf(&cfg, None).unwrap();
    let augmented = cli::cmd_train_clf(&cfg, Some(&work.join("synth/synthetic.acgn"))).unwrap();
    assert_eq!(baseline.test_manifest_hash, augmented.test_manifest_hash);
    assert_eq!(augmented.synthetic_count, 10);
    assert_eq!(augmented.train_size, baseline.train_size + 10);
    assert!(work.join("clf/metrics.json").exists());
    assert!(work.join("clf/metrics_augmented.json").exists());

    // eval reproduces the stored test metrics exactly
    let metrics = cli::cmd_eval(&cfg, &work.join("clf/classifier.acgn")).unwrap();
    assert_eq!(metrics, baseline.test);

    // plots render from both input kinds
    let plots = dir.path().join("plots");
    cli::cmd_plot(&work.join("gan/history.csv"), &plots).unwrap();
    cli::cmd_plot(&work.join("features.acgn"), &plots).unwrap();
    assert!(plots.join("history.png").exists());
    assert!(plots.join("features.png").exists());
}

#[test]
fn cli_binary_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = build_corpus(dir.path(), 4);
    let work = dir.path().join("work");
    let bin = env!("CARGO_BIN_EXE_coughgan");

    let run = |args: &[&str]| {
        let output = Command::new(bin)
            .args(args)
            .args(["--config", config_path.to_str().unwrap()])
            .output()
            .expect("binary runs");
        assert!(
            output.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    };

    run(&["preprocess"]);
    run(&["featurize"]);
    let csv_a = std::fs::read(work.join("segments.csv")).unwrap();
    let features_a = std::fs::read(work.join("features.acgn")).unwrap();
    let wav_names: Vec<_> = {
        let mut names: Vec<_> = std::fs::read_dir(work.join("segments"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        names.sort();
        names
    };
    let wav_a: Vec<Vec<u8>> = wav_names.iter().map(|p| std::fs::read(p).unwrap()).collect();

    run(&["preprocess"]);
    run(&["featurize"]);
    assert_eq!(std::fs::read(work.join("segments.csv")).unwrap(), csv_a);
    assert_eq!(std::fs::read(work.join("features.acgn")).unwrap(), features_a);
    for (path, bytes) in wav_names.iter().zip(&wav_a) {
        assert_eq!(&std::fs::read(path).unwrap(), bytes, "{path:?} changed");
    }
}

#[test]
fn stats_tables_total_matches_record_count() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = build_corpus(dir.path(), 3);
    let cfg = PipelineConfig::load(&config_path).unwrap();
    let stats = cli::cmd_stats(&cfg).unwrap();
    assert_eq!(stats.total, 6);
    let histogram_total: usize = stats.cough_detected_histogram.iter().sum();
    assert_eq!(histogram_total, 6);
}

#[test]
fn seed_override_changes_derived_splits() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = build_corpus(dir.path(), 8);
    let mut cfg = PipelineConfig::load(&config_path).unwrap();
    cli::cmd_preprocess(&cfg).unwrap();
    cli::cmd_featurize(&cfg).unwrap();
    let a = cli::cmd_train_clf(&cfg, None).unwrap();
    cfg.seed = 999;
    let b = cli::cmd_train_clf(&cfg, None).unwrap();
    assert_ne!(a.test_manifest_hash, b.test_manifest_hash);
}

#[test]
fn missing_config_is_a_usage_error_with_exit_code_2() {
    let bin = env!("CARGO_BIN_EXE_coughgan");
    let output = Command::new(bin).arg("stats").output().unwrap();
    assert_eq!(output.status.code(), Some(2));

    // config with bad schema also exits 2
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"paths": {"manifest": "m.csv"}}"#).unwrap();
    let output = Command::new(bin)
        .args(["stats", "--config", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn checkpoint_container_byte_round_trip_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = CheckpointContainer::new(serde_json::json!({"kind": "test"}));
    let mut rng = Rng::seed_from_u64(5);
    let mut t = coughgan::nn::Tensor::zeros(&[7, 3]);
    for v in t.data_mut() {
        *v = rng.uniform_in(-1e6, 1e6);
    }
    c.push("x", t);
    let path = dir.path().join("x.acgn");
    c.save(&path).unwrap();
    let back = CheckpointContainer::load(&path).unwrap();
    assert_eq!(back, c);
    back.save(&dir.path().join("y.acgn")).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(dir.path().join("y.acgn")).unwrap()
    );
}

#[test]
fn gan_checkpoints_reload_with_full_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = build_corpus(dir.path(), 6);
    let cfg = PipelineConfig::load(&config_path).unwrap();
    let work = dir.path().join("work");
    cli::cmd_preprocess(&cfg).unwrap();
    cli::cmd_featurize(&cfg).unwrap();
    cli::cmd_train_gan(&cfg).unwrap();

    // generator: unpack, repack, and compare every tensor bit-exactly
    let container = CheckpointContainer::load(&work.join("gan/generator.acgn")).unwrap();
    let (gen, class_names) = cli::commands::unpack_generator(&container).unwrap();
    assert_eq!(class_names, vec!["healthy", "COVID-19"]);
    let mut repacked: Vec<(String, coughgan::nn::Tensor)> = gen
        .named_params()
        .into_iter()
        .map(|(n, t)| (n, t.clone()))
        .chain(gen.named_state().into_iter().map(|(n, t)| (n, t.clone())))
        .collect();
    repacked.sort_by(|a, b| a.0.cmp(&b.0));
    let mut original: Vec<(String, coughgan::nn::Tensor)> = container.entries.clone();
    original.sort_by(|a, b| a.0.cmp(&b.0));
    assert_eq!(repacked, original);

    // discriminator: reloads and produces in-range head outputs
    let container = CheckpointContainer::load(&work.join("gan/discriminator.acgn")).unwrap();
    let mut disc = cli::commands::unpack_discriminator(&container).unwrap();
    let x = coughgan::nn::gaussian_sample(
        &mut Rng::seed_from_u64(4),
        &[2, 1, 128, 24],
        0.0,
        0.2,
    );
    let (v, l, _) = disc
        .forward(&x, coughgan::nn::Mode::Eval, &mut Rng::seed_from_u64(0))
        .unwrap();
    assert!(v.data().iter().all(|&p| p > 0.0 && p < 1.0));
    assert!(l.data().iter().all(|&p| p > 0.0 && p < 1.0));
}
