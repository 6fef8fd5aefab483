// full criterion-6-style run: 400/class, 200 epochs, probe classifier agreement
use coughgan::acgan::*;
use coughgan::classifier::*;
use coughgan::dataset::{LabeledSpectrograms, Provenance};
use coughgan::features::UnitSpectrogram;
use coughgan::rng::Rng;

fn blob(low: bool, rng: &mut Rng) -> UnitSpectrogram {
    let mut values = vec![-0.9; 128 * 24];
    let band = if low { 10..40 } else { 80..110 };
    for row in band {
        for col in 6..18 {
            values[row * 24 + col] = rng.uniform_in(0.3, 0.9);
        }
    }
    UnitSpectrogram { values, n_mels: 128, n_frames: 24 }
}

fn blob_set(per_class: usize, seed: u64) -> LabeledSpectrograms {
    let mut rng = Rng::seed_from_u64(seed);
    let mut set = LabeledSpectrograms::empty(128, 24, vec!["healthy".into(), "COVID-19".into()]);
    for i in 0..per_class * 2 {
        let label = i % 2;
        set.push(&blob(label == 0, &mut rng), label, Provenance::Real).unwrap();
    }
    set
}

fn main() {
    let data = blob_set(400, 1);
    let cfg = GanConfig {
        latent_dim: 32,
        epochs: 200,
        batch_size: 64,
        disc_base_filters: 2,
        gen_base_maps: 16,
        seed: 7,
        ..Default::default()
    };
    let t = std::time::Instant::now();
    let out = train_acgan(&data, &cfg, None).unwrap();
    let gan_secs = t.elapsed().as_secs_f64();
    let last = out.history.records.last().unwrap();
    println!(
        "GAN: {gan_secs:.0} s total ({:.2} s/epoch) p_real={:.3} p_fake={:.3} class_acc={:.3}",
        gan_secs / 200.0, last.p_real, last.p_fake, last.real_class_acc
    );

    // probe classifier trained on the real data
    let probe_cfg = ClassifierConfig {
        epochs: 20,
        batch_size: 16,
        base_filters: 2,
        seed: 9,
        ..Default::default()
    };
    let val = blob_set(40, 2);
    let probe = train_classifier(&data, &val, &probe_cfg).unwrap();
    let probe_acc = probe.history.records.last().unwrap().val_acc;
    println!("probe classifier val acc {probe_acc:.3}");

    // agreement of synthesized samples with their conditioning class
    let mut gen = out.generator;
    let mut agree = 0usize;
    let mut probe_model = probe.final_model;
    for class in 0..2 {
        let samples = synthesize(&mut gen, class, 100, 77).unwrap();
        let mut set = LabeledSpectrograms::empty(128, 24, vec!["healthy".into(), "COVID-19".into()]);
        for s in &samples {
            set.push(s, class, Provenance::Synthetic).unwrap();
        }
        let m = evaluate(&mut probe_model, &set).unwrap();
        agree += (m.accuracy * 100.0).round() as usize;
        println!("class {class}: agreement {:.3}", m.accuracy);
    }
    println!("total agreement {}/200, p_real>p_fake: {}", agree, last.p_real > last.p_fake);
}
