// probe: time ACGAN epochs at candidate smoke widths and watch dynamics
use coughgan::acgan::*;
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
    for (bf, gm, latent, epochs) in [(2usize, 32usize, 64usize, 8usize), (4, 64, 64, 4)] {
        let cfg = GanConfig {
            latent_dim: latent,
            epochs,
            batch_size: 64,
            disc_base_filters: bf,
            gen_base_maps: gm,
            seed: 5,
            ..Default::default()
        };
        let t = std::time::Instant::now();
        let out = train_acgan(&data, &cfg, None).unwrap();
        let el = t.elapsed().as_secs_f64();
        let last = out.history.records.last().unwrap();
        println!(
            "bf={bf} gm={gm}: {:.2} s/epoch (total {el:.1} s) p_real={:.3} p_fake={:.3} acc={:.3}",
            el / epochs as f64, last.p_real, last.p_fake, last.real_class_acc
        );
    }
}
