// one-off: run a single tiny config epoch loop for profiling
use coughgan::acgan::*;
use coughgan::dataset::{LabeledSpectrograms, Provenance};
use coughgan::features::UnitSpectrogram;
use coughgan::rng::Rng;

fn main() {
    let mut rng = Rng::seed_from_u64(1);
    let mut set = LabeledSpectrograms::empty(128, 24, vec!["a".into(), "b".into()]);
    for i in 0..800 {
        let mut values = vec![-0.9; 128 * 24];
        let band = if i % 2 == 0 { 10..40 } else { 80..110 };
        for row in band {
            for col in 6..18 {
                values[row * 24 + col] = rng.uniform_in(0.3, 0.9);
            }
        }
        set.push(
            &UnitSpectrogram { values, n_mels: 128, n_frames: 24 },
            i % 2,
            Provenance::Real,
        )
        .unwrap();
    }
    let cfg = GanConfig {
        latent_dim: 64,
        epochs: 3,
        batch_size: 64,
        disc_base_filters: 2,
        gen_base_maps: 32,
        seed: 5,
        ..Default::default()
    };
    let t = std::time::Instant::now();
    let out = train_acgan(&set, &cfg, None).unwrap();
    println!("{:.2} s/epoch, p_real {:.3}", t.elapsed().as_secs_f64() / 3.0, out.history.records.last().unwrap().p_real);
}
