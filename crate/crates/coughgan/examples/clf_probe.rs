// quick probe: dump the val-accuracy trajectory for a few settings
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
    for (per_class, bs, bf, ep) in [(80usize, 8usize, 2usize, 30usize), (40, 4, 2, 30), (80, 8, 1, 30)] {
        let train = blob_set(per_class, 10);
        let val = blob_set(per_class / 5, 11);
        let cfg = ClassifierConfig { epochs: ep, batch_size: bs, base_filters: bf, seed: 12, ..Default::default() };
        let t = std::time::Instant::now();
        let out = train_classifier(&train, &val, &cfg).unwrap();
        let accs: Vec<String> = out.history.records.iter().map(|r| format!("{:.2}", r.val_acc)).collect();
        println!("n={per_class}/class bs={bs} bf={bf}: ({:?})\n  val_acc {}", t.elapsed(), accs.join(" "));
    }
}
