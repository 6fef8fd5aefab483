// conditioning diagnosis: does the label signal flow into the generator?
use coughgan::acgan::*;
use coughgan::dataset::{LabeledSpectrograms, Provenance};
use coughgan::features::UnitSpectrogram;
use coughgan::nn::{gaussian_sample, Mode, Tensor};
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
    let mut set = LabeledSpectrograms::empty(128, 24, vec!["low".into(), "high".into()]);
    for i in 0..per_class * 2 {
        let label = i % 2;
        set.push(&blob(label == 0, &mut rng), label, Provenance::Real).unwrap();
    }
    set
}

// band energy of generated samples per conditioning class
fn band_energy(gen: &mut Generator, class: usize, latent: usize) -> (f64, f64) {
    let mut rng = Rng::seed_from_u64(4242);
    let z = gaussian_sample(&mut rng, &[16, latent], 0.0, 1.0);
    let (imgs, _) = gen
        .forward(&z, &vec![class; 16], Mode::Eval, &mut Rng::seed_from_u64(0))
        .unwrap();
    let mut low = 0.0;
    let mut high = 0.0;
    for b in 0..16 {
        for row in 10..40 {
            for col in 6..18 {
                low += imgs.data()[b * 3072 + row * 24 + col] + 0.9;
            }
        }
        for row in 80..110 {
            for col in 6..18 {
                high += imgs.data()[b * 3072 + row * 24 + col] + 0.9;
            }
        }
    }
    (low / 16.0, high / 16.0)
}

fn main() {
    let data = blob_set(400, 1);
    let cfg = GanConfig {
        latent_dim: 32,
        epochs: 40,
        batch_size: 64,
        disc_base_filters: 2,
        gen_base_maps: 16,
        seed: 7,
        ..Default::default()
    };
    // manual loop so we can peek between epochs
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let mut gen = build_generator(&cfg, &mut rng).unwrap();
    let mut disc = build_discriminator(&cfg, &mut rng).unwrap();
    let mut gen_opt = coughgan::nn::AdamState::new(coughgan::nn::AdamConfig {
        lr: cfg.gen_lr, beta1: cfg.gen_beta1, beta2: cfg.gen_beta2, epsilon: 1e-8, weight_decay: 0.0,
    });
    let mut disc_opt = coughgan::nn::AdamState::new(coughgan::nn::AdamConfig {
        lr: cfg.disc_lr, beta1: cfg.disc_beta1, beta2: cfg.disc_beta2, epsilon: 1e-8, weight_decay: 0.0,
    });
    let mut indices: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut indices);
        for chunk in indices.chunks(cfg.batch_size) {
            let real = data.batch_tensor(chunk);
            let labels = data.batch_labels(chunk);
            discriminator_step(&mut disc, &mut disc_opt, &mut gen, &real, &labels, epoch, &cfg, &mut rng).unwrap();
            generator_step(&mut gen, &mut gen_opt, &mut disc, chunk.len(), epoch, &cfg, &mut rng).unwrap();
        }
        if epoch % 10 == 9 {
            let (l0, h0) = band_energy(&mut gen, 0, cfg.latent_dim);
            let (l1, h1) = band_energy(&mut gen, 1, cfg.latent_dim);
            // embedding separation
            let emb = gen.label_params.0[0].weight.as_ref().unwrap();
            let dim = emb.shape()[1];
            let dist: f64 = (0..dim)
                .map(|d| (emb.data()[d] - emb.data()[dim + d]).powi(2))
                .sum::<f64>()
                .sqrt();
            // D label-head response to fakes of each class
            let z = gaussian_sample(&mut Rng::seed_from_u64(1), &[16, cfg.latent_dim], 0.0, 1.0);
            let mut dl = vec![];
            for c in 0..2 {
                let (f, _) = gen.forward(&z, &vec![c; 16], Mode::Eval, &mut Rng::seed_from_u64(0)).unwrap();
                let (_, l, _) = disc.forward(&f, Mode::Eval, &mut Rng::seed_from_u64(0)).unwrap();
                let m0: f64 = (0..16).map(|b| l.data()[b * 2]).sum::<f64>() / 16.0;
                let m1: f64 = (0..16).map(|b| l.data()[b * 2 + 1]).sum::<f64>() / 16.0;
                dl.push((m0, m1));
            }
            println!(
                "epoch {epoch}: cond0 low/high {l0:.1}/{h0:.1}  cond1 {l1:.1}/{h1:.1}  emb_dist {dist:.4}  D(label|fake0)=({:.2},{:.2}) D(label|fake1)=({:.2},{:.2})",
                dl[0].0, dl[0].1, dl[1].0, dl[1].1
            );
        }
    }
    let _ = Tensor::zeros(&[1]);
}
