// long-run conditioning trajectory for candidate smoke configs
use coughgan::acgan::*;
use coughgan::dataset::{LabeledSpectrograms, Provenance};
use coughgan::features::UnitSpectrogram;
use coughgan::nn::{gaussian_sample, AdamConfig, AdamState, Mode};
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

// fraction of generated samples whose conditioned band carries more energy
fn agreement(gen: &mut Generator, latent: usize, n: usize) -> f64 {
    let mut hits = 0usize;
    for class in 0..2usize {
        let mut rng = Rng::seed_from_u64(999 + class as u64);
        let z = gaussian_sample(&mut rng, &[n, latent], 0.0, 1.0);
        let (imgs, _) = gen
            .forward(&z, &vec![class; n], Mode::Eval, &mut Rng::seed_from_u64(0))
            .unwrap();
        for b in 0..n {
            let mut low = 0.0;
            let mut high = 0.0;
            for row in 10..40 {
                for col in 6..18 {
                    low += imgs.data()[b * 3072 + row * 24 + col];
                }
            }
            for row in 80..110 {
                for col in 6..18 {
                    high += imgs.data()[b * 3072 + row * 24 + col];
                }
            }
            let predicted = usize::from(high > low);
            if predicted == class {
                hits += 1;
            }
        }
    }
    hits as f64 / (2 * n) as f64
}

fn run(name: &str, cfg: &GanConfig, data: &LabeledSpectrograms) {
    let t = std::time::Instant::now();
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let mut gen = build_generator(cfg, &mut rng).unwrap();
    let mut disc = build_discriminator(cfg, &mut rng).unwrap();
    let mut gen_opt = AdamState::new(AdamConfig {
        lr: cfg.gen_lr, beta1: cfg.gen_beta1, beta2: cfg.gen_beta2, epsilon: 1e-8, weight_decay: 0.0,
    });
    let mut disc_opt = AdamState::new(AdamConfig {
        lr: cfg.disc_lr, beta1: cfg.disc_beta1, beta2: cfg.disc_beta2, epsilon: 1e-8, weight_decay: 0.0,
    });
    let mut indices: Vec<usize> = (0..data.len()).collect();
    let mut last = (0.0, 0.0);
    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut indices);
        let mut pr = 0.0;
        let mut pf = 0.0;
        let mut n = 0.0;
        for chunk in indices.chunks(cfg.batch_size) {
            let real = data.batch_tensor(chunk);
            let labels = data.batch_labels(chunk);
            let s = discriminator_step(&mut disc, &mut disc_opt, &mut gen, &real, &labels, epoch, cfg, &mut rng).unwrap();
            generator_step(&mut gen, &mut gen_opt, &mut disc, chunk.len(), epoch, cfg, &mut rng).unwrap();
            pr += s.p_real * chunk.len() as f64;
            pf += s.p_fake * chunk.len() as f64;
            n += chunk.len() as f64;
        }
        last = (pr / n, pf / n);
        if epoch % 10 == 9 || epoch == cfg.epochs - 1 {
            println!(
                "{name} epoch {epoch}: agreement {:.3} p_real {:.3} p_fake {:.3} ({:.1} s/epoch)",
                agreement(&mut gen, cfg.latent_dim, 50),
                last.0,
                last.1,
                t.elapsed().as_secs_f64() / (epoch + 1) as f64
            );
        }
    }
    println!(
        "{name}: total {:.0} s, final agreement {:.3}, p_real>p_fake {}",
        t.elapsed().as_secs_f64(),
        agreement(&mut gen, cfg.latent_dim, 100),
        last.0 > last.1
    );
}

fn main() {
    let data = blob_set(400, 1);
    let base = GanConfig {
        latent_dim: 32,
        epochs: 200,
        batch_size: 64,
        disc_base_filters: 2,
        gen_base_maps: 16,
        seed: 7,
        ..Default::default()
    };
    let s1 = GanConfig { label_head_softmax: true, ..base.clone() };
    run("S1(gm16,softmax)", &s1, &data);
    let s2 = GanConfig { label_head_softmax: true, disc_base_filters: 4, ..base.clone() };
    run("S2(softmax,bf4)", &s2, &data);
}
