//! Generator and discriminator architectures.

use crate::error::{Error, Result};
use crate::nn::{
    concat_channels, split_channels, LayerCache, LayerSpec, Mode, Stack, StackGrads, StackParams,
    Tensor,
};
use crate::rng::Rng;

use super::GanConfig;

/// Spectrogram shape the models are built around (mel bands x frames).
pub const SPEC_ROWS: usize = 128;
pub const SPEC_COLS: usize = 24;
/// Seed map size before the three stride-2 upsampling stages.
pub const BASE_ROWS: usize = SPEC_ROWS / 8;
pub const BASE_COLS: usize = SPEC_COLS / 8;

fn conv_block(in_ch: usize, out_ch: usize, stride: usize, with_bn: bool) -> Vec<LayerSpec> {
    let mut block = vec![LayerSpec::Conv2d {
        in_ch,
        out_ch,
        kernel: (3, 3),
        stride: (stride, stride),
        padding: (1, 1),
    }];
    if with_bn {
        block.push(LayerSpec::BatchNorm {
            channels: out_ch,
            epsilon: 1e-5,
            momentum: 0.99,
        });
    }
    block.push(LayerSpec::LeakyRelu { alpha: 0.2 });
    block.push(LayerSpec::Dropout { rate: 0.5 });
    block
}

/// Per-stage (channels, height, width) of the trunk on a SPEC_ROWS x
/// SPEC_COLS input, from the pad-1 floor-divide convention.
pub fn trunk_stage_shapes(base_filters: usize) -> Vec<(usize, usize, usize)> {
    let mut shapes = Vec::with_capacity(5);
    let (mut h, mut w) = (SPEC_ROWS, SPEC_COLS);
    for i in 0..5 {
        let stride = if i == 0 { 1 } else { 2 };
        h = (h + 2 - 3) / stride + 1;
        w = (w + 2 - 3) / stride + 1;
        shapes.push((base_filters << i, h, w));
    }
    shapes
}

/// The five-stage convolutional trunk shared by the discriminator and the
/// classifier: 3x3 kernels, stride 1 then four stride-2 halvings, batch norm,
/// LeakyReLU(0.2), 50% dropout. Returns the stack and its flattened width.
pub fn conv_trunk(base_filters: usize, skip_first_batchnorm: bool) -> (Stack, usize) {
    let mut layers = Vec::new();
    let mut in_ch = 1;
    for (i, &(f, _, _)) in trunk_stage_shapes(base_filters).iter().enumerate() {
        let stride = if i == 0 { 1 } else { 2 };
        let with_bn = !(i == 0 && skip_first_batchnorm);
        layers.extend(conv_block(in_ch, f, stride, with_bn));
        in_ch = f;
    }
    layers.push(LayerSpec::Flatten);
    let (f, h, w) = *trunk_stage_shapes(base_filters).last().unwrap();
    let flat = f * h * w;
    (Stack::new(layers).expect("trunk layers are valid"), flat)
}

#[derive(Clone)]
pub struct Discriminator {
    pub trunk: Stack,
    pub validity_head: Stack,
    pub label_head: Stack,
    pub trunk_params: StackParams,
    pub validity_params: StackParams,
    pub label_params: StackParams,
    pub n_classes: usize,
}

pub struct DiscCaches {
    trunk: Vec<LayerCache>,
    validity: Vec<LayerCache>,
    label: Vec<LayerCache>,
}

#[derive(Debug, Clone)]
pub struct DiscGrads {
    pub trunk: StackGrads,
    pub validity: StackGrads,
    pub label: StackGrads,
}

pub fn build_discriminator(cfg: &GanConfig, rng: &mut Rng) -> Result<Discriminator> {
    cfg.validate()?;
    let (trunk, flat) = conv_trunk(cfg.disc_base_filters, cfg.skip_first_batchnorm);
    let validity_head = Stack::new(vec![
        LayerSpec::Dense {
            in_features: flat,
            out_features: 1,
        },
        LayerSpec::Sigmoid,
    ])?;
    let label_activation = if cfg.label_head_softmax {
        LayerSpec::Softmax
    } else {
        LayerSpec::Sigmoid
    };
    let label_head = Stack::new(vec![
        LayerSpec::Dense {
            in_features: flat,
            out_features: cfg.n_classes,
        },
        label_activation,
    ])?;
    let trunk_params = trunk.init(rng);
    let validity_params = validity_head.init(rng);
    let label_params = label_head.init(rng);
    Ok(Discriminator {
        trunk,
        validity_head,
        label_head,
        trunk_params,
        validity_params,
        label_params,
        n_classes: cfg.n_classes,
    })
}

impl Discriminator {
    /// Returns (validity in (0,1), per-class label scores, caches).
    pub fn forward(
        &mut self,
        input: &Tensor,
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<(Tensor, Tensor, DiscCaches)> {
        let (flat, trunk_caches) = self.trunk.forward(&mut self.trunk_params, input, mode, rng)?;
        let (validity, validity_caches) =
            self.validity_head
                .forward(&mut self.validity_params, &flat, mode, rng)?;
        let (label, label_caches) =
            self.label_head
                .forward(&mut self.label_params, &flat, mode, rng)?;
        Ok((
            validity,
            label,
            DiscCaches {
                trunk: trunk_caches,
                validity: validity_caches,
                label: label_caches,
            },
        ))
    }

    /// Backward through both heads and the trunk; returns the gradient with
    /// respect to the input image (the composite model needs it).
    pub fn backward(
        &self,
        caches: &DiscCaches,
        grad_validity: &Tensor,
        grad_label: &Tensor,
    ) -> Result<(Tensor, DiscGrads)> {
        let (gv, validity_grads) =
            self.validity_head
                .backward(&self.validity_params, &caches.validity, grad_validity)?;
        let (gl, label_grads) =
            self.label_head
                .backward(&self.label_params, &caches.label, grad_label)?;
        let grad_flat = gv.add(&gl)?;
        let (grad_input, trunk_grads) =
            self.trunk
                .backward(&self.trunk_params, &caches.trunk, &grad_flat)?;
        Ok((
            grad_input,
            DiscGrads {
                trunk: trunk_grads,
                validity: validity_grads,
                label: label_grads,
            },
        ))
    }

    /// Gradient with respect to the input image only; the discriminator's
    /// own parameters get no gradients (the composite model freezes them).
    pub fn backward_input_only(
        &self,
        caches: &DiscCaches,
        grad_validity: &Tensor,
        grad_label: &Tensor,
    ) -> Result<Tensor> {
        let gv =
            self.validity_head
                .backward_input_only(&self.validity_params, &caches.validity, grad_validity)?;
        let gl = self
            .label_head
            .backward_input_only(&self.label_params, &caches.label, grad_label)?;
        let grad_flat = gv.add(&gl)?;
        self.trunk
            .backward_input_only(&self.trunk_params, &caches.trunk, &grad_flat)
    }

    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        let mut out = self.trunk_params.named("disc.trunk");
        out.extend(self.validity_params.named("disc.validity"));
        out.extend(self.label_params.named("disc.label"));
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = self.trunk_params.named_mut("disc.trunk");
        out.extend(self.validity_params.named_mut("disc.validity"));
        out.extend(self.label_params.named_mut("disc.label"));
        out
    }

    pub fn named_state(&self) -> Vec<(String, &Tensor)> {
        self.trunk_params.named_state("disc.trunk")
    }

    pub fn assign(&mut self, name: &str, value: Tensor) -> Result<()> {
        if name.starts_with("disc.trunk.") {
            self.trunk_params.assign("disc.trunk", name, value)
        } else if name.starts_with("disc.validity.") {
            self.validity_params.assign("disc.validity", name, value)
        } else if name.starts_with("disc.label.") {
            self.label_params.assign("disc.label", name, value)
        } else {
            Err(Error::Contract(format!("unknown discriminator tensor {name}")))
        }
    }

    pub fn grads_map(&self, grads: &DiscGrads) -> std::collections::BTreeMap<String, Tensor> {
        let mut map = std::collections::BTreeMap::new();
        for (name, t) in grads.trunk.named("disc.trunk") {
            map.insert(name, t.clone());
        }
        for (name, t) in grads.validity.named("disc.validity") {
            map.insert(name, t.clone());
        }
        for (name, t) in grads.label.named("disc.label") {
            map.insert(name, t.clone());
        }
        map
    }
}

#[derive(Clone)]
pub struct Generator {
    pub noise_branch: Stack,
    pub label_branch: Stack,
    pub trunk: Stack,
    pub noise_params: StackParams,
    pub label_params: StackParams,
    pub trunk_params: StackParams,
    pub latent_dim: usize,
    pub n_classes: usize,
    pub noise_maps: usize,
}

pub struct GenCaches {
    noise: Vec<LayerCache>,
    label: Vec<LayerCache>,
    trunk: Vec<LayerCache>,
}

#[derive(Debug, Clone)]
pub struct GenGrads {
    pub noise: StackGrads,
    pub label: StackGrads,
    pub trunk: StackGrads,
}

fn deconv_block(in_ch: usize, out_ch: usize, with_bn_relu: bool) -> Vec<LayerSpec> {
    let mut block = vec![LayerSpec::ConvTranspose2d {
        in_ch,
        out_ch,
        kernel: (4, 4),
        stride: (2, 2),
        padding: (1, 1),
    }];
    if with_bn_relu {
        block.push(LayerSpec::BatchNorm {
            channels: out_ch,
            epsilon: 1e-5,
            momentum: 0.99,
        });
        block.push(LayerSpec::Relu);
    }
    block
}

pub fn build_generator(cfg: &GanConfig, rng: &mut Rng) -> Result<Generator> {
    cfg.validate()?;
    let g = cfg.gen_base_maps;
    let seed_pixels = BASE_ROWS * BASE_COLS;
    let noise_branch = Stack::new(vec![
        LayerSpec::Dense {
            in_features: cfg.latent_dim,
            out_features: g * seed_pixels,
        },
        LayerSpec::Relu,
        LayerSpec::Reshape {
            shape: vec![g, BASE_ROWS, BASE_COLS],
        },
    ])?;
    // learned embedding, then a linear map to one extra feature map
    let label_branch = Stack::new(vec![
        LayerSpec::Embedding {
            num_classes: cfg.n_classes,
            dim: cfg.embedding_dim,
        },
        LayerSpec::Dense {
            in_features: cfg.embedding_dim,
            out_features: seed_pixels,
        },
        LayerSpec::Reshape {
            shape: vec![1, BASE_ROWS, BASE_COLS],
        },
    ])?;
    let mut trunk_layers = Vec::new();
    trunk_layers.extend(deconv_block(g + 1, g / 2, true));
    trunk_layers.extend(deconv_block(g / 2, g / 4, true));
    trunk_layers.extend(deconv_block(g / 4, 1, false));
    trunk_layers.push(LayerSpec::Tanh);
    let trunk = Stack::new(trunk_layers)?;

    let noise_params = noise_branch.init(rng);
    let label_params = label_branch.init(rng);
    let trunk_params = trunk.init(rng);
    Ok(Generator {
        noise_branch,
        label_branch,
        trunk,
        noise_params,
        label_params,
        trunk_params,
        latent_dim: cfg.latent_dim,
        n_classes: cfg.n_classes,
        noise_maps: g,
    })
}

impl Generator {
    /// Maps latent vectors plus class labels to spectrograms in [-1, 1].
    pub fn forward(
        &mut self,
        z: &Tensor,
        labels: &[usize],
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<(Tensor, GenCaches)> {
        let (batch, latent) = z.dims2("generator latent input")?;
        if latent != self.latent_dim || batch != labels.len() {
            return Err(Error::Shape {
                expected: vec![labels.len(), self.latent_dim],
                got: z.shape().to_vec(),
                context: "generator latent batch".into(),
            });
        }
        for &l in labels {
            if l >= self.n_classes {
                return Err(Error::Domain(format!(
                    "class label {l} out of range for {} classes",
                    self.n_classes
                )));
            }
        }
        let label_tensor = Tensor::from_vec(
            &[batch],
            labels.iter().map(|&l| l as f64).collect(),
        )?;
        let (noise_maps, noise_caches) =
            self.noise_branch
                .forward(&mut self.noise_params, z, mode, rng)?;
        let (label_map, label_caches) =
            self.label_branch
                .forward(&mut self.label_params, &label_tensor, mode, rng)?;
        let seed = concat_channels(&noise_maps, &label_map)?;
        let (out, trunk_caches) = self.trunk.forward(&mut self.trunk_params, &seed, mode, rng)?;
        Ok((
            out,
            GenCaches {
                noise: noise_caches,
                label: label_caches,
                trunk: trunk_caches,
            },
        ))
    }

    pub fn backward(&self, caches: &GenCaches, grad_out: &Tensor) -> Result<GenGrads> {
        let (grad_seed, trunk_grads) =
            self.trunk
                .backward(&self.trunk_params, &caches.trunk, grad_out)?;
        let (grad_noise, grad_label) = split_channels(&grad_seed, self.noise_maps, 1)?;
        let (_, noise_grads) =
            self.noise_branch
                .backward(&self.noise_params, &caches.noise, &grad_noise)?;
        let (_, label_grads) =
            self.label_branch
                .backward(&self.label_params, &caches.label, &grad_label)?;
        Ok(GenGrads {
            noise: noise_grads,
            label: label_grads,
            trunk: trunk_grads,
        })
    }

    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        let mut out = self.noise_params.named("gen.noise");
        out.extend(self.label_params.named("gen.label"));
        out.extend(self.trunk_params.named("gen.trunk"));
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = self.noise_params.named_mut("gen.noise");
        out.extend(self.label_params.named_mut("gen.label"));
        out.extend(self.trunk_params.named_mut("gen.trunk"));
        out
    }

    pub fn named_state(&self) -> Vec<(String, &Tensor)> {
        self.trunk_params.named_state("gen.trunk")
    }

    pub fn assign(&mut self, name: &str, value: Tensor) -> Result<()> {
        if name.starts_with("gen.noise.") {
            self.noise_params.assign("gen.noise", name, value)
        } else if name.starts_with("gen.label.") {
            self.label_params.assign("gen.label", name, value)
        } else if name.starts_with("gen.trunk.") {
            self.trunk_params.assign("gen.trunk", name, value)
        } else {
            Err(Error::Contract(format!("unknown generator tensor {name}")))
        }
    }

    pub fn grads_map(&self, grads: &GenGrads) -> std::collections::BTreeMap<String, Tensor> {
        let mut map = std::collections::BTreeMap::new();
        for (name, t) in grads.noise.named("gen.noise") {
            map.insert(name, t.clone());
        }
        for (name, t) in grads.label.named("gen.label") {
            map.insert(name, t.clone());
        }
        for (name, t) in grads.trunk.named("gen.trunk") {
            map.insert(name, t.clone());
        }
        map
    }
}
