use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    accumulate_conv1d_backward, conv1d_forward, global_maxpool_forward, maxpool_forward,
    pool_backward, sigmoid,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::text::{EncodedText, PAD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arch {
    /// Multilabel tagger, one sigmoid output per tag.
    #[serde(rename = "modelA")]
    ModelA { num_tags: usize },
    /// Binary topic detector, a single sigmoid output.
    #[serde(rename = "modelB")]
    ModelB,
}

impl Arch {
    pub fn name(&self) -> &'static str {
        match self {
            Arch::ModelA { .. } => "modelA",
            Arch::ModelB => "modelB",
        }
    }

    pub fn output_width(&self) -> usize {
        match self {
            Arch::ModelA { num_tags } => *num_tags,
            Arch::ModelB => 1,
        }
    }
}

/// Widths of the convolutional stack. `kernels` has one entry per convolution
/// (two for model A, four for model B).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub embed_dim: usize,
    pub channels: usize,
    pub kernels: Vec<usize>,
    pub pool_width: usize,
}

impl ArchConfig {
    pub fn default_for(arch: Arch) -> Self {
        match arch {
            Arch::ModelA { .. } => Self {
                embed_dim: 32,
                channels: 64,
                kernels: vec![3, 4],
                pool_width: 2,
            },
            Arch::ModelB => Self {
                embed_dim: 32,
                channels: 64,
                kernels: vec![3, 3, 3, 3],
                pool_width: 2,
            },
        }
    }

    fn layer_specs(&self, arch: Arch, vocab_size: usize) -> Result<Vec<LayerSpec>> {
        let want = match arch {
            Arch::ModelA { .. } => 2,
            Arch::ModelB => 4,
        };
        if self.kernels.len() != want {
            return Err(Error::Config(format!(
                "{} needs {want} kernel sizes, got {}",
                arch.name(),
                self.kernels.len()
            )));
        }
        let conv = |i: usize, in_channels: usize| LayerSpec::Conv1d {
            in_channels,
            out_channels: self.channels,
            kernel: self.kernels[i],
            relu: true,
        };
        let mut specs = vec![LayerSpec::Embedding {
            vocab_size,
            dim: self.embed_dim,
        }];
        match arch {
            Arch::ModelA { .. } => {
                specs.push(conv(0, self.embed_dim));
                specs.push(conv(1, self.channels));
            }
            Arch::ModelB => {
                let pool = LayerSpec::MaxPool {
                    width: self.pool_width,
                };
                specs.push(conv(0, self.embed_dim));
                specs.push(pool.clone());
                specs.push(conv(1, self.channels));
                specs.push(conv(2, self.channels));
                specs.push(pool);
                specs.push(conv(3, self.channels));
            }
        }
        specs.push(LayerSpec::GlobalMaxPool);
        specs.push(LayerSpec::Dense {
            inputs: self.channels,
            outputs: arch.output_width(),
        });
        specs.push(LayerSpec::Sigmoid);
        Ok(specs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Embedding {
        vocab_size: usize,
        dim: usize,
    },
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        relu: bool,
    },
    #[serde(rename = "maxpool")]
    MaxPool {
        width: usize,
    },
    #[serde(rename = "global_maxpool")]
    GlobalMaxPool,
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Sigmoid,
}

impl LayerSpec {
    /// Shapes of the trainable tensors, weights first then bias.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Embedding { vocab_size, dim } => vec![vec![vocab_size, dim]],
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => vec![vec![out_channels, in_channels, kernel], vec![out_channels]],
            LayerSpec::Dense { inputs, outputs } => vec![vec![outputs, inputs], vec![outputs]],
            LayerSpec::MaxPool { .. } | LayerSpec::GlobalMaxPool | LayerSpec::Sigmoid => vec![],
        }
    }

    fn fans(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Embedding { vocab_size, dim } => (vocab_size, dim),
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => (in_channels * kernel, out_channels * kernel),
            LayerSpec::Dense { inputs, outputs } => (inputs, outputs),
            _ => (0, 0),
        }
    }
}

/// Checks the stack: one leading embedding, matching channel counts, a global
/// pool feeding exactly one dense layer, and a final sigmoid.
pub(crate) fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    let bad = |msg: String| Err(Error::Shape(msg));
    let Some(LayerSpec::Embedding { vocab_size, dim }) = specs.first() else {
        return bad("first layer must be an embedding".into());
    };
    if *vocab_size < 2 || *dim == 0 {
        return bad(format!("embedding {vocab_size}x{dim} is too small"));
    }
    if !matches!(specs.last(), Some(LayerSpec::Sigmoid)) || specs.len() < 4 {
        return bad("last layer must be a sigmoid".into());
    }
    let n = specs.len();
    if !matches!(specs[n - 2], LayerSpec::Dense { .. }) || !matches!(specs[n - 3], LayerSpec::GlobalMaxPool) {
        return bad("head must be global_maxpool → dense → sigmoid".into());
    }
    let mut channels = *dim;
    for (i, spec) in specs.iter().enumerate().skip(1) {
        match *spec {
            LayerSpec::Embedding { .. } => return bad(format!("layer {i}: extra embedding")),
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => {
                if in_channels != channels || out_channels == 0 || kernel == 0 {
                    return bad(format!(
                        "layer {i}: conv1d {in_channels}->{out_channels} k={kernel} after {channels} channels"
                    ));
                }
                channels = out_channels;
            }
            LayerSpec::MaxPool { width: 0 } => return bad(format!("layer {i}: pool width 0")),
            LayerSpec::Dense { inputs, outputs } => {
                if i != n - 2 || inputs != channels || outputs == 0 {
                    return bad(format!("layer {i}: dense {inputs}->{outputs} after {channels} channels"));
                }
            }
            LayerSpec::Sigmoid if i != n - 1 => return bad(format!("layer {i}: sigmoid before the head")),
            LayerSpec::GlobalMaxPool if i != n - 3 => return bad(format!("layer {i}: misplaced global pool")),
            _ => {}
        }
    }
    Ok(())
}

/// A dense real tensor, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            values: vec![0.0; n],
        }
    }
}

/// Same layout as [`Network::params`].
pub type Gradients = Vec<Vec<Tensor>>;

static NEXT_GENERATION: AtomicU64 = AtomicU64::new(1);

fn next_generation() -> u64 {
    NEXT_GENERATION.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone)]
pub struct Network {
    arch: Arch,
    specs: Vec<LayerSpec>,
    params: Vec<Vec<Tensor>>,
    seed: u64,
    /// Changes whenever parameters may have changed; ties caches to parameters.
    generation: u64,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.arch == other.arch
            && self.specs == other.specs
            && self.params == other.params
            && self.seed == other.seed
    }
}

pub fn init_network(arch: Arch, vocab_size: usize, seed: u64) -> Result<Network> {
    init_network_with(arch, &ArchConfig::default_for(arch), vocab_size, seed)
}

/// Builds the topology for `arch` and draws every weight tensor from
/// `U(−√(6/(fan_in+fan_out)), +√(6/(fan_in+fan_out)))`; biases start at zero.
pub fn init_network_with(arch: Arch, cfg: &ArchConfig, vocab_size: usize, seed: u64) -> Result<Network> {
    if vocab_size < 2 {
        return Err(Error::Config(format!("vocab_size {vocab_size} must be at least 2")));
    }
    if arch.output_width() == 0 {
        return Err(Error::Config("num_tags must be at least 1".into()));
    }
    if cfg.embed_dim == 0 || cfg.channels == 0 || cfg.pool_width == 0 || cfg.kernels.contains(&0) {
        return Err(Error::Config(format!("architecture sizes must be positive: {cfg:?}")));
    }
    let specs = cfg.layer_specs(arch, vocab_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = specs
        .iter()
        .map(|spec| {
            let (fan_in, fan_out) = spec.fans();
            spec.param_shapes()
                .into_iter()
                .enumerate()
                .map(|(k, shape)| {
                    let mut t = Tensor::zeros(shape);
                    if k == 0 {
                        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                        for v in &mut t.values {
                            *v = rng.gen_range(-limit..=limit);
                        }
                    }
                    t
                })
                .collect()
        })
        .collect();
    Network::from_parts(arch, specs, params, seed)
}

/// Intermediate activations of one forward pass, consumed by [`Network::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    samples: Vec<SampleCache>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.samples.len()
    }
}

#[derive(Debug, Clone)]
struct SampleCache {
    ids: Vec<usize>,
    /// `acts[i]` is the output of layer `i`.
    acts: Vec<Matrix>,
    /// Pool source indices, empty for other layers.
    argmax: Vec<Vec<usize>>,
}

impl SampleCache {
    fn probs(&self) -> &[f64] {
        self.acts.last().expect("non-empty stack").as_slice()
    }
}

impl Network {
    pub(crate) fn from_parts(
        arch: Arch,
        specs: Vec<LayerSpec>,
        params: Vec<Vec<Tensor>>,
        seed: u64,
    ) -> Result<Self> {
        validate_specs(&specs)?;
        if params.len() != specs.len() {
            return Err(Error::Shape(format!("{} parameter groups for {} layers", params.len(), specs.len())));
        }
        for (i, (spec, group)) in specs.iter().zip(&params).enumerate() {
            let shapes = spec.param_shapes();
            if shapes.len() != group.len() {
                return Err(Error::Shape(format!("layer {i}: expected {} tensors", shapes.len())));
            }
            for (shape, t) in shapes.iter().zip(group) {
                if *shape != t.shape || t.values.len() != shape.iter().product::<usize>() {
                    return Err(Error::Shape(format!("layer {i}: tensor shape {:?} != {shape:?}", t.shape)));
                }
                if t.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Numeric(format!("layer {i}: non-finite parameter")));
                }
            }
        }
        let width = match specs[specs.len() - 2] {
            LayerSpec::Dense { outputs, .. } => outputs,
            _ => unreachable!("validated head"),
        };
        if width != arch.output_width() {
            return Err(Error::Shape(format!("{} head has width {width}", arch.name())));
        }
        Ok(Self {
            arch,
            specs,
            params,
            seed,
            generation: next_generation(),
        })
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn params(&self) -> &[Vec<Tensor>] {
        &self.params
    }

    /// Mutable parameter access; invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [Vec<Tensor>] {
        self.generation = next_generation();
        &mut self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vocab_size(&self) -> usize {
        match self.specs[0] {
            LayerSpec::Embedding { vocab_size, .. } => vocab_size,
            _ => unreachable!("validated stack"),
        }
    }

    pub fn output_width(&self) -> usize {
        self.arch.output_width()
    }

    pub fn num_params(&self) -> usize {
        self.params.iter().flatten().map(|t| t.values.len()).sum()
    }

    pub fn zero_gradients(&self) -> Gradients {
        self.params
            .iter()
            .map(|g| g.iter().map(|t| Tensor::zeros(t.shape.clone())).collect())
            .collect()
    }

    /// Shortest input the valid convolutions and pools can process. Shorter
    /// inputs are right-padded with PAD before the forward pass.
    pub fn min_input_len(&self) -> usize {
        let mut need = 1;
        for spec in self.specs.iter().rev() {
            match *spec {
                LayerSpec::Conv1d { kernel, .. } => need += kernel - 1,
                LayerSpec::MaxPool { width } => need *= width,
                _ => {}
            }
        }
        need
    }

    fn forward_sample(&self, ids: &[usize]) -> Result<SampleCache> {
        let vocab = self.vocab_size();
        if let Some(bad) = ids.iter().find(|&&id| id >= vocab) {
            return Err(Error::Input(format!("token id {bad} outside vocabulary of {vocab}")));
        }
        let mut ids = ids.to_vec();
        let min_len = self.min_input_len();
        if ids.len() < min_len {
            ids.resize(min_len, PAD);
        }

        let mut acts: Vec<Matrix> = Vec::with_capacity(self.specs.len());
        let mut argmax: Vec<Vec<usize>> = Vec::with_capacity(self.specs.len());
        for (i, spec) in self.specs.iter().enumerate() {
            let p = &self.params[i];
            let (out, arg) = match *spec {
                LayerSpec::Embedding { dim, .. } => {
                    let table = &p[0].values;
                    let mut m = Matrix::zeros(dim, ids.len());
                    for (t, &id) in ids.iter().enumerate() {
                        for c in 0..dim {
                            m[(c, t)] = table[id * dim + c];
                        }
                    }
                    (m, vec![])
                }
                LayerSpec::Conv1d {
                    out_channels,
                    kernel,
                    relu,
                    ..
                } => {
                    let mut m = conv1d_forward(&acts[i - 1], &p[0].values, &p[1].values, out_channels, kernel)?;
                    if relu {
                        for v in m.as_mut_slice() {
                            *v = v.max(0.0);
                        }
                    }
                    (m, vec![])
                }
                LayerSpec::MaxPool { width } => maxpool_forward(&acts[i - 1], width),
                LayerSpec::GlobalMaxPool => global_maxpool_forward(&acts[i - 1]),
                LayerSpec::Dense { inputs, outputs } => {
                    let x = acts[i - 1].as_slice();
                    let w = &p[0].values;
                    let mut m = Matrix::zeros(outputs, 1);
                    for o in 0..outputs {
                        m[(o, 0)] = p[1].values[o] + crate::linalg::dot(&w[o * inputs..(o + 1) * inputs], x);
                    }
                    (m, vec![])
                }
                LayerSpec::Sigmoid => {
                    let mut m = acts[i - 1].clone();
                    for v in m.as_mut_slice() {
                        *v = sigmoid(*v);
                    }
                    (m, vec![])
                }
            };
            acts.push(out);
            argmax.push(arg);
        }
        Ok(SampleCache { ids, acts, argmax })
    }

    /// Runs the batch and keeps every intermediate for [`Network::backward`].
    /// Returns `[batch × output_width]` probabilities.
    pub fn forward(&self, batch: &[EncodedText]) -> Result<(Vec<Vec<f64>>, ForwardCache)> {
        let samples = batch
            .iter()
            .map(|e| self.forward_sample(&e.ids))
            .collect::<Result<Vec<_>>>()?;
        let probs = samples.iter().map(|s| s.probs().to_vec()).collect();
        Ok((
            probs,
            ForwardCache {
                generation: self.generation,
                samples,
            },
        ))
    }

    /// Probabilities for a single encoded input.
    pub fn predict(&self, input: &EncodedText) -> Result<Vec<f64>> {
        Ok(self.forward_sample(&input.ids)?.probs().to_vec())
    }

    /// Analytic gradient of the mean binary cross-entropy over all
    /// `batch × output_width` entries.
    pub fn backward(&self, cache: &ForwardCache, labels: &[Vec<f64>]) -> Result<Gradients> {
        if cache.generation != self.generation {
            return Err(Error::Input("forward cache is stale: parameters changed since the forward pass".into()));
        }
        let width = self.output_width();
        if labels.len() != cache.samples.len() || labels.iter().any(|l| l.len() != width) {
            return Err(Error::Shape(format!(
                "labels must be {}x{width}",
                cache.samples.len()
            )));
        }
        let n_entries = (cache.samples.len() * width) as f64;
        let mut grads = self.zero_gradients();
        for (sample, label) in cache.samples.iter().zip(labels) {
            let g: Vec<f64> = sample
                .probs()
                .iter()
                .zip(label)
                .map(|(p, y)| (p - y) / n_entries)
                .collect();
            self.backward_sample(sample, Matrix::from_vec(width, 1, g)?, &mut grads);
        }
        Ok(grads)
    }

    /// `grad` is the derivative with respect to the dense layer's output (logits).
    fn backward_sample(&self, sample: &SampleCache, mut grad: Matrix, grads: &mut Gradients) {
        let dense_idx = self.specs.len() - 2;
        for i in (0..=dense_idx).rev() {
            let p = &self.params[i];
            match self.specs[i] {
                LayerSpec::Dense { inputs, outputs } => {
                    let x = sample.acts[i - 1].as_slice();
                    let w = &p[0].values;
                    let mut gx = vec![0.0; inputs];
                    for o in 0..outputs {
                        let go = grad[(o, 0)];
                        grads[i][1].values[o] += go;
                        let gw = &mut grads[i][0].values[o * inputs..(o + 1) * inputs];
                        for ((gwv, xv), (gxv, wv)) in gw.iter_mut().zip(x).zip(gx.iter_mut().zip(&w[o * inputs..])) {
                            *gwv += go * xv;
                            *gxv += go * wv;
                        }
                    }
                    grad = Matrix::from_vec(inputs, 1, gx).expect("sized");
                }
                LayerSpec::GlobalMaxPool | LayerSpec::MaxPool { .. } => {
                    grad = pool_backward(&grad, &sample.argmax[i], sample.acts[i - 1].cols());
                }
                LayerSpec::Conv1d { kernel, relu, .. } => {
                    if relu {
                        for (g, out) in grad.as_mut_slice().iter_mut().zip(sample.acts[i].as_slice()) {
                            if *out <= 0.0 {
                                *g = 0.0;
                            }
                        }
                    }
                    let input = &sample.acts[i - 1];
                    let mut gin = Matrix::zeros(input.rows(), input.cols());
                    let (gk, gb) = split_pair(&mut grads[i]);
                    accumulate_conv1d_backward(input, &p[0].values, &grad, kernel, &mut gk.values, &mut gb.values, Some(&mut gin));
                    grad = gin;
                }
                LayerSpec::Embedding { dim, .. } => {
                    let ge = &mut grads[i][0].values;
                    for (t, &id) in sample.ids.iter().enumerate() {
                        for c in 0..dim {
                            ge[id * dim + c] += grad[(c, t)];
                        }
                    }
                }
                LayerSpec::Sigmoid => unreachable!("head handled by caller"),
            }
        }
    }
}

fn split_pair(group: &mut [Tensor]) -> (&mut Tensor, &mut Tensor) {
    let (a, b) = group.split_at_mut(1);
    (&mut a[0], &mut b[0])
}
