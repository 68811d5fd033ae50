//! Residual CNN: stem conv → residual block → pool → conv → pool → dense.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ops::{
    conv3x3_backward, conv3x3_forward, dense_backward, dense_forward, maxpool2_backward,
    maxpool2_forward, relu_backward, relu_in_place, softmax,
};
use super::{ClassifierError, Tensor};
use crate::rng::Stream;

const MAGIC: &[u8; 4] = b"TIDM";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Side of the square single-channel input; a multiple of 4.
    pub input_size: usize,
    pub num_classes: usize,
    pub stem_channels: usize,
    pub head_channels: usize,
    /// Scale each input to zero mean and unit variance before the stem.
    pub standardize: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_size: 64,
            num_classes: 10,
            stem_channels: 8,
            head_channels: 16,
            standardize: true,
        }
    }
}

impl ModelConfig {
    pub fn new(input_size: usize, num_classes: usize) -> Self {
        Self {
            input_size,
            num_classes,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.num_classes < 2 {
            return Err(ClassifierError::InvalidConfig(format!(
                "need at least 2 classes, got {}",
                self.num_classes
            )));
        }
        if self.input_size < 4 || !self.input_size.is_multiple_of(4) {
            return Err(ClassifierError::InvalidConfig(format!(
                "input size {} must be a positive multiple of 4",
                self.input_size
            )));
        }
        if self.stem_channels == 0 || self.head_channels == 0 {
            return Err(ClassifierError::InvalidConfig("empty conv layer".into()));
        }
        Ok(())
    }

    fn fc_inputs(&self) -> usize {
        let q = self.input_size / 4;
        self.head_channels * q * q
    }

    fn shapes(&self) -> [Vec<usize>; 10] {
        let (s, h, k) = (self.stem_channels, self.head_channels, self.num_classes);
        [
            vec![s, 1, 3, 3],
            vec![s],
            vec![s, s, 3, 3],
            vec![s],
            vec![s, s, 3, 3],
            vec![s],
            vec![h, s, 3, 3],
            vec![h],
            vec![k, self.fc_inputs()],
            vec![k],
        ]
    }
}

pub const PARAM_NAMES: [&str; 10] = [
    "stem.weight",
    "stem.bias",
    "block.conv1.weight",
    "block.conv1.bias",
    "block.conv2.weight",
    "block.conv2.bias",
    "head.weight",
    "head.bias",
    "fc.weight",
    "fc.bias",
];

/// Model parameters in [`PARAM_NAMES`] order. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub config: ModelConfig,
    pub params: Vec<Tensor>,
}

pub type Gradients = ClassifierModel;

/// Activations of one sample, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct SampleCache {
    pub input: Vec<f64>,
    stem: Vec<f64>,
    conv1: Vec<f64>,
    block: Vec<f64>,
    pool1: Vec<f64>,
    pool1_idx: Vec<u32>,
    head: Vec<f64>,
    pool2: Vec<f64>,
    pool2_idx: Vec<u32>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl SampleCache {
    /// Stem output after ReLU, the residual block's input.
    pub fn stem_activations(&self) -> &[f64] {
        &self.stem
    }

    /// Residual block output after ReLU.
    pub fn block_activations(&self) -> &[f64] {
        &self.block
    }
}

/// Batched forward results.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// `(n, num_classes)`.
    pub logits: Tensor,
    pub probs: Tensor,
    pub cache: Vec<SampleCache>,
}

impl ClassifierModel {
    pub fn zeros(config: ModelConfig) -> Result<Self, ClassifierError> {
        config.validate()?;
        Ok(Self {
            config,
            params: config.shapes().iter().map(|s| Tensor::zeros(s)).collect(),
        })
    }

    /// Uniform weights in `±sqrt(6 / fan_in)` drawn in parameter order from
    /// one stream; biases start at zero.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, ClassifierError> {
        let mut m = Self::zeros(config)?;
        let mut rng = Stream::new(seed);
        for t in m.params.iter_mut().step_by(2) {
            let fan_in: usize = t.shape()[1..].iter().product();
            let bound = (6.0 / fan_in as f64).sqrt();
            t.data_mut()
                .iter_mut()
                .for_each(|v| *v = rng.uniform(-bound, bound));
        }
        Ok(m)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config).expect("config already validated")
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn fill(&mut self, v: f64) {
        self.params.iter_mut().for_each(|t| t.fill(v));
    }

    /// `self += a·other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (t, o) in self.params.iter_mut().zip(&other.params) {
            t.data_mut()
                .iter_mut()
                .zip(o.data())
                .for_each(|(x, y)| *x += a * y);
        }
    }

    pub fn scale(&mut self, a: f64) {
        for t in &mut self.params {
            t.data_mut().iter_mut().for_each(|x| *x *= a);
        }
    }

    pub fn norm(&self) -> f64 {
        self.params
            .iter()
            .flat_map(|t| t.data())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    fn p(&self, i: usize) -> &[f64] {
        self.params[i].data()
    }

    /// Forward pass for one image given as `input_size²` row-major values.
    pub fn forward_sample(&self, image: &[f64]) -> Result<SampleCache, ClassifierError> {
        let cfg = &self.config;
        let n = cfg.input_size;
        if image.len() != n * n {
            return Err(ClassifierError::Shape(format!(
                "input has {} values, model expects {n}×{n}",
                image.len()
            )));
        }
        let input = if cfg.standardize {
            standardize(image)
        } else {
            image.to_vec()
        };
        let (s, h) = (cfg.stem_channels, cfg.head_channels);
        let hw = n * n;
        let mut cols = Vec::new();

        let mut stem = vec![0.0; s * hw];
        conv3x3_forward(&input, 1, n, n, self.p(0), self.p(1), s, &mut stem, &mut cols);
        relu_in_place(&mut stem);

        let mut conv1 = vec![0.0; s * hw];
        conv3x3_forward(&stem, s, n, n, self.p(2), self.p(3), s, &mut conv1, &mut cols);
        relu_in_place(&mut conv1);

        let mut block = vec![0.0; s * hw];
        conv3x3_forward(&conv1, s, n, n, self.p(4), self.p(5), s, &mut block, &mut cols);
        block.iter_mut().zip(&stem).for_each(|(b, x)| *b += x);
        relu_in_place(&mut block);

        let n2 = n / 2;
        let mut pool1 = vec![0.0; s * n2 * n2];
        let mut pool1_idx = vec![0u32; pool1.len()];
        maxpool2_forward(&block, s, n, n, &mut pool1, &mut pool1_idx);

        let mut head = vec![0.0; h * n2 * n2];
        conv3x3_forward(&pool1, s, n2, n2, self.p(6), self.p(7), h, &mut head, &mut cols);
        relu_in_place(&mut head);

        let n4 = n / 4;
        let mut pool2 = vec![0.0; h * n4 * n4];
        let mut pool2_idx = vec![0u32; pool2.len()];
        maxpool2_forward(&head, h, n2, n2, &mut pool2, &mut pool2_idx);

        let mut logits = vec![0.0; cfg.num_classes];
        dense_forward(&pool2, self.p(8), self.p(9), &mut logits);
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::NonFinite {
                stage: "logits".into(),
                index: logits.iter().position(|v| !v.is_finite()).unwrap_or(0),
            });
        }
        let probs = softmax(&logits);
        Ok(SampleCache {
            input,
            stem,
            conv1,
            block,
            pool1,
            pool1_idx,
            head,
            pool2,
            pool2_idx,
            logits,
            probs,
        })
    }

    /// Accumulate `scale · ∂CE(label)/∂θ` for one cached sample into `grads`.
    pub fn backward_sample(&self, cache: &SampleCache, label: usize, scale: f64, grads: &mut Gradients) {
        let cfg = &self.config;
        let (s, h) = (cfg.stem_channels, cfg.head_channels);
        let (n, n2) = (cfg.input_size, cfg.input_size / 2);
        let mut cols = Vec::new();
        let g = &mut grads.params;

        let dlogits: Vec<f64> = cache
            .probs
            .iter()
            .enumerate()
            .map(|(k, p)| scale * (p - if k == label { 1.0 } else { 0.0 }))
            .collect();

        let mut dpool2 = vec![0.0; cache.pool2.len()];
        {
            let (gw, gb) = two_mut(g, 8, 9);
            dense_backward(&cache.pool2, self.p(8), &dlogits, gw, gb, &mut dpool2);
        }

        let mut dhead = vec![0.0; cache.head.len()];
        maxpool2_backward(&dpool2, &cache.pool2_idx, &mut dhead);
        relu_backward(&cache.head, &mut dhead);

        let mut dpool1 = vec![0.0; cache.pool1.len()];
        {
            let (gw, gb) = two_mut(g, 6, 7);
            conv3x3_backward(&cache.pool1, s, n2, n2, self.p(6), h, &dhead, gw, gb, Some(&mut dpool1), &mut cols);
        }

        let mut dblock = vec![0.0; cache.block.len()];
        maxpool2_backward(&dpool1, &cache.pool1_idx, &mut dblock);
        relu_backward(&cache.block, &mut dblock);

        let mut dconv1 = vec![0.0; cache.conv1.len()];
        {
            let (gw, gb) = two_mut(g, 4, 5);
            conv3x3_backward(&cache.conv1, s, n, n, self.p(4), s, &dblock, gw, gb, Some(&mut dconv1), &mut cols);
        }
        relu_backward(&cache.conv1, &mut dconv1);

        let mut dstem = vec![0.0; cache.stem.len()];
        {
            let (gw, gb) = two_mut(g, 2, 3);
            conv3x3_backward(&cache.stem, s, n, n, self.p(2), s, &dconv1, gw, gb, Some(&mut dstem), &mut cols);
        }
        dstem.iter_mut().zip(&dblock).for_each(|(d, skip)| *d += skip);
        relu_backward(&cache.stem, &mut dstem);

        let (gw, gb) = two_mut(g, 0, 1);
        conv3x3_backward(&cache.input, 1, n, n, self.p(0), s, &dstem, gw, gb, None, &mut cols);
    }

    /// Forward a batch `(n, 1, S, S)`.
    pub fn forward(&self, batch: &Tensor) -> Result<ForwardOutput, ClassifierError> {
        let size = self.config.input_size;
        let shape = batch.shape();
        if shape.len() != 4 || shape[1] != 1 || shape[2] != size || shape[3] != size {
            return Err(ClassifierError::Shape(format!(
                "batch shape {shape:?}, expected (n, 1, {size}, {size})"
            )));
        }
        batch.ensure_finite("input")?;
        let per = size * size;
        let cache: Vec<SampleCache> = batch
            .data()
            .chunks_exact(per)
            .map(|x| self.forward_sample(x))
            .collect::<Result<_, _>>()?;
        let k = self.config.num_classes;
        let logits = cache.iter().flat_map(|c| c.logits.iter().copied()).collect();
        let probs = cache.iter().flat_map(|c| c.probs.iter().copied()).collect();
        Ok(ForwardOutput {
            logits: Tensor::new(vec![cache.len(), k], logits)?,
            probs: Tensor::new(vec![cache.len(), k], probs)?,
            cache,
        })
    }

    /// Gradients of the mean cross-entropy over the batch.
    pub fn backward(&self, out: &ForwardOutput, labels: &[usize]) -> Result<Gradients, ClassifierError> {
        if labels.len() != out.cache.len() {
            return Err(ClassifierError::Shape(format!(
                "{} labels for {} samples",
                labels.len(),
                out.cache.len()
            )));
        }
        let mut grads = self.zeros_like();
        let scale = 1.0 / labels.len().max(1) as f64;
        for (c, &y) in out.cache.iter().zip(labels) {
            self.check_label(y)?;
            self.backward_sample(c, y, scale, &mut grads);
        }
        Ok(grads)
    }

    fn check_label(&self, y: usize) -> Result<(), ClassifierError> {
        if y >= self.config.num_classes {
            return Err(ClassifierError::Shape(format!(
                "label {y} out of range for {} classes",
                self.config.num_classes
            )));
        }
        Ok(())
    }

    /// Mean cross-entropy and its gradient over `(image, label)` pairs,
    /// without keeping every activation alive at once.
    pub fn loss_and_gradients(
        &self,
        images: &[&[f64]],
        labels: &[usize],
        grads: &mut Gradients,
    ) -> Result<(f64, usize), ClassifierError> {
        grads.fill(0.0);
        let scale = 1.0 / images.len().max(1) as f64;
        let mut loss = 0.0;
        let mut correct = 0;
        for (x, &y) in images.iter().zip(labels) {
            self.check_label(y)?;
            let c = self.forward_sample(x)?;
            loss += cross_entropy(&c.probs, y);
            if argmax(&c.probs) == y {
                correct += 1;
            }
            self.backward_sample(&c, y, scale, grads);
        }
        Ok((loss * scale, correct))
    }

    pub fn predict(&self, image: &[f64]) -> Result<usize, ClassifierError> {
        Ok(argmax(&self.forward_sample(image)?.probs))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), ClassifierError> {
        let c = &self.config;
        w.write_all(MAGIC)?;
        for v in [
            FORMAT_VERSION,
            c.input_size as u32,
            c.num_classes as u32,
            c.stem_channels as u32,
            c.head_channels as u32,
            c.standardize as u32,
            self.params.len() as u32,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for t in &self.params {
            w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
            for &d in t.shape() {
                w.write_all(&(d as u32).to_le_bytes())?;
            }
        }
        for t in &self.params {
            for v in t.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, ClassifierError> {
        let bad = |m: &str| ClassifierError::Format(m.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut u32s = |n: usize| -> Result<Vec<u32>, ClassifierError> {
            let mut buf = vec![0u8; 4 * n];
            r.read_exact(&mut buf)?;
            Ok(buf
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect())
        };
        let head = u32s(7)?;
        if head[0] != FORMAT_VERSION {
            return Err(bad("unsupported version"));
        }
        let config = ModelConfig {
            input_size: head[1] as usize,
            num_classes: head[2] as usize,
            stem_channels: head[3] as usize,
            head_channels: head[4] as usize,
            standardize: head[5] != 0,
        };
        config.validate()?;
        let expected = config.shapes();
        if head[6] as usize != expected.len() {
            return Err(bad("wrong tensor count"));
        }
        for want in &expected {
            let rank = u32s(1)?[0] as usize;
            let dims: Vec<usize> = u32s(rank)?.into_iter().map(|d| d as usize).collect();
            if &dims != want {
                return Err(bad("tensor shape does not match config"));
            }
        }
        let mut params = Vec::with_capacity(expected.len());
        for shape in expected {
            let n: usize = shape.iter().product();
            let mut buf = vec![0u8; 8 * n];
            r.read_exact(&mut buf)?;
            let data = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            params.push(Tensor::new(shape, data)?);
        }
        Ok(Self { config, params })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        out
    }
}

fn two_mut(v: &mut [Tensor], a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(a < b);
    let (lo, hi) = v.split_at_mut(b);
    (lo[a].data_mut(), hi[0].data_mut())
}

fn standardize(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var.sqrt() + 1e-6);
    x.iter().map(|v| (v - mean) * inv).collect()
}

pub fn cross_entropy(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(1e-300).ln()
}

/// Index of the largest value; the first wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
