//! Multinomial logistic regression and its mini-batch SGD trainer.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::datagen::{ClientShard, Sample};
use crate::error::{Error, Result};

/// Weights of a `classes`-way linear classifier over `dim` features.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    classes: usize,
    dim: usize,
    /// Row-major `classes × dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl ModelWeights {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            classes,
            dim,
            weights: vec![0.0; classes * dim],
            bias: vec![0.0; classes],
        }
    }

    pub fn from_parts(
        classes: usize,
        dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if weights.len() != classes * dim {
            return Err(Error::DimensionMismatch {
                expected: classes * dim,
                found: weights.len(),
            });
        }
        if bias.len() != classes {
            return Err(Error::DimensionMismatch {
                expected: classes,
                found: bias.len(),
            });
        }
        Ok(Self {
            classes,
            dim,
            weights,
            bias,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Total number of parameters (`classes * dim + classes`).
    pub fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All parameters, weights first then bias.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.bias)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    pub fn same_shape(&self, other: &ModelWeights) -> bool {
        self.classes == other.classes && self.dim == other.dim
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &ModelWeights, scale: f64) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.params_mut().zip(other.params()) {
            *a += scale * b;
        }
    }

    fn check_sample(&self, sample: &Sample) -> Result<()> {
        if sample.features.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: sample.features.len(),
            });
        }
        if sample.label >= self.classes {
            return Err(Error::DimensionMismatch {
                expected: self.classes,
                found: sample.label + 1,
            });
        }
        Ok(())
    }

    /// Writes `W x + b` into `out`.
    pub fn logits_into(&self, x: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            let row = &self.weights[c * self.dim..(c + 1) * self.dim];
            *o = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.bias[c];
        }
    }

    /// Most likely class; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut logits = vec![0.0; self.classes];
        self.logits_into(x, &mut logits);
        argmax(&logits)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Replaces logits with softmax probabilities and returns `log Σ exp(logits)`.
fn softmax_in_place(logits: &mut [f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        sum += *z;
    }
    for z in logits.iter_mut() {
        *z /= sum;
    }
    max + sum.ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 10,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "batch_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Mean cross-entropy and top-1 accuracy of `w` on `data`.
pub fn loss_and_accuracy(w: &ModelWeights, data: &[Sample]) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut logits = vec![0.0; w.classes];
    let mut loss = 0.0;
    let mut correct = 0usize;
    for s in data {
        w.check_sample(s)?;
        w.logits_into(&s.features, &mut logits);
        if argmax(&logits) == s.label {
            correct += 1;
        }
        let true_logit = logits[s.label];
        let log_norm = softmax_in_place(&mut logits);
        loss += log_norm - true_logit;
    }
    let n = data.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Gradient of the mean cross-entropy over `batch`, shaped like the weights.
pub fn gradient(w: &ModelWeights, batch: &[Sample]) -> Result<ModelWeights> {
    let refs: Vec<&Sample> = batch.iter().collect();
    gradient_of(w, &refs)
}

fn gradient_of(w: &ModelWeights, batch: &[&Sample]) -> Result<ModelWeights> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut grad = ModelWeights::zeros(w.classes, w.dim);
    let mut probs = vec![0.0; w.classes];
    for s in batch {
        w.check_sample(s)?;
        w.logits_into(&s.features, &mut probs);
        softmax_in_place(&mut probs);
        probs[s.label] -= 1.0;
        for (c, &delta) in probs.iter().enumerate() {
            let row = &mut grad.weights[c * w.dim..(c + 1) * w.dim];
            for (g, x) in row.iter_mut().zip(&s.features) {
                *g += delta * x;
            }
            grad.bias[c] += delta;
        }
    }
    let inv = 1.0 / batch.len() as f64;
    grad.params_mut().for_each(|g| *g *= inv);
    Ok(grad)
}

/// Number of SGD iterations for `epochs` local epochs over `n` samples:
/// `floor(epochs)` full passes plus `round(frac(epochs) · ceil(n / B))` batches.
pub fn iteration_count(epochs: f64, n: usize, batch_size: usize) -> usize {
    let per_epoch = n.div_ceil(batch_size);
    let full = epochs.floor();
    let extra = ((epochs - full) * per_epoch as f64).round() as usize;
    full as usize * per_epoch + extra
}

#[derive(Debug, Clone)]
pub struct LocalTrainOutput {
    pub weights: ModelWeights,
    /// Mean training loss of the weights that were sent to the client.
    pub pre_training_loss: f64,
    pub iterations: usize,
}

/// Runs mini-batch SGD for a (possibly fractional) number of epochs.
///
/// Each pass reshuffles the training set with `rng`; the fractional tail runs the
/// first batches of one more shuffled pass.
pub fn local_train<R: Rng + ?Sized>(
    w: &ModelWeights,
    shard: &ClientShard,
    epochs: f64,
    cfg: &TrainingConfig,
    rng: &mut R,
) -> Result<LocalTrainOutput> {
    if !(epochs >= 0.0 && epochs.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epochs must be finite and non-negative, got {epochs}"
        )));
    }
    cfg.validate()?;
    let data = &shard.train;
    let (pre_training_loss, _) = loss_and_accuracy(w, data)?;

    let n = data.len();
    let total = iteration_count(epochs, n, cfg.batch_size);
    let mut current = w.clone();
    let mut order: Vec<usize> = (0..n).collect();
    let mut done = 0;
    while done < total {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.batch_size) {
            if done == total {
                break;
            }
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &data[i]).collect();
            let grad = gradient_of(&current, &batch)?;
            current.add_scaled(&grad, -cfg.learning_rate);
            done += 1;
        }
    }
    Ok(LocalTrainOutput {
        weights: current,
        pre_training_loss,
        iterations: done,
    })
}
