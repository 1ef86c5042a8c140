//! Mini-batch SGD with momentum on softmax cross-entropy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::model::{Activation, DenseLayer, MlpModel};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden_widths: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub init_seed: u64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_widths: vec![64, 64],
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.05,
            momentum: 0.9,
            init_seed: 0,
            shuffle_seed: 1,
        }
    }
}

impl TrainConfig {
    /// Default config with both seeds derived from one model seed, so that
    /// different models differ in initialization and data order.
    pub fn for_seed(seed: u64) -> Self {
        Self {
            init_seed: seed,
            shuffle_seed: seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_widths.is_empty() || self.hidden_widths.contains(&0) {
            return Err(Error::Config("hidden_widths must be a nonempty list of positive widths".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be finite and nonnegative, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        Ok(())
    }
}

/// Loss trajectory recorded during training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    /// Full-dataset loss of the initialization.
    pub initial_loss: f64,
    /// Mean mini-batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// `input_dim → widths (ReLU) → num_classes (identity)`, every parameter
/// drawn uniformly from `[-1/√fan_in, 1/√fan_in]`.
pub fn init_model(input_dim: usize, widths: &[usize], num_classes: usize, seed: u64) -> Result<MlpModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims: Vec<usize> = std::iter::once(input_dim)
        .chain(widths.iter().copied())
        .chain(std::iter::once(num_classes))
        .collect();
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let weights = Matrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-bound..bound));
            let bias = Vector::from_fn(fan_out, |_, _| rng.random_range(-bound..bound));
            let act = if i + 2 == dims.len() { Activation::Identity } else { Activation::Relu };
            DenseLayer::new(weights, bias, act)
        })
        .collect::<Result<Vec<_>>>()?;
    MlpModel::new(layers, input_dim, Some(format!("init{seed}")))
}

pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<MlpModel> {
    train_with_history(ds, cfg).map(|(m, _)| m)
}

pub fn train_with_history(ds: &Dataset, cfg: &TrainConfig) -> Result<(MlpModel, TrainHistory)> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::Config("cannot train on an empty dataset".into()));
    }
    let init = init_model(ds.dim(), &cfg.hidden_widths, ds.num_classes(), cfg.init_seed)?;
    let (initial_loss, _) = cross_entropy_accuracy(&init, ds)?;

    let mut weights: Vec<Matrix> = init.layers().iter().map(|l| l.weights().clone()).collect();
    let mut biases: Vec<Vector> = init.layers().iter().map(|l| l.bias().clone()).collect();
    let mut w_vel: Vec<Matrix> = weights.iter().map(|w| Matrix::zeros(w.nrows(), w.ncols())).collect();
    let mut b_vel: Vec<Vector> = biases.iter().map(|b| Vector::zeros(b.len())).collect();
    let depth = weights.len();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let x = ds.features().select_rows(idx);
            let labels: Vec<usize> = idx.iter().map(|&i| ds.labels()[i]).collect();
            let n = idx.len() as f64;

            // forward, keeping every layer's input and pre-activation
            let mut inputs = Vec::with_capacity(depth);
            let mut pres = Vec::with_capacity(depth);
            let mut a = x;
            for l in 0..depth {
                let mut z = &a * weights[l].transpose();
                add_row_bias(&mut z, &biases[l]);
                let next = if l + 1 < depth { z.map(|v| v.max(0.0)) } else { z.clone() };
                inputs.push(a);
                pres.push(z);
                a = next;
            }

            let (loss, mut delta) = softmax_xent_grad(&a, &labels);
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, batch });
            }
            loss_sum += loss;
            batches += 1;
            delta /= n;

            for l in (0..depth).rev() {
                let grad_w = delta.transpose() * &inputs[l];
                let grad_b = Vector::from_iterator(delta.ncols(), delta.column_iter().map(|c| c.sum()));
                if l > 0 {
                    let mut back = &delta * &weights[l];
                    back.zip_apply(&pres[l - 1], |g, z| {
                        if z <= 0.0 {
                            *g = 0.0;
                        }
                    });
                    delta = back;
                }
                w_vel[l] *= cfg.momentum;
                w_vel[l] += &grad_w;
                b_vel[l] *= cfg.momentum;
                b_vel[l] += &grad_b;
                weights[l] -= &w_vel[l] * cfg.learning_rate;
                biases[l] -= &b_vel[l] * cfg.learning_rate;
            }
        }
        epoch_losses.push(loss_sum / batches as f64);
    }

    let layers = weights
        .into_iter()
        .zip(biases)
        .zip(init.layers())
        .map(|((w, b), l)| DenseLayer::new(w, b, l.activation()))
        .collect::<Result<Vec<_>>>()
        .map_err(|_| Error::TrainingDiverged {
            epoch: cfg.epochs - 1,
            batch: 0,
        })?;
    let tag = format!("init{}-shuffle{}", cfg.init_seed, cfg.shuffle_seed);
    let model = MlpModel::new(layers, ds.dim(), Some(tag))?;
    Ok((
        model,
        TrainHistory {
            initial_loss,
            epoch_losses,
        },
    ))
}

fn add_row_bias(z: &mut Matrix, bias: &Vector) {
    for mut row in z.row_iter_mut() {
        for (v, b) in row.iter_mut().zip(bias.iter()) {
            *v += b;
        }
    }
}

/// Summed cross-entropy over the batch and `softmax - onehot` per row.
fn softmax_xent_grad(logits: &Matrix, labels: &[usize]) -> (f64, Matrix) {
    let mut grad = Matrix::zeros(logits.nrows(), logits.ncols());
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.max();
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        total += log_z - row[y];
        for j in 0..logits.ncols() {
            grad[(i, j)] = (row[j] - log_z).exp();
        }
        grad[(i, y)] -= 1.0;
    }
    (total / labels.len() as f64, grad)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// Mean cross-entropy and accuracy of precomputed logits.
pub fn logits_loss_accuracy(logits: &Matrix, labels: &[usize]) -> (f64, f64) {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.max();
        let log_z = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += log_z - row[y];
        if argmax(row.iter().copied()) == y {
            correct += 1;
        }
    }
    let m = labels.len() as f64;
    (loss / m, correct as f64 / m)
}

pub fn cross_entropy_accuracy(model: &MlpModel, ds: &Dataset) -> Result<(f64, f64)> {
    let logits = model.forward(ds.features())?;
    Ok(logits_loss_accuracy(&logits, ds.labels()))
}
