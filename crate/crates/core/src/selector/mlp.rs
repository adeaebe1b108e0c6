//! Fully connected ReLU network with a softmax output, trained with Adam on
//! L2-regularized cross-entropy.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derived_rng;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden_layers: Vec<usize>,
    pub l2_alpha: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub validation_fraction: f64,
    pub n_iter_no_change: usize,
    pub tol: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_layers: vec![50, 50],
            l2_alpha: 0.05,
            learning_rate: 0.001,
            max_epochs: 5000,
            batch_size: 200,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            validation_fraction: 0.1,
            n_iter_no_change: 10,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `fan_in x fan_out`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<Layer>,
    pub config: MlpConfig,
    /// Mean training objective after every minibatch step.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_curve: Vec<f64>,
    #[serde(default)]
    pub epochs_run: usize,
}

/// Row-wise softmax, numerically shifted.
pub fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
}

fn one_hot(y: &[usize], n_classes: usize) -> Array2<f64> {
    let mut out = Array2::zeros((y.len(), n_classes));
    for (i, &c) in y.iter().enumerate() {
        out[[i, c]] = 1.0;
    }
    out
}

impl MlpModel {
    /// All-zero weights; every input maps to the uniform distribution.
    pub fn zeros(layer_sizes: &[usize]) -> Self {
        let layers = layer_sizes
            .windows(2)
            .map(|w| Layer {
                weights: Array2::zeros((w[0], w[1])),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        MlpModel {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            config: MlpConfig::default(),
            loss_curve: Vec::new(),
            epochs_run: 0,
        }
    }

    /// Glorot-uniform weights: `U(-r, r)`, `r = sqrt(6 / (fan_in + fan_out))`;
    /// zero biases.
    pub fn initialized(layer_sizes: &[usize], config: MlpConfig, seed: u64) -> Self {
        let mut rng = derived_rng(seed, "mlp_init", &[]);
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Layer {
                    weights: Array2::from_shape_fn((w[0], w[1]), |_| rng.gen_range(-bound..bound)),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        MlpModel {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            config,
            loss_curve: Vec::new(),
            epochs_run: 0,
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn check_shapes(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 || self.layers.len() != self.layer_sizes.len() - 1 {
            return Err(Error::shape("layer list does not match layer sizes"));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let want = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            if layer.weights.dim() != want || layer.bias.len() != want.1 {
                return Err(Error::shape(format!(
                    "layer {l} has weights {:?} and bias {}, expected {want:?}",
                    layer.weights.dim(),
                    layer.bias.len()
                )));
            }
        }
        Ok(())
    }

    /// Activations of every layer, input first; the last entry holds the
    /// softmax probabilities.
    fn forward_all(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts = vec![x.to_owned()];
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = acts[l].dot(&layer.weights) + &layer.bias;
            if l + 1 == self.layers.len() {
                softmax_rows(&mut z);
            } else {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_inputs() {
            return Err(Error::shape(format!(
                "model expects {} inputs, got {}",
                self.n_inputs(),
                x.ncols()
            )));
        }
        Ok(self.forward_all(x).pop().unwrap())
    }

    /// Most probable class per row, earliest class on ties.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<(Vec<usize>, Array2<f64>)> {
        let proba = self.predict_proba(x)?;
        let labels = proba
            .rows()
            .into_iter()
            .map(|r| {
                let mut best = 0;
                for (j, &p) in r.iter().enumerate() {
                    if p > r[best] {
                        best = j;
                    }
                }
                best
            })
            .collect();
        Ok((labels, proba))
    }

    fn l2_norm_sq(&self) -> f64 {
        self.layers.iter().map(|l| l.weights.iter().map(|w| w * w).sum::<f64>()).sum()
    }

    /// Mean cross-entropy without the penalty.
    pub fn cross_entropy(&self, x: ArrayView2<f64>, y: &[usize]) -> f64 {
        let proba = self.forward_all(x).pop().unwrap();
        let n = y.len().max(1) as f64;
        y.iter()
            .enumerate()
            .map(|(i, &c)| -proba[[i, c]].max(1e-300).ln())
            .sum::<f64>()
            / n
    }

    /// Objective `(sum_i CE_i + alpha / 2 * sum ||W||^2) / n` and its gradient
    /// per layer as `(dW, db)`.
    pub fn loss_and_gradients(&self, x: ArrayView2<f64>, y: &[usize]) -> (f64, Vec<(Array2<f64>, Array1<f64>)>) {
        let n = x.nrows() as f64;
        let alpha = self.config.l2_alpha;
        let acts = self.forward_all(x);
        let proba = acts.last().unwrap();
        let targets = one_hot(y, self.n_outputs());
        let ce: f64 = y
            .iter()
            .enumerate()
            .map(|(i, &c)| -proba[[i, c]].max(1e-300).ln())
            .sum();
        let loss = (ce + 0.5 * alpha * self.l2_norm_sq()) / n;

        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = (proba - &targets) / n;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let dw = acts[l].t().dot(&delta) + &(&layer.weights * (alpha / n));
            let db = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&layer.weights.t());
                ndarray::Zip::from(&mut back)
                    .and(&acts[l])
                    .for_each(|d, &a| {
                        if a <= 0.0 {
                            *d = 0.0;
                        }
                    });
                delta = back;
            }
            grads.push((dw, db));
        }
        grads.reverse();
        (loss, grads)
    }

    /// Flattened parameters, layer by layer, weights (row-major) then bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let mut it = params.iter();
        for l in &mut self.layers {
            for w in l.weights.iter_mut() {
                *w = *it.next().expect("parameter count");
            }
            for b in l.bias.iter_mut() {
                *b = *it.next().expect("parameter count");
            }
        }
    }
}

fn check_training_data(x: ArrayView2<f64>, y: &[usize], n_classes: usize) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::shape(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("MLP training data contains non-finite values"));
    }
    if let Some(&c) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::arg(format!("label {c} outside {n_classes} classes")));
    }
    let mut seen = vec![false; n_classes];
    y.iter().for_each(|&c| seen[c] = true);
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::arg("MLP training needs at least two classes"));
    }
    Ok(())
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

/// Trains a network with `config.hidden_layers` between the input width and
/// `n_classes` softmax outputs. Minibatch Adam; a seeded validation split
/// drives early stopping and the best-validation weights are kept.
pub fn mlp_train(x: ArrayView2<f64>, y: &[usize], n_classes: usize, config: &MlpConfig, seed: u64) -> Result<MlpModel> {
    check_training_data(x, y, n_classes)?;
    if config.batch_size == 0 || config.max_epochs == 0 {
        return Err(Error::arg("batch_size and max_epochs must be positive"));
    }
    let mut sizes = vec![x.ncols()];
    sizes.extend(&config.hidden_layers);
    sizes.push(n_classes);
    let mut model = MlpModel::initialized(&sizes, config.clone(), seed);

    let n = x.nrows();
    let mut rng = derived_rng(seed, "mlp_train", &[]);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_val = if config.validation_fraction > 0.0 && n >= 10 {
        ((config.validation_fraction * n as f64).ceil() as usize).min(n - 1)
    } else {
        0
    };
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    let x_val = x.select(Axis(0), val_idx);
    let y_val: Vec<usize> = val_idx.iter().map(|&i| y[i]).collect();

    let n_params = model.parameters().len();
    let mut adam = Adam {
        m: vec![0.0; n_params],
        v: vec![0.0; n_params],
        t: 0,
    };
    let batch = config.batch_size.min(train_idx.len());
    let mut best_loss = f64::INFINITY;
    let mut best_params = model.parameters();
    let mut stale = 0;
    let mut loss_curve = Vec::new();
    let mut epochs_run = 0;

    for _epoch in 0..config.max_epochs {
        epochs_run += 1;
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in train_idx.chunks(batch) {
            let xb = x.select(Axis(0), chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| y[i]).collect();
            let (loss, grads) = model.loss_and_gradients(xb.view(), &yb);
            if !loss.is_finite() {
                return Err(Error::arg("MLP loss became non-finite"));
            }
            loss_curve.push(loss);
            epoch_loss += loss * chunk.len() as f64;
            let flat: Vec<f64> = grads
                .iter()
                .flat_map(|(w, b)| w.iter().chain(b.iter()).copied().collect::<Vec<_>>())
                .collect();
            adam.t += 1;
            let lr_t = config.learning_rate * (1.0 - config.beta2.powi(adam.t)).sqrt() / (1.0 - config.beta1.powi(adam.t));
            let mut params = model.parameters();
            for i in 0..n_params {
                adam.m[i] = config.beta1 * adam.m[i] + (1.0 - config.beta1) * flat[i];
                adam.v[i] = config.beta2 * adam.v[i] + (1.0 - config.beta2) * flat[i] * flat[i];
                params[i] -= lr_t * adam.m[i] / (adam.v[i].sqrt() + config.epsilon);
            }
            model.set_parameters(&params);
        }
        let monitored = if n_val > 0 {
            model.cross_entropy(x_val.view(), &y_val)
        } else {
            epoch_loss / train_idx.len() as f64
        };
        if monitored > best_loss - config.tol {
            stale += 1;
        } else {
            stale = 0;
        }
        if monitored < best_loss {
            best_loss = monitored;
            best_params = model.parameters();
        }
        if stale >= config.n_iter_no_change {
            break;
        }
    }
    model.set_parameters(&best_params);
    model.loss_curve = loss_curve;
    model.epochs_run = epochs_run;
    Ok(model)
}

pub fn mlp_predict(model: &MlpModel, x: ArrayView2<f64>) -> Result<(Vec<usize>, Array2<f64>)> {
    model.predict(x)
}
