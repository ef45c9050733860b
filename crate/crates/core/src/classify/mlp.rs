//! Fully connected network trained with softmax cross-entropy.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::standardize::Standardizer;
use crate::dataset::{class_counts, Valence};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, seeded, ChaCha8Rng};
use crate::{math, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => math::tanh(z),
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Optimizer {
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
    Sgd,
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MlpConfig {
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_penalty: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Off unless set.
    pub early_stopping: Option<EarlyStopping>,
}

/// Holds out a fraction of the training rows and keeps the weights with the
/// lowest held-out loss, stopping after `patience` epochs without improvement.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EarlyStopping {
    pub validation_fraction: f64,
    pub patience: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_layers: alloc::vec![64],
            activation: Activation::Relu,
            learning_rate: 1e-3,
            epochs: 500,
            batch_size: 32,
            l2_penalty: 1e-4,
            seed: 0,
            optimizer: Optimizer::default(),
            early_stopping: None,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers.contains(&0) {
            return Err(Error::InvalidConfig("hidden layer widths must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be positive"));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch_size must be at least 1"));
        }
        if !(self.l2_penalty >= 0.0) {
            return Err(Error::InvalidConfig("l2_penalty must be non-negative"));
        }
        if let Some(es) = self.early_stopping {
            if !(es.validation_fraction > 0.0 && es.validation_fraction < 1.0) || es.patience == 0 {
                return Err(Error::InvalidConfig(
                    "early stopping needs 0 < validation_fraction < 1 and patience >= 1",
                ));
            }
        }
        Ok(())
    }
}

/// One affine layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: alloc::vec![0.0; inputs * outputs],
            bias: alloc::vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(w, b)| math::dot(w, x) + b),
        );
    }
}

/// Layers plus the hidden activation; the output layer feeds a softmax.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpNetwork {
    pub layers: Vec<Dense>,
    pub activation: Activation,
}

impl MlpNetwork {
    pub fn zeros(input_dim: usize, hidden: &[usize], classes: usize, activation: Activation) -> Self {
        let mut dims = alloc::vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(classes);
        let layers = dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Self { layers, activation }
    }

    /// Weights drawn as `N(0, 1) / sqrt(fan_in)`, biases zero.
    pub fn init(
        input_dim: usize,
        hidden: &[usize],
        classes: usize,
        activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut net = Self::zeros(input_dim, hidden, classes, activation);
        for layer in &mut net.layers {
            let scale = 1.0 / math::sqrt(layer.inputs as f64);
            for w in &mut layer.weights {
                let z: f64 = StandardNormal.sample(rng);
                *w = z * scale;
            }
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// Post-activation values of every layer; the last entry holds softmax
    /// probabilities.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.forward(&acts[l], &mut z);
            if l == last {
                softmax_in_place(&mut z);
            } else {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            acts.push(z);
        }
        acts
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        self.activations(x).pop().expect("at least one layer")
    }

    fn l2_term(&self, l2: f64) -> f64 {
        0.5 * l2
            * self
                .layers
                .iter()
                .map(|l| math::dot(&l.weights, &l.weights))
                .sum::<f64>()
    }

    /// Mean cross-entropy over `rows` plus `½ l2 Σ W²`.
    pub fn loss(&self, x: &Matrix, targets: &[usize], rows: &[usize], l2: f64) -> f64 {
        let ce: f64 = rows
            .iter()
            .map(|&i| -math::ln(self.probabilities(x.row(i))[targets[i]].max(f64::MIN_POSITIVE)))
            .sum();
        ce / rows.len() as f64 + self.l2_term(l2)
    }

    /// Loss and its gradient with respect to every weight and bias, in the
    /// same shape as `layers`.
    pub fn loss_and_gradient(
        &self,
        x: &Matrix,
        targets: &[usize],
        rows: &[usize],
        l2: f64,
    ) -> (f64, Vec<Dense>) {
        let mut grads: Vec<Dense> = self
            .layers
            .iter()
            .map(|l| Dense::zeros(l.inputs, l.outputs))
            .collect();
        let mut ce = 0.0;
        let mut delta = Vec::new();
        let mut prev = Vec::new();
        for &i in rows {
            let acts = self.activations(x.row(i));
            let probs = acts.last().expect("output layer");
            let t = targets[i];
            ce -= math::ln(probs[t].max(f64::MIN_POSITIVE));
            delta.clear();
            delta.extend_from_slice(probs);
            delta[t] -= 1.0;
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let input = &acts[l];
                let g = &mut grads[l];
                for (o, &d) in delta.iter().enumerate() {
                    if d != 0.0 {
                        let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (gw, &a) in row.iter_mut().zip(input) {
                            *gw += d * a;
                        }
                    }
                    g.bias[o] += d;
                }
                if l > 0 {
                    prev.clear();
                    prev.resize(layer.inputs, 0.0);
                    for (o, &d) in delta.iter().enumerate() {
                        if d != 0.0 {
                            let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                            for (p, &wv) in prev.iter_mut().zip(w) {
                                *p += d * wv;
                            }
                        }
                    }
                    for (p, &a) in prev.iter_mut().zip(input) {
                        *p *= self.activation.derivative_from_output(a);
                    }
                    core::mem::swap(&mut delta, &mut prev);
                }
            }
        }
        let inv = 1.0 / rows.len() as f64;
        for (g, layer) in grads.iter_mut().zip(&self.layers) {
            for (gw, &w) in g.weights.iter_mut().zip(&layer.weights) {
                *gw = *gw * inv + l2 * w;
            }
            g.bias.iter_mut().for_each(|b| *b *= inv);
        }
        (ce * inv + self.l2_term(l2), grads)
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = math::exp(*v - max);
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

/// Index of the largest value; the lowest index wins ties.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Trained network together with the standardizer fitted on its inputs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpModel {
    pub network: MlpNetwork,
    pub standardizer: Standardizer,
}

/// Predicted labels and the softmax rows they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<Valence>,
    pub probabilities: Vec<Vec<f64>>,
}

impl MlpModel {
    /// All-zero weights on an identity standardizer.
    pub fn zeros(input_dim: usize, hidden: &[usize], activation: Activation) -> Self {
        Self {
            network: MlpNetwork::zeros(input_dim, hidden, Valence::COUNT, activation),
            standardizer: Standardizer::new(
                alloc::vec![0.0; input_dim],
                alloc::vec![1.0; input_dim],
            )
            .expect("equal lengths"),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.network.input_dim()
    }

    pub fn predict(&self, x: &Matrix) -> Result<Prediction> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "feature count",
                expected: self.input_dim(),
                found: x.cols(),
            });
        }
        let mut row = alloc::vec![0.0; x.cols()];
        let mut labels = Vec::with_capacity(x.rows());
        let mut probabilities = Vec::with_capacity(x.rows());
        for r in x.iter_rows() {
            self.standardizer.apply_row(r, &mut row);
            let p = self.network.probabilities(&row);
            labels.push(Valence::from_index(argmax(&p)).unwrap_or(Valence::Positive));
            probabilities.push(p);
        }
        Ok(Prediction {
            labels,
            probabilities,
        })
    }
}

#[derive(Debug, Clone)]
struct Moments {
    first: Vec<Dense>,
    second: Vec<Dense>,
    step: i32,
}

/// Epoch-at-a-time training loop for [`mlp_train`].
#[derive(Debug, Clone)]
pub struct MlpTrainer {
    cfg: MlpConfig,
    network: MlpNetwork,
    standardizer: Standardizer,
    inputs: Matrix,
    targets: Vec<usize>,
    order: Vec<usize>,
    shuffle: ChaCha8Rng,
    moments: Option<Moments>,
    epochs_done: usize,
}

impl MlpTrainer {
    pub fn new(x: &Matrix, y: &[Valence], cfg: &MlpConfig) -> Result<Self> {
        cfg.validate()?;
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch {
                what: "label count",
                expected: x.rows(),
                found: y.len(),
            });
        }
        if y.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if class_counts(y).iter().filter(|&&c| c > 0).count() < 2 {
            return Err(Error::SingleClass);
        }
        let standardizer = Standardizer::fit(x)?;
        let inputs = standardizer.apply(x)?;
        let mut init_rng = seeded(derive_seed(cfg.seed, 0));
        let network = MlpNetwork::init(
            x.cols(),
            &cfg.hidden_layers,
            Valence::COUNT,
            cfg.activation,
            &mut init_rng,
        );
        let moments = match cfg.optimizer {
            Optimizer::Adam { .. } => Some(Moments {
                first: network.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
                second: network.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
                step: 0,
            }),
            Optimizer::Sgd => None,
        };
        Ok(Self {
            cfg: cfg.clone(),
            network,
            standardizer,
            inputs,
            targets: y.iter().map(|v| v.index()).collect(),
            order: (0..y.len()).collect(),
            shuffle: seeded(derive_seed(cfg.seed, 1)),
            moments,
            epochs_done: 0,
        })
    }

    pub fn network(&self) -> &MlpNetwork {
        &self.network
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.cfg.learning_rate = lr;
    }

    /// Full training-set objective at the current weights.
    pub fn loss(&self) -> f64 {
        self.network
            .loss(&self.inputs, &self.targets, &self.order_all(), self.cfg.l2_penalty)
    }

    fn order_all(&self) -> Vec<usize> {
        (0..self.targets.len()).collect()
    }

    /// One pass over shuffled mini-batches.
    pub fn epoch(&mut self) {
        self.order.shuffle(&mut self.shuffle);
        let order = core::mem::take(&mut self.order);
        for batch in order.chunks(self.cfg.batch_size) {
            let (_, grads) =
                self.network
                    .loss_and_gradient(&self.inputs, &self.targets, batch, self.cfg.l2_penalty);
            self.update(&grads);
        }
        self.order = order;
        self.epochs_done += 1;
    }

    fn update(&mut self, grads: &[Dense]) {
        let lr = self.cfg.learning_rate;
        match (self.cfg.optimizer, self.moments.as_mut()) {
            (Optimizer::Adam { beta1, beta2, epsilon }, Some(mom)) => {
                mom.step += 1;
                let c1 = 1.0 - libm::pow(beta1, mom.step as f64);
                let c2 = 1.0 - libm::pow(beta2, mom.step as f64);
                for (((layer, g), m1), m2) in self
                    .network
                    .layers
                    .iter_mut()
                    .zip(grads)
                    .zip(&mut mom.first)
                    .zip(&mut mom.second)
                {
                    adam(&mut layer.weights, &g.weights, &mut m1.weights, &mut m2.weights, lr, beta1, beta2, epsilon, c1, c2);
                    adam(&mut layer.bias, &g.bias, &mut m1.bias, &mut m2.bias, lr, beta1, beta2, epsilon, c1, c2);
                }
            }
            _ => {
                for (layer, g) in self.network.layers.iter_mut().zip(grads) {
                    for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                        *w -= lr * gw;
                    }
                    for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                        *b -= lr * gb;
                    }
                }
            }
        }
    }

    pub fn finish(self) -> MlpModel {
        MlpModel {
            network: self.network,
            standardizer: self.standardizer,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn adam(
    params: &mut [f64],
    grads: &[f64],
    m1: &mut [f64],
    m2: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    c1: f64,
    c2: f64,
) {
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m1).zip(m2) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        *p -= lr * (*m / c1) / (math::sqrt(*v / c2) + eps);
    }
}

/// Standardizes `x`, then trains for `cfg.epochs` epochs.
pub fn mlp_train(x: &Matrix, y: &[Valence], cfg: &MlpConfig) -> Result<MlpModel> {
    cfg.validate()?;
    let Some(es) = cfg.early_stopping else {
        let mut trainer = MlpTrainer::new(x, y, cfg)?;
        for _ in 0..cfg.epochs {
            trainer.epoch();
        }
        return Ok(trainer.finish());
    };
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: x.rows(),
            found: y.len(),
        });
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.shuffle(&mut seeded(derive_seed(cfg.seed, 2)));
    let n_val = ((y.len() as f64 * es.validation_fraction) as usize).clamp(1, y.len().saturating_sub(2).max(1));
    let (val, fit) = order.split_at(n_val);
    let fit_y: Vec<Valence> = fit.iter().map(|&i| y[i]).collect();
    let mut trainer = MlpTrainer::new(&x.select_rows(fit), &fit_y, cfg)?;
    let val_x = trainer.standardizer.apply(&x.select_rows(val))?;
    let val_t: Vec<usize> = val.iter().map(|&i| y[i].index()).collect();
    let val_rows: Vec<usize> = (0..val.len()).collect();
    let mut best = (f64::INFINITY, trainer.network.clone());
    let mut stale = 0;
    for _ in 0..cfg.epochs {
        trainer.epoch();
        let loss = trainer.network.loss(&val_x, &val_t, &val_rows, 0.0);
        if loss < best.0 {
            best = (loss, trainer.network.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= es.patience {
                break;
            }
        }
    }
    Ok(MlpModel {
        network: best.1,
        standardizer: trainer.standardizer,
    })
}

pub fn mlp_predict(model: &MlpModel, x: &Matrix) -> Result<Prediction> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_is_uniform_and_picks_positive() {
        let model = MlpModel::zeros(2, &[4], Activation::Relu);
        let x = Matrix::from_rows(&[[1.0, -1.0]]).unwrap();
        let p = model.predict(&x).unwrap();
        assert_eq!(p.labels, [Valence::Positive]);
        for v in &p.probabilities[0] {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_single_class_and_bad_config() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let y = [Valence::Neutral, Valence::Neutral];
        assert_eq!(
            mlp_train(&x, &y, &MlpConfig::default()).unwrap_err(),
            Error::SingleClass
        );
        let cfg = MlpConfig {
            hidden_layers: alloc::vec![0],
            ..MlpConfig::default()
        };
        assert!(mlp_train(&x, &[Valence::Positive, Valence::Negative], &cfg).is_err());
    }

    #[test]
    fn predict_checks_width() {
        let model = MlpModel::zeros(3, &[2], Activation::Tanh);
        assert!(model.predict(&Matrix::zeros(1, 2)).is_err());
    }
}
