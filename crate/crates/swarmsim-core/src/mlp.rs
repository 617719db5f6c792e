//! Shallow feedforward classifier: ReLU hidden layer, softmax output,
//! trained by mini-batch SGD on oracle-labeled scenes.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::kinematics::ManeuverClass;
use crate::policy::{FeatureVector, LabeledSample, FEATURE_LEN};
use crate::rng::Rng;

pub const N_CLASSES: usize = 6;
pub const DEFAULT_HIDDEN: usize = 32;
pub const MODEL_FORMAT_TAG: &str = "mlpv1";

/// Weights of one fully-connected network. `weights[l]` is row-major
/// `dims[l+1] x dims[l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MlpError {
    DimensionMismatch { expected: usize, got: usize },
    Divergence { epoch: usize },
    Format(String),
}

impl core::fmt::Display for MlpError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MlpError::DimensionMismatch { expected, got } => {
                write!(f, "input dimension mismatch: expected {expected}, got {got}")
            }
            MlpError::Divergence { epoch } => {
                write!(f, "training diverged (non-finite loss) at epoch {epoch}")
            }
            MlpError::Format(msg) => write!(f, "model format error: {msg}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            epochs: 200,
            batch: 32,
            learning_rate: 0.5,
        }
    }
}

fn gaussian(rng: &mut Rng) -> f64 {
    // Box-Muller; rejects the log(0) corner.
    let mut u1 = rng.next_f64();
    while u1 == 0.0 {
        u1 = rng.next_f64();
    }
    let u2 = rng.next_f64();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

impl MlpModel {
    /// He-initialized model for the given layer dimensions.
    pub fn new_random(dims: &[usize], seed: u64) -> MlpModel {
        let mut rng = Rng::stream(seed, "mlp_init");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..dims.len() - 1 {
            let fan_in = dims[l];
            let scale = libm::sqrt(2.0 / fan_in as f64);
            weights.push(
                (0..dims[l + 1] * fan_in)
                    .map(|_| scale * gaussian(&mut rng))
                    .collect(),
            );
            biases.push(vec![0.0; dims[l + 1]]);
        }
        MlpModel {
            dims: dims.to_vec(),
            weights,
            biases,
        }
    }

    pub fn zeros(dims: &[usize]) -> MlpModel {
        MlpModel {
            dims: dims.to_vec(),
            weights: (0..dims.len() - 1)
                .map(|l| vec![0.0; dims[l + 1] * dims[l]])
                .collect(),
            biases: (0..dims.len() - 1).map(|l| vec![0.0; dims[l + 1]]).collect(),
        }
    }

    /// Forward pass keeping every layer's post-activation values.
    fn forward(&self, input: &[f64]) -> Result<Vec<Vec<f64>>, MlpError> {
        if input.len() != self.dims[0] {
            return Err(MlpError::DimensionMismatch {
                expected: self.dims[0],
                got: input.len(),
            });
        }
        let mut activations = vec![input.to_vec()];
        for l in 0..self.weights.len() {
            let (n_out, n_in) = (self.dims[l + 1], self.dims[l]);
            let prev = &activations[l];
            let mut z = self.biases[l].clone();
            for (row, zv) in z.iter_mut().enumerate() {
                let w = &self.weights[l][row * n_in..(row + 1) * n_in];
                let mut acc = 0.0;
                for (wv, pv) in w.iter().zip(prev) {
                    acc += wv * pv;
                }
                *zv += acc;
            }
            let last = l == self.weights.len() - 1;
            if !last {
                for v in z.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            let _ = n_out;
            activations.push(z);
        }
        let logits = activations.last_mut().unwrap();
        softmax_in_place(logits);
        Ok(activations)
    }

    /// Class probabilities for one feature vector.
    pub fn infer(&self, features: &FeatureVector) -> Result<[f64; N_CLASSES], MlpError> {
        let acts = self.forward(features)?;
        let probs = acts.last().unwrap();
        let mut out = [0.0; N_CLASSES];
        out.copy_from_slice(probs);
        Ok(out)
    }

    /// Decision rule: argmax probability, ties to the lower class index.
    pub fn decide(&self, features: &FeatureVector) -> Result<ManeuverClass, MlpError> {
        let probs = self.infer(features)?;
        Ok(ManeuverClass::ALL[argmax(&probs)])
    }

    /// Versioned plain-text serialization: a header line with the format
    /// tag and dimensions, then one line per weight-matrix row and one per
    /// bias vector, 17-significant-digit decimals.
    pub fn to_text(&self) -> String {
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        let mut out = format!("{MODEL_FORMAT_TAG} {}\n", dims.join(" "));
        for l in 0..self.weights.len() {
            let n_in = self.dims[l];
            for row in 0..self.dims[l + 1] {
                let cells: Vec<String> = self.weights[l][row * n_in..(row + 1) * n_in]
                    .iter()
                    .map(|v| format!("{v:.16e}"))
                    .collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
            let cells: Vec<String> = self.biases[l].iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<MlpModel, MlpError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| MlpError::Format("empty model file".into()))?;
        let mut parts = header.split_whitespace();
        let tag = parts.next().unwrap_or("");
        if tag != MODEL_FORMAT_TAG {
            return Err(MlpError::Format(format!("unknown format tag {tag:?}")));
        }
        let dims: Vec<usize> = parts
            .map(|p| p.parse().map_err(|_| MlpError::Format(format!("bad dimension {p:?}"))))
            .collect::<Result<_, _>>()?;
        if dims.len() < 2 {
            return Err(MlpError::Format("need at least two layer dimensions".into()));
        }
        let parse_row = |line: Option<&str>, expect: usize| -> Result<Vec<f64>, MlpError> {
            let line = line.ok_or_else(|| MlpError::Format("truncated model file".into()))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|p| p.parse().map_err(|_| MlpError::Format(format!("bad value {p:?}"))))
                .collect::<Result<_, _>>()?;
            if row.len() != expect {
                return Err(MlpError::Format(format!(
                    "expected {expect} values per row, got {}",
                    row.len()
                )));
            }
            Ok(row)
        };
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..dims.len() - 1 {
            let mut matrix = Vec::with_capacity(dims[l + 1] * dims[l]);
            for _ in 0..dims[l + 1] {
                matrix.extend(parse_row(lines.next(), dims[l])?);
            }
            weights.push(matrix);
            biases.push(parse_row(lines.next(), dims[l + 1])?);
        }
        Ok(MlpModel { dims, weights, biases })
    }
}

fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in logits.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    for v in logits.iter_mut() {
        *v /= sum;
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Gradients of the mean cross-entropy loss over one batch, same shapes as
/// the model parameters.
pub fn batch_gradients(
    model: &MlpModel,
    batch: &[&LabeledSample],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, f64), MlpError> {
    let mut grad_w: Vec<Vec<f64>> = model.weights.iter().map(|w| vec![0.0; w.len()]).collect();
    let mut grad_b: Vec<Vec<f64>> = model.biases.iter().map(|b| vec![0.0; b.len()]).collect();
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;

    for sample in batch {
        let acts = model.forward(&sample.features)?;
        let probs = acts.last().unwrap();
        let label = sample.label.index();
        loss -= scale * libm::log(probs[label].max(1e-300));

        // Softmax + cross-entropy delta at the output layer.
        let mut delta: Vec<f64> = probs.clone();
        delta[label] -= 1.0;

        for l in (0..model.weights.len()).rev() {
            let n_in = model.dims[l];
            let prev = &acts[l];
            for (row, d) in delta.iter().enumerate() {
                let g = &mut grad_w[l][row * n_in..(row + 1) * n_in];
                for (gv, pv) in g.iter_mut().zip(prev) {
                    *gv += scale * d * pv;
                }
                grad_b[l][row] += scale * d;
            }
            if l > 0 {
                let mut next_delta = vec![0.0; n_in];
                for (row, d) in delta.iter().enumerate() {
                    let w = &model.weights[l][row * n_in..(row + 1) * n_in];
                    for (nd, wv) in next_delta.iter_mut().zip(w) {
                        *nd += d * wv;
                    }
                }
                // ReLU gate from the stored activations.
                for (nd, a) in next_delta.iter_mut().zip(&acts[l]) {
                    if *a <= 0.0 {
                        *nd = 0.0;
                    }
                }
                delta = next_delta;
            }
        }
    }
    Ok((grad_w, grad_b, loss))
}

/// Train by deterministic mini-batch SGD. Returns the model and its final
/// accuracy on the training set.
pub fn mlp_train(
    dataset: &[LabeledSample],
    hyper: Hyperparams,
    seed: u64,
) -> Result<(MlpModel, f64), MlpError> {
    mlp_train_dims(dataset, &[FEATURE_LEN, DEFAULT_HIDDEN, N_CLASSES], hyper, seed)
}

pub fn mlp_train_dims(
    dataset: &[LabeledSample],
    dims: &[usize],
    hyper: Hyperparams,
    seed: u64,
) -> Result<(MlpModel, f64), MlpError> {
    let mut model = MlpModel::new_random(dims, seed);
    let mut shuffle_rng = Rng::stream(seed, "mlp_shuffle");
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    for epoch in 0..hyper.epochs {
        // Linear learning-rate decay to a 1% floor; plain constant-rate SGD
        // stalls well short of convergence on this objective.
        let lr = hyper.learning_rate * (1.0 - epoch as f64 / hyper.epochs as f64).max(0.01);
        shuffle_rng.shuffle(&mut order);
        for chunk in order.chunks(hyper.batch) {
            let batch: Vec<&LabeledSample> = chunk.iter().map(|&i| &dataset[i]).collect();
            let (grad_w, grad_b, loss) = batch_gradients(&model, &batch)?;
            if !loss.is_finite() {
                return Err(MlpError::Divergence { epoch });
            }
            for l in 0..model.weights.len() {
                for (w, g) in model.weights[l].iter_mut().zip(&grad_w[l]) {
                    *w -= lr * g;
                }
                for (b, g) in model.biases[l].iter_mut().zip(&grad_b[l]) {
                    *b -= lr * g;
                }
            }
        }
    }

    let accuracy = agreement(&model, dataset)?;
    Ok((model, accuracy))
}

/// Fraction of samples where the model's decision matches the label.
pub fn agreement(model: &MlpModel, dataset: &[LabeledSample]) -> Result<f64, MlpError> {
    let mut hits = 0usize;
    for s in dataset {
        if model.decide(&s.features)? == s.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / dataset.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::generate_training_set;
    use crate::scenario::ScenarioConfig;

    fn sample_with(features: FeatureVector, label: ManeuverClass) -> LabeledSample {
        let cfg = ScenarioConfig::default();
        let set = generate_training_set(1, &cfg, 1);
        let mut s = set.into_iter().next().unwrap();
        s.features = features;
        s.label = label;
        s
    }

    #[test]
    fn zero_model_is_uniform() {
        let model = MlpModel::zeros(&[FEATURE_LEN, 4, N_CLASSES]);
        let probs = model.infer(&[0.25; FEATURE_LEN]).unwrap();
        for p in probs {
            assert!((p - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let model = MlpModel::new_random(&[FEATURE_LEN, 8, N_CLASSES], 5);
        let mut f = [0.0; FEATURE_LEN];
        for (i, v) in f.iter_mut().enumerate() {
            *v = (i as f64 * 0.37).sin();
        }
        let probs = model.infer(&f).unwrap();
        let sum: f64 = probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(probs.iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn dominating_bias_wins_argmax() {
        let mut model = MlpModel::zeros(&[FEATURE_LEN, 4, N_CLASSES]);
        model.biases[1][3] = 100.0;
        assert_eq!(
            model.decide(&[0.1; FEATURE_LEN]).unwrap(),
            ManeuverClass::ALL[3]
        );
    }

    #[test]
    fn argmax_shift_invariant_in_output_bias() {
        let model = MlpModel::new_random(&[FEATURE_LEN, 8, N_CLASSES], 11);
        let mut shifted = model.clone();
        for b in shifted.biases.last_mut().unwrap() {
            *b += 3.5;
        }
        let cfg = ScenarioConfig::default();
        for s in generate_training_set(25, &cfg, 2) {
            assert_eq!(
                model.decide(&s.features).unwrap(),
                shifted.decide(&s.features).unwrap()
            );
        }
    }

    #[test]
    fn dimension_mismatch_reported() {
        let model = MlpModel::zeros(&[10, 4, N_CLASSES]);
        let err = model.forward(&[0.0; FEATURE_LEN]).unwrap_err();
        assert_eq!(err, MlpError::DimensionMismatch { expected: 10, got: 36 });
    }

    #[test]
    fn memorizes_repeated_sample() {
        let one = sample_with([0.3; FEATURE_LEN], ManeuverClass::LeftTurn);
        let dataset: Vec<LabeledSample> = (0..100).map(|_| one.clone()).collect();
        let hyper = Hyperparams {
            epochs: 50,
            batch: 16,
            learning_rate: 0.05,
        };
        let (_, acc) = mlp_train(&dataset, hyper, 7).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = ScenarioConfig::default();
        let dataset = generate_training_set(200, &cfg, 4);
        let hyper = Hyperparams {
            epochs: 3,
            batch: 32,
            learning_rate: 0.01,
        };
        let a = mlp_train(&dataset, hyper, 9).unwrap();
        let b = mlp_train(&dataset, hyper, 9).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // Central finite differences with eps = 1e-5 on a 36 -> 4 -> 6 model.
        let cfg = ScenarioConfig::default();
        let dataset = generate_training_set(8, &cfg, 13);
        let batch: Vec<&LabeledSample> = dataset.iter().collect();
        let model = MlpModel::new_random(&[FEATURE_LEN, 4, N_CLASSES], 21);
        let (grad_w, grad_b, _) = batch_gradients(&model, &batch).unwrap();

        let loss_of = |m: &MlpModel| -> f64 {
            let mut loss = 0.0;
            for s in &batch {
                let acts = m.forward(&s.features).unwrap();
                let p = acts.last().unwrap()[s.label.index()];
                loss -= libm::log(p.max(1e-300)) / batch.len() as f64;
            }
            loss
        };

        let eps = 1e-5;
        let mut checked = 0;
        for l in 0..model.weights.len() {
            for idx in (0..model.weights[l].len()).step_by(17) {
                let mut plus = model.clone();
                plus.weights[l][idx] += eps;
                let mut minus = model.clone();
                minus.weights[l][idx] -= eps;
                let numeric = (loss_of(&plus) - loss_of(&minus)) / (2.0 * eps);
                let analytic = grad_w[l][idx];
                let denom = numeric.abs().max(analytic.abs()).max(1e-8);
                assert!(
                    (numeric - analytic).abs() / denom < 1e-4,
                    "weight grad mismatch at layer {l} index {idx}: {analytic} vs {numeric}"
                );
                checked += 1;
            }
            for idx in 0..model.biases[l].len() {
                let mut plus = model.clone();
                plus.biases[l][idx] += eps;
                let mut minus = model.clone();
                minus.biases[l][idx] -= eps;
                let numeric = (loss_of(&plus) - loss_of(&minus)) / (2.0 * eps);
                let analytic = grad_b[l][idx];
                let denom = numeric.abs().max(analytic.abs()).max(1e-8);
                assert!(
                    (numeric - analytic).abs() / denom < 1e-4,
                    "bias grad mismatch at layer {l} index {idx}"
                );
                checked += 1;
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let model = MlpModel::new_random(&[FEATURE_LEN, DEFAULT_HIDDEN, N_CLASSES], 7);
        let text = model.to_text();
        assert!(text.starts_with("mlpv1 36 32 6\n"));
        let parsed = MlpModel::from_text(&text).unwrap();
        assert_eq!(parsed, model);
    }

    #[test]
    fn malformed_model_rejected() {
        assert!(MlpModel::from_text("").is_err());
        assert!(MlpModel::from_text("wrongtag 36 32 6\n").is_err());
        assert!(MlpModel::from_text("mlpv1 36 32 6\n1 2 3\n").is_err());
    }
}
