//! Feed-forward classifier: class probabilities, cross-entropy loss, exact
//! input gradients, and deterministic mini-batch training.
//!
//! The model is immutable after training; `forward_probs` and
//! `input_gradient` are pure and safe to share across threads.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{RatingScale, Scaler};

/// Probabilities are floored at this value inside logarithms so a confident
/// wrong prediction yields a large finite loss instead of infinity.
pub const PROB_FLOOR: f64 = 1e-12;

/// Version tag of the serialized model document.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenActivation {
    Relu,
    Tanh,
}

impl HiddenActivation {
    fn apply(self, z: f64) -> f64 {
        match self {
            HiddenActivation::Relu => z.max(0.0),
            HiddenActivation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the post-activation value.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            HiddenActivation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            HiddenActivation::Tanh => 1.0 - a * a,
        }
    }
}

impl std::str::FromStr for HiddenActivation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(HiddenActivation::Relu),
            "tanh" => Ok(HiddenActivation::Tanh),
            other => Err(Error::InvalidInput(format!(
                "unknown hidden activation '{other}' (expected relu or tanh)"
            ))),
        }
    }
}

/// One dense layer; weights are row-major with shape (out_dim, in_dim).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    in_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    pub fn new(in_dim: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if bias.is_empty() || in_dim == 0 {
            return Err(Error::Contract("layer dimensions must be positive".into()));
        }
        if weights.len() != in_dim * bias.len() {
            return Err(Error::Contract(format!(
                "weight array has {} values, expected {} ({} rows x {} cols)",
                weights.len(),
                in_dim * bias.len(),
                bias.len(),
                in_dim
            )));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Contract("layer contains non-finite values".into()));
        }
        Ok(Self {
            in_dim,
            weights,
            bias,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.out_dim() {
            let row = &self.weights[r * self.in_dim..(r + 1) * self.in_dim];
            let mut acc = self.bias[r];
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            out.push(acc);
        }
    }

    /// Accumulates `W^T d` into `out` (which must be zeroed by the caller).
    fn backward_input(&self, d: &[f64], out: &mut [f64]) {
        for (r, dr) in d.iter().enumerate() {
            let row = &self.weights[r * self.in_dim..(r + 1) * self.in_dim];
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * dr;
            }
        }
    }
}

/// A trained multi-layer perceptron with a softmax output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
    hidden_activation: HiddenActivation,
    n_features: usize,
    n_classes: usize,
}

impl MlpModel {
    pub fn new(layers: Vec<Layer>, hidden_activation: HiddenActivation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Contract("model needs at least one layer".into()));
        }
        for i in 1..layers.len() {
            if layers[i].in_dim() != layers[i - 1].out_dim() {
                return Err(Error::Contract(format!(
                    "layer {i} input width {} does not match layer {} output width {}",
                    layers[i].in_dim(),
                    i - 1,
                    layers[i - 1].out_dim()
                )));
            }
        }
        let n_features = layers[0].in_dim();
        let n_classes = layers.last().unwrap().out_dim();
        if n_classes < 2 {
            return Err(Error::Contract(format!(
                "model must have at least 2 classes, got {n_classes}"
            )));
        }
        Ok(Self {
            layers,
            hidden_activation,
            n_features,
            n_classes,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn hidden_activation(&self) -> HiddenActivation {
        self.hidden_activation
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::Contract(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.n_features
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "input contains a non-finite value".into(),
            ));
        }
        Ok(())
    }

    /// Forward pass keeping post-activation values of every layer
    /// (activations[0] is the input, the last entry holds raw logits).
    fn forward_trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.forward_into(activations.last().unwrap(), &mut z);
            if l != last {
                for v in &mut z {
                    *v = self.hidden_activation.apply(*v);
                }
            }
            activations.push(z);
        }
        activations
    }
}

/// A discrete output distribution over the model's classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Wraps a caller-provided distribution: entries nonnegative, summing to
    /// one within 1e-9.
    pub fn from_distribution(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Contract("empty probability vector".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Contract(
                "probability vector has a negative or non-finite entry".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Contract(format!(
                "probability vector sums to {sum}, expected 1"
            )));
        }
        Ok(Self(probs))
    }

    /// Point mass at a 1-based class.
    pub fn one_hot(n_classes: usize, class: usize) -> Result<Self> {
        if class == 0 || class > n_classes {
            return Err(Error::Contract(format!(
                "class {class} outside 1..={n_classes}"
            )));
        }
        let mut v = vec![0.0; n_classes];
        v[class - 1] = 1.0;
        Ok(Self(v))
    }

    /// Uniform mass over every class at least as good as `target`
    /// (ordinals 1..=target). The config-gated alternative to `one_hot`.
    pub fn spread_better(n_classes: usize, target: usize) -> Result<Self> {
        if target == 0 || target > n_classes {
            return Err(Error::Contract(format!(
                "class {target} outside 1..={n_classes}"
            )));
        }
        let mut v = vec![0.0; n_classes];
        for item in v.iter_mut().take(target) {
            *item = 1.0 / target as f64;
        }
        Ok(Self(v))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Softmax distribution over the output layer.
pub fn forward_probs(model: &MlpModel, x: &[f64]) -> Result<ProbVector> {
    model.check_input(x)?;
    let trace = model.forward_trace(x);
    Ok(ProbVector(softmax(trace.last().unwrap())))
}

/// 1-based argmax; ties break toward the lower ordinal (better grade).
pub fn predict_class(model: &MlpModel, x: &[f64]) -> Result<usize> {
    let probs = forward_probs(model, x)?;
    Ok(argmax_class(probs.probs()))
}

pub(crate) fn argmax_class(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, p) in probs.iter().enumerate().skip(1) {
        if *p > probs[best] {
            best = i;
        }
    }
    best + 1
}

/// Categorical cross-entropy −Σ target_j · log(probs_j), probabilities
/// floored at [`PROB_FLOOR`].
pub fn cross_entropy(probs: &ProbVector, target: &ProbVector) -> Result<f64> {
    if probs.len() != target.len() {
        return Err(Error::Contract(format!(
            "probability vectors have lengths {} and {}",
            probs.len(),
            target.len()
        )));
    }
    Ok(probs
        .probs()
        .iter()
        .zip(target.probs())
        .map(|(p, t)| -t * p.max(PROB_FLOOR).ln())
        .sum())
}

/// Exact reverse-mode gradient of `cross_entropy(forward_probs(model, x), target)`
/// with respect to the input vector.
pub fn input_gradient(model: &MlpModel, x: &[f64], target: &ProbVector) -> Result<Vec<f64>> {
    model.check_input(x)?;
    if target.len() != model.n_classes {
        return Err(Error::Contract(format!(
            "target has {} classes, model has {}",
            target.len(),
            model.n_classes
        )));
    }
    let trace = model.forward_trace(x);
    let probs = softmax(trace.last().unwrap());
    // d loss / d logits for softmax + cross-entropy.
    let mut d: Vec<f64> = probs
        .iter()
        .zip(target.probs())
        .map(|(p, t)| p - t)
        .collect();
    for l in (0..model.layers.len()).rev() {
        let layer = &model.layers[l];
        let mut d_prev = vec![0.0; layer.in_dim()];
        layer.backward_input(&d, &mut d_prev);
        if l > 0 {
            for (dp, a) in d_prev.iter_mut().zip(&trace[l]) {
                *dp *= model.hidden_activation.derivative_from_output(*a);
            }
        }
        d = d_prev;
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden_layer_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub l2_weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_layer_sizes: vec![64, 64],
            learning_rate: 0.05,
            epochs: 40,
            batch_size: 32,
            seed: 0,
            l2_weight_decay: 0.0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden_layer_sizes.contains(&0) {
            return Err(Error::InvalidInput(
                "hidden layer sizes must be positive".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch_size must be >= 1".into()));
        }
        if !(self.l2_weight_decay.is_finite() && self.l2_weight_decay >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "l2_weight_decay must be nonnegative, got {}",
                self.l2_weight_decay
            )));
        }
        Ok(())
    }
}

/// Trains an MLP with mini-batch gradient descent on mean cross-entropy.
///
/// Labels are 1-based ordinals; the class count is inferred as the largest
/// label and every ordinal up to it must occur at least once. Identical
/// (config, data) produce a bit-identical model.
pub fn train(
    config: &TrainConfig,
    features: &[Vec<f64>],
    labels: &[usize],
    hidden_activation: HiddenActivation,
) -> Result<MlpModel> {
    config.validate()?;
    if features.is_empty() {
        return Err(Error::InvalidInput("empty training dataset".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let n_features = features[0].len();
    if n_features == 0 {
        return Err(Error::InvalidInput("rows have no features".into()));
    }
    for (i, row) in features.iter().enumerate() {
        if row.len() != n_features {
            return Err(Error::InvalidInput(format!(
                "row {i} has {} features, expected {n_features}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "row {i} contains a non-finite value"
            )));
        }
    }
    let n_classes = *labels.iter().max().unwrap();
    if labels.contains(&0) {
        return Err(Error::InvalidInput(
            "labels are 1-based; found label 0".into(),
        ));
    }
    if n_classes < 2 {
        return Err(Error::InvalidInput(
            "training data has fewer than 2 classes".into(),
        ));
    }
    for class in 1..=n_classes {
        if !labels.contains(&class) {
            return Err(Error::InvalidInput(format!(
                "no sample with label {class} (labels must cover 1..={n_classes})"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dims = vec![n_features];
    dims.extend_from_slice(&config.hidden_layer_sizes);
    dims.push(n_classes);

    // Uniform fan-in initialization from the run seed.
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for w in dims.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let bound = 1.0 / (fan_in as f64).sqrt();
        let weights: Vec<f64> = (0..fan_in * fan_out)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        layers.push(Layer::new(fan_in, weights, vec![0.0; fan_out])?);
    }
    let mut model = MlpModel::new(layers, hidden_activation)?;

    let targets: Vec<ProbVector> = labels
        .iter()
        .map(|&l| ProbVector::one_hot(n_classes, l))
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..features.len()).collect();
    let mut grads_w: Vec<Vec<f64>> = model
        .layers
        .iter()
        .map(|l| vec![0.0; l.weights.len()])
        .collect();
    let mut grads_b: Vec<Vec<f64>> = model
        .layers
        .iter()
        .map(|l| vec![0.0; l.bias.len()])
        .collect();

    for _epoch in 0..config.epochs {
        shuffle(&mut order, &mut rng);
        for batch in order.chunks(config.batch_size) {
            for g in grads_w.iter_mut().chain(grads_b.iter_mut()) {
                g.iter_mut().for_each(|v| *v = 0.0);
            }
            for &i in batch {
                accumulate_gradients(
                    &model,
                    &features[i],
                    &targets[i],
                    &mut grads_w,
                    &mut grads_b,
                );
            }
            let scale = config.learning_rate / batch.len() as f64;
            let decay = config.learning_rate * config.l2_weight_decay;
            for (l, layer) in model.layers.iter_mut().enumerate() {
                for (w, g) in layer.weights.iter_mut().zip(&grads_w[l]) {
                    *w -= scale * g + decay * *w;
                }
                for (b, g) in layer.bias.iter_mut().zip(&grads_b[l]) {
                    *b -= scale * g;
                }
            }
        }
    }
    Ok(model)
}

/// Fisher-Yates with the training RNG; `SliceRandom` would work too but an
/// explicit loop keeps the byte-for-byte training trajectory obvious.
fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
}

fn accumulate_gradients(
    model: &MlpModel,
    x: &[f64],
    target: &ProbVector,
    grads_w: &mut [Vec<f64>],
    grads_b: &mut [Vec<f64>],
) {
    let trace = model.forward_trace(x);
    let probs = softmax(trace.last().unwrap());
    let mut d: Vec<f64> = probs
        .iter()
        .zip(target.probs())
        .map(|(p, t)| p - t)
        .collect();
    for l in (0..model.layers.len()).rev() {
        let layer = &model.layers[l];
        let input = &trace[l];
        for (r, dr) in d.iter().enumerate() {
            let grad_row = &mut grads_w[l][r * layer.in_dim()..(r + 1) * layer.in_dim()];
            for (g, a) in grad_row.iter_mut().zip(input) {
                *g += dr * a;
            }
            grads_b[l][r] += dr;
        }
        if l > 0 {
            let mut d_prev = vec![0.0; layer.in_dim()];
            layer.backward_input(&d, &mut d_prev);
            for (dp, a) in d_prev.iter_mut().zip(&trace[l]) {
                *dp *= model.hidden_activation.derivative_from_output(*a);
            }
            d = d_prev;
        }
    }
}

/// Mean cross-entropy of a labeled dataset under the model.
pub fn dataset_loss(model: &MlpModel, features: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    let mut total = 0.0;
    for (x, &label) in features.iter().zip(labels) {
        let probs = forward_probs(model, x)?;
        let target = ProbVector::one_hot(model.n_classes(), label)?;
        total += cross_entropy(&probs, &target)?;
    }
    Ok(total / features.len() as f64)
}

/// Fraction of rows whose predicted class equals the label.
pub fn dataset_accuracy(model: &MlpModel, features: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    let mut hits = 0usize;
    for (x, &label) in features.iter().zip(labels) {
        if predict_class(model, x)? == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / features.len() as f64)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// A trained model together with the preprocessing metadata needed to apply
/// it to raw rows: feature names, fitted scaler, and the rating scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub model: MlpModel,
    pub feature_names: Vec<String>,
    pub scaler: Scaler,
    pub rating_scale: RatingScale,
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ScalerJson {
    means: Vec<f64>,
    stds: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    schema_version: u32,
    n_features: usize,
    n_classes: usize,
    hidden_activation: HiddenActivation,
    layers: Vec<LayerJson>,
    feature_names: Vec<String>,
    scaler: ScalerJson,
    rating_scale: Vec<String>,
}

fn de_err(field: &str, message: impl Into<String>) -> Error {
    Error::Deserialization {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Writes the bundle as a self-describing JSON document. Numbers use
/// shortest round-trip decimal, so `load_model(save_model(m))` reproduces
/// every weight bit-for-bit.
pub fn save_model(bundle: &ModelBundle, path: &Path) -> Result<()> {
    let json = ModelJson {
        schema_version: MODEL_SCHEMA_VERSION,
        n_features: bundle.model.n_features(),
        n_classes: bundle.model.n_classes(),
        hidden_activation: bundle.model.hidden_activation(),
        layers: bundle
            .model
            .layers()
            .iter()
            .map(|l| LayerJson {
                weights: l.weights().to_vec(),
                bias: l.bias().to_vec(),
            })
            .collect(),
        feature_names: bundle.feature_names.clone(),
        scaler: ScalerJson {
            means: bundle.scaler.means.clone(),
            stds: bundle.scaler.stds.clone(),
        },
        rating_scale: bundle.rating_scale.symbols().to_vec(),
    };
    let text = serde_json::to_string_pretty(&json).map_err(|e| de_err("model", e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_model(path: &Path) -> Result<ModelBundle> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let json: ModelJson =
        serde_json::from_str(&text).map_err(|e| de_err("model document", e.to_string()))?;
    if json.schema_version != MODEL_SCHEMA_VERSION {
        return Err(de_err(
            "schema_version",
            format!(
                "found version {}, this build reads version {MODEL_SCHEMA_VERSION}",
                json.schema_version
            ),
        ));
    }
    if json.layers.is_empty() {
        return Err(de_err("layers", "model has no layers"));
    }

    let mut layers = Vec::with_capacity(json.layers.len());
    let mut expected_in = json.n_features;
    for (i, lj) in json.layers.iter().enumerate() {
        if lj.bias.is_empty() {
            return Err(de_err(&format!("layers[{i}].bias"), "bias array is empty"));
        }
        if lj.weights.len() != expected_in * lj.bias.len() {
            return Err(de_err(
                &format!("layers[{i}].weights"),
                format!(
                    "weight array has {} values, expected {} ({} rows x {} cols)",
                    lj.weights.len(),
                    expected_in * lj.bias.len(),
                    lj.bias.len(),
                    expected_in
                ),
            ));
        }
        if lj
            .weights
            .iter()
            .chain(lj.bias.iter())
            .any(|v| !v.is_finite())
        {
            return Err(de_err(
                &format!("layers[{i}].weights"),
                "layer contains a non-finite value",
            ));
        }
        let out_dim = lj.bias.len();
        layers.push(
            Layer::new(expected_in, lj.weights.clone(), lj.bias.clone())
                .map_err(|e| de_err(&format!("layers[{i}]"), e.to_string()))?,
        );
        expected_in = out_dim;
    }
    if expected_in != json.n_classes {
        return Err(de_err(
            &format!("layers[{}].bias", json.layers.len() - 1),
            format!(
                "final layer has {} outputs, n_classes says {}",
                expected_in, json.n_classes
            ),
        ));
    }
    let model = MlpModel::new(layers, json.hidden_activation)
        .map_err(|e| de_err("layers", e.to_string()))?;

    if json.feature_names.len() != json.n_features {
        return Err(de_err(
            "feature_names",
            format!(
                "{} names for {} features",
                json.feature_names.len(),
                json.n_features
            ),
        ));
    }
    if json.scaler.means.len() != json.n_features || json.scaler.stds.len() != json.n_features {
        return Err(de_err(
            "scaler",
            format!(
                "scaler has {} means and {} stds for {} features",
                json.scaler.means.len(),
                json.scaler.stds.len(),
                json.n_features
            ),
        ));
    }
    if json
        .scaler
        .stds
        .iter()
        .any(|&s| !(s.is_finite() && s > 0.0))
    {
        return Err(de_err(
            "scaler.stds",
            "standard deviations must be positive",
        ));
    }
    let rating_scale = RatingScale::from_symbols(json.rating_scale)
        .map_err(|e| de_err("rating_scale", e.to_string()))?;

    Ok(ModelBundle {
        model,
        feature_names: json.feature_names,
        scaler: Scaler {
            means: json.scaler.means,
            stds: json.scaler.stds,
        },
        rating_scale,
    })
}
