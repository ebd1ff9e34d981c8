//! Feed-forward network trained by momentum SGD, with gradients optionally
//! projected through per-layer [`Projector`]s so later tasks leave the
//! input-output mapping of earlier ones intact.
//!
//! Every layer stores an `(in_dim + 1) x out_dim` weight matrix whose last row
//! is the bias: inputs are augmented with a constant 1 before the product, so
//! the projector of that layer (dimension `in_dim + 1`) protects biases too.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::codec::{ByteReader, ByteWriter};
use crate::context::{ContextLayer, ContextVector};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Op};
use crate::owm::{InputRecord, Projector, DEFAULT_ALPHA};
use crate::rng::SeedStream;
use crate::tasks::{Dataset, TaskSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        LayerSpec {
            in_dim,
            out_dim,
            activation,
        }
    }

    /// ReLU hidden layers and a linear output layer over the given widths,
    /// e.g. `[784, 800, 10]`.
    pub fn chain(widths: &[usize]) -> Result<Vec<LayerSpec>> {
        if widths.len() < 2 {
            return Err(Error::param(
                "layers",
                "need at least an input and an output width",
            ));
        }
        let last = widths.len() - 2;
        Ok(widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    Activation::Linear
                } else {
                    Activation::Relu
                };
                LayerSpec::new(w[0], w[1], act)
            })
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    CrossEntropy,
    Mse,
}

/// When layer projectors absorb new inputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorMode {
    /// After each task, from the batches of its last epoch.
    #[default]
    PerTask,
    /// After every batch, as if each batch were its own task.
    PerBatch,
}

/// What a projector absorbs for one batch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorInput {
    /// The layer inputs produced by forwarding the batch's mean input.
    #[default]
    ForwardedMean,
    /// The batch mean of each layer's actual inputs. Identical to
    /// `ForwardedMean` for the first layer; for deeper layers it also covers
    /// units that are silent at the mean input but active for single samples.
    LayerMean,
}

/// How the projected step is scaled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `κ · αP · g`.
    #[default]
    Fixed,
    /// `κ · P · g / (1 + x̄ᵀ P x̄)` with `x̄` the batch-mean layer input.
    Ebp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStopping {
    /// Fraction of each task's training set held out.
    pub holdout: f64,
    /// Epochs without held-out improvement before stopping.
    pub patience: usize,
}

impl Default for EarlyStopping {
    fn default() -> Self {
        EarlyStopping {
            holdout: 0.1,
            patience: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs_per_task: usize,
    pub projector_mode: ProjectorMode,
    pub projector_input: ProjectorInput,
    pub step_rule: StepRule,
    pub owm: bool,
    pub early_stopping: Option<EarlyStopping>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            momentum: 0.9,
            batch_size: 40,
            epochs_per_task: 20,
            projector_mode: ProjectorMode::PerTask,
            projector_input: ProjectorInput::ForwardedMean,
            step_rule: StepRule::Fixed,
            owm: true,
            early_stopping: Some(EarlyStopping::default()),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(
                "learning_rate",
                "must be positive and finite",
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("momentum", "must lie in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if self.epochs_per_task == 0 {
            return Err(Error::config("epochs_per_task", "must be at least 1"));
        }
        if let Some(es) = &self.early_stopping {
            if !(es.holdout > 0.0 && es.holdout < 1.0) {
                return Err(Error::config(
                    "early_stopping.holdout",
                    "must lie in (0, 1)",
                ));
            }
            if es.patience == 0 {
                return Err(Error::config(
                    "early_stopping.patience",
                    "must be at least 1",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    specs: Vec<LayerSpec>,
    weights: Vec<Matrix>,
    momentum: Vec<Matrix>,
    projectors: Vec<Projector>,
    records: Option<Vec<InputRecord>>,
}

/// Everything a forward pass produced.
#[derive(Clone, Debug)]
pub struct Activations {
    /// Bias-augmented input of every layer, `n x (in_dim + 1)`.
    pub inputs: Vec<Matrix>,
    /// Pre-activations of every layer, `n x out_dim`.
    pub pre: Vec<Matrix>,
}

impl Activations {
    /// Network output (the last layer is linear).
    pub fn output(&self) -> &Matrix {
        self.pre.last().expect("at least one layer")
    }
}

/// Loss gradients of one batch, plus the factors they were built from.
#[derive(Clone, Debug)]
pub struct Gradients {
    /// `∂L/∂W` per layer, shaped like the weights.
    pub layers: Vec<Matrix>,
    /// Bias-augmented layer inputs, `n x (in_dim + 1)`.
    pub inputs: Vec<Matrix>,
    /// `∂L/∂y` per layer, `n x out_dim`. `layers[l] = inputs[l]ᵀ deltas[l]`.
    pub deltas: Vec<Matrix>,
    pub loss: f64,
}

impl Gradients {
    /// Batch mean of every layer's augmented input.
    pub fn input_means(&self) -> Vec<Vec<f64>> {
        self.inputs.iter().map(Matrix::row_mean).collect()
    }
}

impl Mlp {
    /// He-normal hidden weights, zero output weights, biases in `U(0, 0.1)`;
    /// projectors start at `I / α` with the default `α`.
    pub fn new(specs: &[LayerSpec], seed: u64) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::param("layers", "need at least one layer"));
        }
        for (i, s) in specs.iter().enumerate() {
            if s.in_dim == 0 || s.out_dim == 0 {
                return Err(Error::param(
                    "layers",
                    format!("layer {i} has a zero dimension"),
                ));
            }
            if i > 0 && specs[i - 1].out_dim != s.in_dim {
                return Err(Error::param(
                    "layers",
                    format!(
                        "layer {} outputs {} but layer {i} takes {}",
                        i - 1,
                        specs[i - 1].out_dim,
                        s.in_dim
                    ),
                ));
            }
        }
        if specs.last().expect("non-empty").activation != Activation::Linear {
            return Err(Error::param("layers", "the output layer must be linear"));
        }
        let streams = SeedStream::new(seed);
        let last = specs.len() - 1;
        let mut weights = Vec::with_capacity(specs.len());
        for (l, s) in specs.iter().enumerate() {
            let mut rng = streams.rng(&format!("init/layer{l}"));
            let mut w = Matrix::zeros(s.in_dim + 1, s.out_dim);
            if l != last {
                let normal = Normal::new(0.0, (2.0 / s.in_dim as f64).sqrt()).expect("valid std");
                for v in &mut w.as_mut_slice()[..s.in_dim * s.out_dim] {
                    *v = normal.sample(&mut rng);
                }
            }
            for v in w.row_mut(s.in_dim) {
                *v = rng.random::<f64>() * 0.1;
            }
            weights.push(w);
        }
        Ok(Mlp {
            specs: specs.to_vec(),
            momentum: weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            projectors: specs
                .iter()
                .map(|s| Projector::new(s.in_dim + 1, DEFAULT_ALPHA))
                .collect::<Result<_>>()?,
            weights,
            records: None,
        })
    }

    /// Replaces every projector with a fresh one at `alpha` and forgetting
    /// factor `lambda`.
    pub fn with_projectors(mut self, alpha: f64, lambda: f64) -> Result<Self> {
        self.projectors = self
            .specs
            .iter()
            .map(|s| Projector::new(s.in_dim + 1, alpha)?.with_forgetting(lambda))
            .collect::<Result<_>>()?;
        Ok(self)
    }

    /// Keeps a copy of every input absorbed by the projectors, for closed-form
    /// cross-checks.
    pub fn retain_inputs(mut self) -> Self {
        self.records = Some(
            self.specs
                .iter()
                .map(|s| InputRecord::new(s.in_dim + 1))
                .collect(),
        );
        self
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn input_dim(&self) -> usize {
        self.specs[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.specs.last().expect("non-empty").out_dim
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn momentum(&self) -> &[Matrix] {
        &self.momentum
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn projectors_mut(&mut self) -> &mut [Projector] {
        &mut self.projectors
    }

    /// Inputs absorbed so far, per layer, when [`Mlp::retain_inputs`] is on.
    pub fn records(&self) -> Option<&[InputRecord]> {
        self.records.as_deref()
    }

    pub fn reset_momentum(&mut self) {
        for m in &mut self.momentum {
            m.scale_in_place(0.0);
        }
    }

    pub fn forward(&self, batch: &Matrix) -> Result<Activations> {
        if batch.cols() != self.input_dim() {
            return Err(Error::shape(
                "Mlp::forward",
                format!(
                    "batch has {} columns, network takes {}",
                    batch.cols(),
                    self.input_dim()
                ),
            ));
        }
        let mut inputs = Vec::with_capacity(self.specs.len());
        let mut pre = Vec::with_capacity(self.specs.len());
        let mut x = batch.with_constant_column(1.0);
        for (l, spec) in self.specs.iter().enumerate() {
            let y = linalg::matmul(&x, &self.weights[l])?;
            inputs.push(x);
            if l + 1 < self.specs.len() {
                let h = match spec.activation {
                    Activation::Relu => y.map(|v| v.max(0.0)),
                    Activation::Linear => y.clone(),
                };
                x = h.with_constant_column(1.0);
            } else {
                x = Matrix::zeros(0, 0);
            }
            pre.push(y);
        }
        Ok(Activations { inputs, pre })
    }

    /// Network output for `batch`.
    pub fn predict(&self, batch: &Matrix) -> Result<Matrix> {
        Ok(self.forward(batch)?.pre.pop().expect("at least one layer"))
    }

    /// Exact gradients of the batch-mean loss.
    pub fn backward(&self, acts: &Activations, labels: &[usize], loss: Loss) -> Result<Gradients> {
        let (value, mut delta) = loss_and_delta(acts.output(), labels, loss)?;
        let n_layers = self.specs.len();
        let mut layers = vec![Matrix::zeros(0, 0); n_layers];
        let mut deltas = vec![Matrix::zeros(0, 0); n_layers];
        for l in (0..n_layers).rev() {
            layers[l] = linalg::matmul_tn(&acts.inputs[l], &delta)?;
            if l > 0 {
                let back = linalg::matmul_nt(&delta, &self.weights[l])?;
                let prev = &acts.pre[l - 1];
                let relu = self.specs[l - 1].activation == Activation::Relu;
                let mut d = Matrix::zeros(prev.rows(), prev.cols());
                for r in 0..prev.rows() {
                    let src = &back.row(r)[..prev.cols()];
                    for ((o, &b), &z) in d.row_mut(r).iter_mut().zip(src).zip(prev.row(r)) {
                        // ReLU'(0) = 0.
                        *o = if !relu || z > 0.0 { b } else { 0.0 };
                    }
                }
                deltas[l] = std::mem::replace(&mut delta, d);
            } else {
                deltas[l] = std::mem::replace(&mut delta, Matrix::zeros(0, 0));
            }
        }
        if !value.is_finite() || layers.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence(format!(
                "non-finite loss or gradient (loss = {value})"
            )));
        }
        Ok(Gradients {
            layers,
            inputs: acts.inputs.clone(),
            deltas,
            loss: value,
        })
    }

    /// One momentum step, `v ← μ v − κ s`, `W ← W + v`. For the first task
    /// (`task_index == 0`) in per-task mode `s` is the raw gradient; otherwise,
    /// when OWM is on, `s` is the gradient left-multiplied by the layer's
    /// projector according to `cfg.step_rule`.
    pub fn apply_update(
        &mut self,
        grads: &Gradients,
        task_index: usize,
        cfg: &TrainConfig,
    ) -> Result<()> {
        if grads.layers.len() != self.weights.len() {
            return Err(Error::shape(
                "Mlp::apply_update",
                "gradient layer count differs",
            ));
        }
        let project = cfg.owm && (task_index > 0 || cfg.projector_mode == ProjectorMode::PerBatch);
        for l in 0..self.weights.len() {
            let g = &grads.layers[l];
            if g.shape() != self.weights[l].shape() {
                return Err(Error::shape(
                    "Mlp::apply_update",
                    format!(
                        "layer {l}: gradient {:?} vs weights {:?}",
                        g.shape(),
                        self.weights[l].shape()
                    ),
                ));
            }
            let step = if project {
                let p = &self.projectors[l];
                let scale = match cfg.step_rule {
                    StepRule::Fixed => p.alpha(),
                    StepRule::Ebp => p.ebp_learning_rate(&grads.inputs[l].row_mean())?,
                };
                project_gradient(p.matrix(), scale, g, &grads.inputs[l], &grads.deltas[l])?
            } else {
                g.clone()
            };
            let v = &mut self.momentum[l];
            v.scale_in_place(cfg.momentum);
            v.add_scaled(-cfg.learning_rate, &step)?;
            self.weights[l].add_scaled(1.0, v)?;
        }
        Ok(())
    }

    /// Absorbs one bias-augmented input per layer into the projectors.
    pub fn absorb_layer_inputs(&mut self, layer_inputs: &[Vec<f64>]) -> Result<()> {
        if layer_inputs.len() != self.projectors.len() {
            return Err(Error::shape(
                "Mlp::absorb_layer_inputs",
                "one input per layer expected",
            ));
        }
        for (l, x) in layer_inputs.iter().enumerate() {
            self.projectors[l].update(x)?;
            if let Some(rec) = &mut self.records {
                rec[l].push(x)?;
            }
        }
        Ok(())
    }

    /// End-of-task projector update: forwards each batch mean (in input
    /// space) through the network and absorbs the resulting layer inputs, in
    /// batch order. A no-op in per-batch mode.
    pub fn finish_task(&mut self, batch_means: &[Vec<f64>], mode: ProjectorMode) -> Result<()> {
        if mode == ProjectorMode::PerBatch {
            return Ok(());
        }
        for mean in batch_means {
            let row = Matrix::from_vec(1, mean.len(), mean.clone())?;
            let acts = self.forward(&row)?;
            let layer_inputs: Vec<Vec<f64>> =
                acts.inputs.iter().map(|x| x.row(0).to_vec()).collect();
            self.absorb_layer_inputs(&layer_inputs)?;
        }
        Ok(())
    }

    /// Absorbs one batch (rows in input space) into every layer's projector.
    pub fn absorb_batch(&mut self, batch: &Matrix, input: ProjectorInput) -> Result<()> {
        let layer_inputs: Vec<Vec<f64>> = match input {
            ProjectorInput::ForwardedMean => {
                let mean = batch.row_mean();
                let row = Matrix::from_vec(1, mean.len(), mean)?;
                self.forward(&row)?
                    .inputs
                    .iter()
                    .map(|x| x.row(0).to_vec())
                    .collect()
            }
            ProjectorInput::LayerMean => self
                .forward(batch)?
                .inputs
                .iter()
                .map(Matrix::row_mean)
                .collect(),
        };
        self.absorb_layer_inputs(&layer_inputs)
    }

    pub fn to_checkpoint(&self, config_hash: &str) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(CHECKPOINT_MAGIC);
        w.u32(CHECKPOINT_VERSION);
        w.str(config_hash);
        w.u64(self.specs.len() as u64);
        for (l, s) in self.specs.iter().enumerate() {
            w.u64(s.in_dim as u64);
            w.u64(s.out_dim as u64);
            w.u32(match s.activation {
                Activation::Relu => 0,
                Activation::Linear => 1,
            });
            w.matrix(&self.weights[l]);
            w.matrix(&self.momentum[l]);
            self.projectors[l].write(&mut w);
        }
        w.finish()
    }

    /// Restores a network and the config hash it was saved with.
    pub fn from_checkpoint(bytes: &[u8]) -> Result<(Mlp, String)> {
        let mut r = ByteReader::new(bytes, "model checkpoint");
        r.expect(CHECKPOINT_MAGIC, "magic")?;
        let version = r.u32("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format {
                path: "model checkpoint".into(),
                field: "version",
                reason: format!("unsupported version {version}"),
            });
        }
        let hash = r.str("config_hash")?;
        let n = r.usize("layers")?;
        let bad = |field: &'static str, reason: String| Error::Format {
            path: "model checkpoint".into(),
            field,
            reason,
        };
        let mut mlp = Mlp {
            specs: Vec::new(),
            weights: Vec::new(),
            momentum: Vec::new(),
            projectors: Vec::new(),
            records: None,
        };
        for _ in 0..n {
            let in_dim = r.usize("in_dim")?;
            let out_dim = r.usize("out_dim")?;
            let activation = match r.u32("activation")? {
                0 => Activation::Relu,
                1 => Activation::Linear,
                other => return Err(bad("activation", format!("unknown code {other}"))),
            };
            let weights = r.matrix("weights")?;
            let momentum = r.matrix("momentum")?;
            let projector = Projector::read(&mut r)?;
            if weights.shape() != (in_dim + 1, out_dim) || momentum.shape() != weights.shape() {
                return Err(bad(
                    "weights",
                    format!("shape does not match a {in_dim}->{out_dim} layer"),
                ));
            }
            if projector.dim() != in_dim + 1 {
                return Err(bad(
                    "projector",
                    format!("dimension {} for a {in_dim}-input layer", projector.dim()),
                ));
            }
            mlp.specs.push(LayerSpec::new(in_dim, out_dim, activation));
            mlp.weights.push(weights);
            mlp.momentum.push(momentum);
            mlp.projectors.push(projector);
        }
        r.finish()?;
        Ok((mlp, hash))
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"OWMC";
const CHECKPOINT_VERSION: u32 = 1;

/// `scale · P · Xᵀ Δ`, associating the product whichever way is cheaper.
fn project_gradient(
    p: &Matrix,
    scale: f64,
    g: &Matrix,
    x: &Matrix,
    delta: &Matrix,
) -> Result<Matrix> {
    let (d, o, n) = (g.rows(), g.cols(), x.rows());
    let mut out = Matrix::zeros(d, o);
    if d * n + n * o < d * o {
        let mut px = Matrix::zeros(d, n);
        linalg::gemm(scale, p, Op::N, x, Op::T, 0.0, &mut px)?;
        linalg::gemm(1.0, &px, Op::N, delta, Op::N, 0.0, &mut out)?;
    } else {
        linalg::gemm(scale, p, Op::N, g, Op::N, 0.0, &mut out)?;
    }
    Ok(out)
}

/// Training target of one sample at output width `width`: one-hot for several
/// outputs, `±1` for a single output.
fn target(label: usize, width: usize) -> impl Iterator<Item = f64> {
    (0..width).map(move |j| {
        if width == 1 {
            if label == 1 {
                1.0
            } else {
                -1.0
            }
        } else if j == label {
            1.0
        } else {
            0.0
        }
    })
}

/// Batch-mean loss and its gradient with respect to the network output.
pub fn loss_and_delta(output: &Matrix, labels: &[usize], loss: Loss) -> Result<(f64, Matrix)> {
    let (n, k) = output.shape();
    if labels.len() != n {
        return Err(Error::shape(
            "loss",
            format!("{} labels for {n} outputs", labels.len()),
        ));
    }
    let limit = if k == 1 { 2 } else { k };
    if let Some(bad) = labels.iter().find(|&&l| l >= limit) {
        return Err(Error::shape("loss", format!("label {bad} for {k} outputs")));
    }
    let inv_n = 1.0 / n as f64;
    let mut delta = Matrix::zeros(n, k);
    let mut total = 0.0;
    match loss {
        Loss::CrossEntropy => {
            if k < 2 {
                return Err(Error::shape(
                    "loss",
                    "cross entropy needs at least two outputs",
                ));
            }
            for (r, &label) in labels.iter().enumerate() {
                let p = softmax(output.row(r));
                total -= p[label].max(f64::MIN_POSITIVE).ln();
                for (j, (d, pj)) in delta.row_mut(r).iter_mut().zip(&p).enumerate() {
                    *d = (pj - f64::from(u8::from(j == label))) * inv_n;
                }
            }
        }
        Loss::Mse => {
            for (r, &label) in labels.iter().enumerate() {
                for ((d, &y), t) in delta
                    .row_mut(r)
                    .iter_mut()
                    .zip(output.row(r))
                    .zip(target(label, k))
                {
                    let e = y - t;
                    total += 0.5 * e * e;
                    *d = e * inv_n;
                }
            }
        }
    }
    Ok((total * inv_n, delta))
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Predicted class of one output row: argmax with ties to the lowest index,
/// or `output > 0` for a single output.
pub fn predict_label(row: &[f64]) -> usize {
    if row.len() == 1 {
        return usize::from(row[0] > 0.0);
    }
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

const EVAL_CHUNK: usize = 1000;

/// Optional PFC-like front end: features pass through the layer, gated by the
/// context, before reaching the network.
pub type Front<'a> = Option<(&'a ContextLayer, &'a ContextVector)>;

fn network_input(features: Matrix, front: Front<'_>) -> Result<Matrix> {
    match front {
        Some((layer, ctx)) => layer.modulate_rows(&features, ctx),
        None => Ok(features),
    }
}

/// Classification accuracy over `dataset`.
pub fn evaluate(mlp: &Mlp, dataset: &Dataset, front: Front<'_>) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::param(
            "dataset",
            "cannot evaluate on an empty dataset",
        ));
    }
    let mut correct = 0usize;
    for start in (0..dataset.len()).step_by(EVAL_CHUNK) {
        let idx: Vec<usize> = (start..(start + EVAL_CHUNK).min(dataset.len())).collect();
        let x = network_input(dataset.features.select_rows(&idx), front)?;
        let out = mlp.predict(&x)?;
        correct += idx
            .iter()
            .enumerate()
            .filter(|&(r, &i)| predict_label(out.row(r)) == dataset.labels[i])
            .count();
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// Mean loss over `indices` of `dataset`.
fn mean_loss(
    mlp: &Mlp,
    dataset: &Dataset,
    indices: &[usize],
    loss: Loss,
    front: Front<'_>,
) -> Result<f64> {
    let mut total = 0.0;
    for chunk in indices.chunks(EVAL_CHUNK) {
        let x = network_input(dataset.features.select_rows(chunk), front)?;
        let labels: Vec<usize> = chunk.iter().map(|&i| dataset.labels[i]).collect();
        let (l, _) = loss_and_delta(&mlp.predict(&x)?, &labels, loss)?;
        total += l * chunk.len() as f64;
    }
    Ok(total / indices.len() as f64)
}

/// Per-epoch progress handed to training observers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub task_index: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub holdout_loss: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskLog {
    pub name: String,
    pub epochs: Vec<EpochReport>,
    pub stopped_early: bool,
}

/// Trains `tasks` in order. See [`train_sequence_with`].
pub fn train_sequence(
    mlp: &mut Mlp,
    tasks: &[TaskSpec],
    cfg: &TrainConfig,
) -> Result<Vec<TaskLog>> {
    train_sequence_with(mlp, tasks, cfg, None, &mut |_, _| Ok(()))
}

/// Trains `tasks` strictly in order; earlier tasks are never revisited except
/// through the projector state. Each task holds out part of its training set
/// for early stopping, zeroes the momentum buffers at its start, and (in
/// per-task mode, with OWM on) absorbs its last epoch's batches at its end,
/// reduced per `cfg.projector_input`. `front` gates features of context tasks through a PFC-like
/// layer. `observer` runs after every epoch.
pub fn train_sequence_with(
    mlp: &mut Mlp,
    tasks: &[TaskSpec],
    cfg: &TrainConfig,
    front: Option<&ContextLayer>,
    observer: &mut dyn FnMut(&EpochReport, &Mlp) -> Result<()>,
) -> Result<Vec<TaskLog>> {
    cfg.validate()?;
    for t in tasks {
        check_task(mlp, t, front)?;
    }
    let mut logs = Vec::with_capacity(tasks.len());
    for (j, task) in tasks.iter().enumerate() {
        logs.push(train_task_at(mlp, task, j, cfg, front, observer)?);
    }
    Ok(logs)
}

fn check_task(mlp: &Mlp, t: &TaskSpec, front: Option<&ContextLayer>) -> Result<()> {
    t.validate(mlp.output_dim())?;
    let dim = match (&t.context, front) {
        (Some(_), Some(layer)) => {
            if layer.k() != t.train.dim() {
                return Err(Error::config(
                    &t.name,
                    "features do not match the context layer",
                ));
            }
            layer.m()
        }
        _ => t.train.dim(),
    };
    if dim != mlp.input_dim() {
        return Err(Error::config(
            &t.name,
            format!(
                "task input dimension {dim} does not match network input {}",
                mlp.input_dim()
            ),
        ));
    }
    Ok(())
}

/// Trains a single task as the `task_index`-th of a sequence (0-based).
/// Random choices are drawn from substreams of `cfg.seed` named after the
/// task index, so a sequence trained task by task matches
/// [`train_sequence_with`] exactly.
pub fn train_task_at(
    mlp: &mut Mlp,
    task: &TaskSpec,
    task_index: usize,
    cfg: &TrainConfig,
    front: Option<&ContextLayer>,
    observer: &mut dyn FnMut(&EpochReport, &Mlp) -> Result<()>,
) -> Result<TaskLog> {
    cfg.validate()?;
    check_task(mlp, task, front)?;
    let j = task_index;
    let streams = SeedStream::new(cfg.seed);
    let task_front = match (&task.context, front) {
        (Some(ctx), Some(layer)) => Some((layer, ctx)),
        _ => None,
    };
    mlp.reset_momentum();
    let ds = &task.train;
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut streams.rng(&format!("holdout/{j}")));
    let n_hold = cfg
        .early_stopping
        .map_or(0, |es| (ds.len() as f64 * es.holdout).floor() as usize);
    let (held, train_idx) = order.split_at(n_hold);
    let mut train_idx = train_idx.to_vec();
    let mut rng = streams.rng(&format!("batches/{j}"));

    let mut log = TaskLog {
        name: task.name.clone(),
        ..TaskLog::default()
    };
    let mut best = f64::INFINITY;
    let mut stale = 0;
    for epoch in 0..cfg.epochs_per_task {
        train_idx.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in train_idx.chunks(cfg.batch_size) {
            let raw = ds.features.select_rows(batch);
            let labels: Vec<usize> = batch.iter().map(|&i| ds.labels[i]).collect();
            let x = network_input(raw, task_front)?;
            let acts = mlp.forward(&x)?;
            correct += (0..batch.len())
                .filter(|&r| predict_label(acts.output().row(r)) == labels[r])
                .count();
            let grads = mlp.backward(&acts, &labels, task.loss)?;
            loss_sum += grads.loss * batch.len() as f64;
            mlp.apply_update(&grads, j, cfg)?;
            if cfg.owm && cfg.projector_mode == ProjectorMode::PerBatch {
                mlp.absorb_batch(&x, cfg.projector_input)?;
            }
        }
        let train_loss = loss_sum / train_idx.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Divergence(format!(
                "task {} epoch {epoch}: training loss is {train_loss}",
                task.name
            )));
        }
        let holdout_loss = if held.is_empty() {
            None
        } else {
            Some(mean_loss(mlp, ds, held, task.loss, task_front)?)
        };
        let report = EpochReport {
            task_index: j,
            epoch,
            train_loss,
            train_accuracy: correct as f64 / train_idx.len() as f64,
            holdout_loss,
        };
        observer(&report, mlp)?;
        log.epochs.push(report);
        if let (Some(h), Some(es)) = (holdout_loss, cfg.early_stopping) {
            if h < best {
                best = h;
                stale = 0;
            } else {
                stale += 1;
                if stale >= es.patience {
                    log.stopped_early = true;
                    break;
                }
            }
        }
    }
    if cfg.owm && cfg.projector_mode == ProjectorMode::PerTask {
        // The last epoch's batches, scored with the final weights.
        for batch in train_idx.chunks(cfg.batch_size) {
            let x = network_input(ds.features.select_rows(batch), task_front)?;
            mlp.absorb_batch(&x, cfg.projector_input)?;
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    use crate::tasks::TaskKind;

    fn net(widths: &[usize], seed: u64) -> Mlp {
        Mlp::new(&LayerSpec::chain(widths).unwrap(), seed).unwrap()
    }

    fn randomize(mlp: &mut Mlp, seed: u64) {
        let mut rng = SeedStream::new(seed).rng("weights");
        for w in mlp.weights_mut() {
            for v in w.as_mut_slice() {
                *v = rng.random::<f64>() - 0.5;
            }
        }
    }

    fn batch(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = SeedStream::new(seed).rng("batch");
        Matrix::from_fn(n, d, |_, _| rng.random::<f64>())
    }

    fn batch_loss(mlp: &Mlp, x: &Matrix, labels: &[usize], loss: Loss) -> f64 {
        loss_and_delta(&mlp.predict(x).unwrap(), labels, loss)
            .unwrap()
            .0
    }

    #[test]
    fn init_statistics() {
        let mlp = net(&[784, 800, 10], 7);
        let w = &mlp.weights()[0];
        let body = &w.as_slice()[..784 * 800];
        let mean = body.iter().sum::<f64>() / body.len() as f64;
        let var = body.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / body.len() as f64;
        let expect = 2.0 / 784.0;
        assert!((var - expect).abs() < 0.2 * expect, "variance {var}");
        let out = &mlp.weights()[1];
        assert!(out.as_slice()[..800 * 10].iter().all(|&v| v == 0.0));
        for w in mlp.weights() {
            assert!(w.row(w.rows() - 1).iter().all(|&b| (0.0..0.1).contains(&b)));
        }
        assert_eq!(mlp, net(&[784, 800, 10], 7));
        assert!(Mlp::new(&[], 1).is_err());
        assert!(Mlp::new(
            &[
                LayerSpec::new(3, 4, Activation::Relu),
                LayerSpec::new(5, 2, Activation::Linear)
            ],
            1
        )
        .is_err());
    }

    #[test]
    fn forward_reductions() {
        let mut mlp = net(&[3, 2], 1);
        for v in mlp.weights_mut()[0].as_mut_slice() {
            *v = 0.0;
        }
        let x = batch(4, 3, 2);
        assert!(mlp
            .predict(&x)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));

        randomize(&mut mlp, 3);
        let expect = linalg::matmul(&x.with_constant_column(1.0), &mlp.weights()[0]).unwrap();
        assert_eq!(mlp.predict(&x).unwrap(), expect);
        assert!(mlp.forward(&batch(2, 4, 1)).is_err());
    }

    #[test]
    fn relu_zeroes_negative_and_zero_preactivations() {
        let mut mlp = net(&[2, 3, 2], 1);
        // Hidden pre-activations for input [1, 1]: -1, 0, 2.
        let w0 = Matrix::from_rows(&[[-1.0, 0.5, 1.0], [0.0, -0.5, 1.0], [0.0, 0.0, 0.0]]).unwrap();
        mlp.weights_mut()[0] = w0;
        randomize_layer(&mut mlp, 1);
        let x = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        let acts = mlp.forward(&x).unwrap();
        assert_eq!(acts.pre[0].row(0), &[-1.0, 0.0, 2.0]);
        assert_eq!(&acts.inputs[1].row(0)[..3], &[0.0, 0.0, 2.0]);
        let g = mlp.backward(&acts, &[1], Loss::CrossEntropy).unwrap();
        for r in 0..3 {
            assert_eq!(g.layers[0][(r, 0)], 0.0);
            assert_eq!(g.layers[0][(r, 1)], 0.0, "ReLU'(0) must be 0");
        }
    }

    fn randomize_layer(mlp: &mut Mlp, l: usize) {
        let mut rng = SeedStream::new(9).rng("layer");
        for v in mlp.weights_mut()[l].as_mut_slice() {
            *v = rng.random::<f64>() - 0.5;
        }
    }

    #[test]
    fn softmax_closed_form() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        let out = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        let (_, d) = loss_and_delta(&out, &[1], Loss::CrossEntropy).unwrap();
        assert_eq!(d.row(0), &[0.5, -0.5]);
    }

    #[test]
    fn mse_zero_at_target() {
        let mut mlp = net(&[3, 4, 2], 1);
        for w in mlp.weights_mut() {
            w.scale_in_place(0.0);
        }
        let x = batch(5, 3, 4);
        let acts = mlp.forward(&x).unwrap();
        // Zero outputs match one-hot targets only off the label; use an
        // all-zero target through the loss directly.
        let (l, d) = loss_and_delta(&Matrix::zeros(2, 3), &[0, 0], Loss::Mse).unwrap();
        assert_eq!(l, 0.5);
        assert_eq!(d.row(0), &[-0.5, 0.0, 0.0]);
        let g = mlp.backward(&acts, &[0; 5], Loss::Mse).unwrap();
        assert!(
            g.layers[0].as_slice().iter().all(|&v| v == 0.0),
            "dead hidden layer"
        );
    }

    fn finite_difference_check(loss: Loss, widths: &[usize]) -> f64 {
        let mut mlp = net(widths, 11);
        randomize(&mut mlp, 12);
        let x = batch(7, widths[0], 13);
        let classes = *widths.last().unwrap();
        let labels: Vec<usize> = (0..7).map(|i| i % classes.max(2)).collect();
        let grads = mlp
            .backward(&mlp.forward(&x).unwrap(), &labels, loss)
            .unwrap();
        let eps = 1e-5;
        let mut worst = 0.0f64;
        for l in 0..mlp.weights().len() {
            for i in 0..mlp.weights()[l].as_slice().len() {
                let orig = mlp.weights()[l].as_slice()[i];
                mlp.weights_mut()[l].as_mut_slice()[i] = orig + eps;
                let up = batch_loss(&mlp, &x, &labels, loss);
                mlp.weights_mut()[l].as_mut_slice()[i] = orig - eps;
                let down = batch_loss(&mlp, &x, &labels, loss);
                mlp.weights_mut()[l].as_mut_slice()[i] = orig;
                let fd = (up - down) / (2.0 * eps);
                worst = worst.max((fd - grads.layers[l].as_slice()[i]).abs());
            }
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for loss in [Loss::CrossEntropy, Loss::Mse] {
            for widths in [&[6, 4, 3][..], &[5, 4, 4, 3, 3]] {
                let err = finite_difference_check(loss, widths);
                assert!(err <= 1e-6, "{loss:?} {widths:?}: {err}");
            }
        }
        assert!(finite_difference_check(Loss::Mse, &[4, 3, 1]) <= 1e-6);
    }

    #[test]
    fn first_task_is_plain_momentum_sgd() {
        let cfg = TrainConfig {
            momentum: 0.5,
            ..TrainConfig::default()
        };
        let mut mlp = net(&[4, 3, 2], 1);
        randomize(&mut mlp, 2);
        let x = batch(6, 4, 3);
        let labels = [0, 1, 0, 1, 1, 0];
        let before = mlp.clone();
        let g = mlp
            .backward(&mlp.forward(&x).unwrap(), &labels, Loss::CrossEntropy)
            .unwrap();
        mlp.apply_update(&g, 0, &cfg).unwrap();
        for l in 0..2 {
            let expect = before.weights()[l]
                .sub(&g.layers[l].scale(cfg.learning_rate))
                .unwrap();
            assert_eq!(mlp.weights()[l], expect);
            assert_eq!(mlp.momentum()[l], g.layers[l].scale(-cfg.learning_rate));
        }
        // A second step carries momentum.
        let g2 = mlp
            .backward(&mlp.forward(&x).unwrap(), &labels, Loss::CrossEntropy)
            .unwrap();
        let w1 = mlp.weights()[1].clone();
        let v1 = mlp.momentum()[1].clone();
        mlp.apply_update(&g2, 0, &cfg).unwrap();
        let mut v2 = v1.scale(0.5);
        v2.add_scaled(-cfg.learning_rate, &g2.layers[1]).unwrap();
        assert_eq!(mlp.momentum()[1], v2);
        assert_eq!(mlp.weights()[1], w1.add(&v2).unwrap());
    }

    #[test]
    fn identity_projector_matches_first_task_step() {
        let cfg = TrainConfig::default();
        let mut a = net(&[4, 3, 2], 1).with_projectors(1.0, 1.0).unwrap();
        randomize(&mut a, 2);
        let mut b = a.clone();
        let x = batch(6, 4, 3);
        let g = a
            .backward(
                &a.forward(&x).unwrap(),
                &[0, 1, 0, 1, 1, 0],
                Loss::CrossEntropy,
            )
            .unwrap();
        a.apply_update(&g, 0, &cfg).unwrap();
        b.apply_update(&g, 1, &cfg).unwrap();
        for l in 0..2 {
            let diff = a.weights()[l]
                .sub(&b.weights()[l])
                .unwrap()
                .frobenius_norm();
            assert!(diff < 1e-15, "{diff}");
        }
    }

    #[test]
    fn projector_blocks_trained_direction() {
        let alpha = 1e-6;
        let cfg = TrainConfig {
            momentum: 0.0,
            ..TrainConfig::default()
        };
        let mut mlp = net(&[3, 2], 1).with_projectors(alpha, 1.0).unwrap();
        let e1 = [1.0, 0.0, 0.0, 0.0];
        mlp.projectors_mut()[0].update(&e1).unwrap();
        let before = mlp.weights()[0].clone();
        let x = batch(5, 3, 2);
        let g = mlp
            .backward(
                &mlp.forward(&x).unwrap(),
                &[0, 1, 1, 0, 1],
                Loss::CrossEntropy,
            )
            .unwrap();
        mlp.apply_update(&g, 1, &cfg).unwrap();
        let delta = mlp.weights()[0].sub(&before).unwrap();
        let row1 = linalg::norm(delta.row(0));
        let tol = 2.0 * alpha * cfg.learning_rate * g.layers[0].frobenius_norm();
        assert!(row1 <= tol, "{row1} > {tol}");
        assert!(linalg::norm(delta.row(1)) > 1e3 * tol);
    }

    #[test]
    fn factored_projection_matches_direct() {
        let mut mlp = net(&[30, 20, 3], 4);
        randomize(&mut mlp, 6);
        let x = batch(4, 30, 5);
        let mut p = Projector::new(31, 1e-2).unwrap();
        for r in 0..3 {
            p.update(x.with_constant_column(1.0).row(r)).unwrap();
        }
        let g = mlp
            .backward(&mlp.forward(&x).unwrap(), &[0, 1, 2, 0], Loss::CrossEntropy)
            .unwrap();
        let fast =
            project_gradient(p.matrix(), 0.5, &g.layers[0], &g.inputs[0], &g.deltas[0]).unwrap();
        let direct = p.matrix().scale(0.5);
        let direct = linalg::matmul(&direct, &g.layers[0]).unwrap();
        let err = fast.sub(&direct).unwrap().frobenius_norm() / direct.frobenius_norm();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn finish_task_matches_direct_projector() {
        let alpha = 1e-3;
        let mut mlp = net(&[5, 2], 1).with_projectors(alpha, 1.0).unwrap();
        let mean = vec![0.2, 0.4, 0.1, 0.9, 0.3];
        mlp.finish_task(std::slice::from_ref(&mean), ProjectorMode::PerTask)
            .unwrap();
        let mut rec = InputRecord::new(6);
        let mut aug = mean.clone();
        aug.push(1.0);
        rec.push(&aug).unwrap();
        let direct = Projector::direct(&rec, alpha, 6).unwrap();
        let err = mlp.projectors()[0]
            .matrix()
            .sub(direct.matrix())
            .unwrap()
            .frobenius_norm()
            / direct.matrix().frobenius_norm();
        assert!(err < 1e-9, "{err}");

        let snapshot = mlp.projectors()[0].normalized();
        mlp.finish_task(std::slice::from_ref(&mean), ProjectorMode::PerTask)
            .unwrap();
        let change = mlp.projectors()[0]
            .normalized()
            .sub(&snapshot)
            .unwrap()
            .frobenius_norm();
        assert!(change <= 10.0 * alpha, "{change}");

        let before = mlp.clone();
        mlp.finish_task(&[mean], ProjectorMode::PerBatch).unwrap();
        assert_eq!(mlp, before);
    }

    #[test]
    fn absorb_batch_reductions() {
        let x = batch(12, 5, 4);
        let single = net(&[5, 3], 1).with_projectors(1e-2, 1.0).unwrap();
        let (mut a, mut b) = (single.clone(), single);
        a.absorb_batch(&x, ProjectorInput::ForwardedMean).unwrap();
        b.absorb_batch(&x, ProjectorInput::LayerMean).unwrap();
        assert_eq!(a.projectors(), b.projectors());

        let deep = net(&[5, 6, 3], 2).with_projectors(1e-2, 1.0).unwrap();
        let acts = deep.forward(&x).unwrap();
        let mut oracle = deep.projectors().to_vec();
        for (p, inputs) in oracle.iter_mut().zip(&acts.inputs) {
            p.update(&inputs.row_mean()).unwrap();
        }
        let mut layer = deep.clone();
        layer.absorb_batch(&x, ProjectorInput::LayerMean).unwrap();
        for (got, want) in layer.projectors().iter().zip(&oracle) {
            assert!(got.matrix().sub(want.matrix()).unwrap().frobenius_norm() < 1e-12);
        }

        let mut forwarded = deep;
        forwarded
            .absorb_batch(&x, ProjectorInput::ForwardedMean)
            .unwrap();
        assert_eq!(forwarded.projectors()[0], layer.projectors()[0]);
        assert_ne!(forwarded.projectors()[1], layer.projectors()[1]);
    }

    #[test]
    fn evaluation_rules() {
        assert_eq!(predict_label(&[0.3, 0.3, 0.1]), 0);
        assert_eq!(predict_label(&[0.1, 0.3, 0.3]), 1);
        assert_eq!(predict_label(&[0.0]), 0);
        assert_eq!(predict_label(&[1e-9]), 1);

        let mlp = net(&[3, 4, 5], 2);
        let x = batch(100, 3, 8);
        let out = mlp.predict(&x).unwrap();
        let labels: Vec<usize> = (0..100).map(|i| (i * 7) % 5).collect();
        let oracle = (0..100)
            .filter(|&r| {
                let row = out.row(r);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                row.iter().position(|&v| v == max).unwrap() == labels[r]
            })
            .count();
        let ds = Dataset::new(x, labels, 5).unwrap();
        assert_eq!(evaluate(&mlp, &ds, None).unwrap(), oracle as f64 / 100.0);

        // Zero output weights: constant prediction, chance on balanced labels.
        let x = batch(100, 3, 9);
        let ds = Dataset::new(x, (0..100).map(|i| i % 10).collect(), 10).unwrap();
        let mut flat = net(&[3, 10], 1);
        flat.weights_mut()[0].scale_in_place(0.0);
        assert_eq!(evaluate(&flat, &ds, None).unwrap(), 0.1);
    }

    /// Label `x0 + x1 > 1`, with a margin of 0.05 around the boundary.
    fn separable(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = SeedStream::new(seed).rng("separable");
        let mut rows = Vec::with_capacity(n);
        while rows.len() < n {
            let r: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            if (r[0] + r[1] - 1.0).abs() >= 0.05 {
                rows.push(r);
            }
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let labels = (0..n)
            .map(|r| usize::from(x.row(r)[0] + x.row(r)[1] > 1.0))
            .collect();
        Dataset::new(x, labels, 2).unwrap()
    }

    fn task(name: &str, train: Dataset, loss: Loss) -> TaskSpec {
        TaskSpec {
            kind: TaskKind::Shuffled,
            name: name.into(),
            test: train.clone(),
            active_outputs: (0..train.num_classes).collect::<BTreeSet<_>>(),
            train,
            context: None,
            loss,
        }
    }

    #[test]
    fn single_task_learns_separable_set() {
        let ds = separable(500, 6, 1);
        let mut mlp = net(&[6, 32, 2], 3);
        let cfg = TrainConfig {
            epochs_per_task: 60,
            early_stopping: None,
            ..TrainConfig::default()
        };
        train_sequence(&mut mlp, &[task("a", ds.clone(), Loss::CrossEntropy)], &cfg).unwrap();
        let acc = evaluate(&mlp, &ds, None).unwrap();
        assert!(acc >= 0.99, "{acc}");
    }

    #[test]
    fn training_is_deterministic() {
        let tasks = [
            task("a", separable(200, 6, 1), Loss::CrossEntropy),
            task("b", separable(200, 6, 2), Loss::CrossEntropy),
        ];
        let cfg = TrainConfig {
            epochs_per_task: 3,
            ..TrainConfig::default()
        };
        let run = || {
            let mut mlp = net(&[6, 16, 2], 5);
            let logs = train_sequence(&mut mlp, &tasks, &cfg).unwrap();
            (mlp, logs)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn later_task_leaves_old_batch_means_alone() {
        let alpha = 1e-5;
        let a = separable(200, 8, 1);
        let b_ds = {
            let x = batch(200, 8, 2);
            let labels = (0..200).map(|r| usize::from(x.row(r)[3] > 0.5)).collect();
            Dataset::new(x, labels, 2).unwrap()
        };
        let cfg = TrainConfig {
            epochs_per_task: 4,
            early_stopping: None,
            ..TrainConfig::default()
        };
        let mut mlp = net(&[8, 16, 2], 1)
            .with_projectors(alpha, 1.0)
            .unwrap()
            .retain_inputs();
        train_sequence(&mut mlp, &[task("a", a, Loss::CrossEntropy)], &cfg).unwrap();
        let stored: Vec<Vec<Vec<f64>>> = mlp
            .records()
            .unwrap()
            .iter()
            .map(|r| r.columns().to_vec())
            .collect();
        let before = mlp.weights().to_vec();
        let mut cfg2 = cfg.clone();
        cfg2.seed = 1;
        // Task index 1 of a two-task sequence: reuse the trained net.
        let tasks = [
            task("a", separable(10, 8, 9), Loss::CrossEntropy),
            task("b", b_ds, Loss::CrossEntropy),
        ];
        let mut shifted = mlp.clone();
        // Train only the second task, with the projectors from the first.
        train_tail(&mut shifted, &tasks, &cfg2);
        for l in 0..2 {
            let dw = shifted.weights()[l].sub(&before[l]).unwrap();
            let dw_norm = dw.frobenius_norm();
            assert!(dw_norm > 1e-3, "layer {l} did not move");
            for x in &stored[l] {
                let moved = linalg::matvec(&dw.transpose(), x).unwrap();
                // c = 100: the constant grows as the stored means approach
                // linear dependence, and these are means of 40 uniform draws.
                let bound = 100.0 * alpha * linalg::norm(x) * dw_norm;
                assert!(
                    linalg::norm(&moved) <= bound,
                    "layer {l}: {} > {bound}",
                    linalg::norm(&moved)
                );
            }
        }
    }

    fn train_tail(mlp: &mut Mlp, tasks: &[TaskSpec], cfg: &TrainConfig) {
        // Runs the sequence from task 1 onward with the task index preserved.
        let streams = SeedStream::new(cfg.seed);
        let t = &tasks[1];
        mlp.reset_momentum();
        let mut rng = streams.rng("tail");
        let mut idx: Vec<usize> = (0..t.train.len()).collect();
        for _ in 0..cfg.epochs_per_task {
            idx.shuffle(&mut rng);
            for b in idx.chunks(cfg.batch_size) {
                let x = t.train.features.select_rows(b);
                let labels: Vec<usize> = b.iter().map(|&i| t.train.labels[i]).collect();
                let g = mlp
                    .backward(&mlp.forward(&x).unwrap(), &labels, t.loss)
                    .unwrap();
                mlp.apply_update(&g, 1, cfg).unwrap();
            }
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut mlp = net(&[5, 4, 3], 2).with_projectors(1e-2, 0.99).unwrap();
        randomize(&mut mlp, 1);
        mlp.projectors_mut()[1]
            .update(&[0.1, 0.2, 0.3, 0.4, 1.0])
            .unwrap();
        mlp.momentum[0].as_mut_slice()[3] = 0.25;
        let bytes = mlp.to_checkpoint("abc123");
        let (back, hash) = Mlp::from_checkpoint(&bytes).unwrap();
        assert_eq!(hash, "abc123");
        assert_eq!(back, mlp);
        assert_eq!(back.to_checkpoint("abc123"), bytes);
        assert!(Mlp::from_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            Mlp::from_checkpoint(&bad),
            Err(Error::Format { field: "magic", .. })
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let ds = separable(100, 6, 1);
        let cfg = TrainConfig {
            learning_rate: 1e6,
            epochs_per_task: 20,
            early_stopping: None,
            ..TrainConfig::default()
        };
        let mut mlp = net(&[6, 8, 2], 1);
        randomize(&mut mlp, 4);
        let err = train_sequence(&mut mlp, &[task("a", ds, Loss::Mse)], &cfg).unwrap_err();
        assert_eq!(err.category(), "divergence");
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            momentum: 1.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let mut mlp = net(&[6, 2], 1);
        let wrong = task("w", separable(20, 5, 1), Loss::CrossEntropy);
        let err = train_sequence(&mut mlp, &[wrong], &TrainConfig::default()).unwrap_err();
        assert_eq!(err.category(), "config");
    }
}
