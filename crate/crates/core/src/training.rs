//! Losses, Adam and the mini-batch training loop.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gwm::{Evaluator, GradientAccumulator, GwmModel, SiteGradients};
use crate::languages::{Dataset, LabeledExample};
use crate::picture::{Picture, BLACK, WHITE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    /// Mean squared error on the raw model output.
    Mse,
    /// Binary cross-entropy on the sigmoid of the model output.
    CrossEntropy,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::CrossEntropy => "ce",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(LossKind::Mse),
            "ce" => Ok(LossKind::CrossEntropy),
            _ => Err(Error::InvalidParameter(format!("unknown loss {s:?}, expected mse or ce"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Batching {
    /// Every mini-batch is drawn uniformly with replacement from the training set.
    WithReplacement,
    /// The training set is reshuffled each epoch and cut into consecutive batches.
    Epochs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    Iterations(usize),
    Epochs(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub alphabet: Vec<char>,
    pub init_std: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub budget: Budget,
    pub batching: Batching,
    pub loss: LossKind,
    /// Global-norm clipping threshold.
    pub clip: Option<f64>,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Evaluate the held-out sets every this many iterations (and after the last one).
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 6,
            alphabet: vec![WHITE, BLACK],
            init_std: 0.4,
            learning_rate: 0.01,
            batch_size: 100,
            budget: Budget::Iterations(1000),
            batching: Batching::WithReplacement,
            loss: LossKind::Mse,
            clip: None,
            seed: 0,
            adam: AdamConfig::default(),
            log_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.dim == 0 {
            return bad("dimension must be at least 1".into());
        }
        if !(self.init_std > 0.0 && self.init_std.is_finite()) {
            return bad(format!("init std must be positive, got {}", self.init_std));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be non-negative, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.log_every == 0 {
            return bad("logging interval must be at least 1".into());
        }
        let AdamConfig { beta1, beta2, eps } = self.adam;
        if !(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0) {
            return bad(format!("Adam betas must lie in (0, 1), got {beta1}, {beta2}"));
        }
        if !(eps > 0.0) {
            return bad(format!("Adam epsilon must be positive, got {eps}"));
        }
        if let Some(c) = self.clip {
            if !(c > 0.0) {
                return bad(format!("clip threshold must be positive, got {c}"));
            }
        }
        Ok(())
    }

    /// Total number of optimizer steps on a training set of `n` examples.
    pub fn iterations(&self, n: usize) -> usize {
        match self.budget {
            Budget::Iterations(t) => t,
            Budget::Epochs(e) => e * n.div_ceil(self.batch_size),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Loss of a single prediction and its derivative with respect to the prediction.
fn pointwise(kind: LossKind, f: f64, y: f64) -> (f64, f64) {
    match kind {
        LossKind::Mse => ((f - y) * (f - y), 2.0 * (f - y)),
        LossKind::CrossEntropy => (softplus(f) - y * f, sigmoid(f) - y),
    }
}

fn check_labels(kind: LossKind, batch: &[LabeledExample]) -> Result<()> {
    if kind == LossKind::CrossEntropy {
        if let Some(e) = batch.iter().find(|e| e.label != 0.0 && e.label != 1.0) {
            return Err(Error::LabelDomain(e.label));
        }
    }
    Ok(())
}

/// Mean loss over `batch` and its gradient. Each distinct picture is contracted once.
pub fn loss_and_gradient(
    model: &GwmModel,
    kind: LossKind,
    batch: &[LabeledExample],
) -> Result<(f64, GradientAccumulator)> {
    if batch.is_empty() {
        return Err(Error::InvalidParameter("empty batch".into()));
    }
    check_labels(kind, batch)?;
    let evaluator = Evaluator::new(model);
    let mut slot: HashMap<&Picture, usize> = HashMap::new();
    let mut tapes = Vec::new();
    let mut seeds = Vec::new();
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for e in batch {
        let k = match slot.get(&e.picture) {
            Some(&k) => k,
            None => {
                tapes.push(evaluator.forward_taped(&e.picture)?);
                seeds.push(0.0);
                slot.insert(&e.picture, tapes.len() - 1);
                tapes.len() - 1
            }
        };
        let (l, dl) = pointwise(kind, tapes[k].value(), e.label);
        loss += l;
        seeds[k] += dl * scale;
    }
    let mut site_grads = SiteGradients::default();
    for (tape, &seed) in tapes.iter().zip(&seeds) {
        if seed != 0.0 {
            evaluator.backward(tape, seed, &mut site_grads);
        }
    }
    Ok((loss * scale, evaluator.finish(&site_grads)))
}

/// Mean squared error of the model outputs against the labels, with its gradient.
pub fn mse_loss(model: &GwmModel, batch: &[LabeledExample]) -> Result<(f64, GradientAccumulator)> {
    loss_and_gradient(model, LossKind::Mse, batch)
}

/// Binary cross-entropy with `sigmoid(f)` as the positive-class probability.
pub fn ce_loss(model: &GwmModel, batch: &[LabeledExample]) -> Result<(f64, GradientAccumulator)> {
    loss_and_gradient(model, LossKind::CrossEntropy, batch)
}

/// Rescales `grads` to norm `threshold` when its global L2 norm exceeds it.
pub fn clip_gradients(grads: &mut GradientAccumulator, threshold: f64) {
    let norm = grads.norm();
    if norm > threshold {
        grads.scale(threshold / norm);
    }
}

/// First and second moment estimates, one block per parameter block.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(model: &GwmModel) -> Self {
        let zeros: Vec<Vec<f64>> = model.parameters().map(|b| vec![0.0; b.len()]).collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update of every parameter.
pub fn adam_step(
    model: &mut GwmModel,
    state: &mut AdamState,
    grads: &GradientAccumulator,
    learning_rate: f64,
    adam: &AdamConfig,
) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - adam.beta1.powi(t);
    let c2 = 1.0 - adam.beta2.powi(t);
    for (((theta, g), m), v) in model
        .parameters_mut()
        .zip(grads.blocks())
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        assert_eq!(theta.len(), g.len(), "gradient shape does not match the model");
        for k in 0..theta.len() {
            m[k] = adam.beta1 * m[k] + (1.0 - adam.beta1) * g[k];
            v[k] = adam.beta2 * v[k] + (1.0 - adam.beta2) * g[k] * g[k];
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            theta[k] -= learning_rate * m_hat / (v_hat.sqrt() + adam.eps);
        }
    }
}

/// Positive iff the raw output is strictly above `threshold`.
pub fn classify_regression(value: f64, threshold: f64) -> bool {
    value > threshold
}

/// Positive iff `sigmoid(value) >= 0.5`, i.e. `value >= 0`.
pub fn classify_sigmoid(value: f64) -> bool {
    sigmoid(value) >= 0.5
}

pub fn classify(kind: LossKind, value: f64) -> bool {
    match kind {
        LossKind::Mse => classify_regression(value, 0.5),
        LossKind::CrossEntropy => classify_sigmoid(value),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub loss: f64,
    pub accuracy: f64,
}

/// Model outputs on `pictures`, contracting each distinct picture once.
pub fn predict<'p>(model: &GwmModel, pictures: impl IntoIterator<Item = &'p Picture>) -> Result<Vec<f64>> {
    let evaluator = Evaluator::new(model);
    let mut cache: HashMap<&Picture, f64> = HashMap::new();
    let mut out = Vec::new();
    for p in pictures {
        let v = match cache.get(p) {
            Some(&v) => v,
            None => {
                let v = evaluator.value(p)?;
                cache.insert(p, v);
                v
            }
        };
        out.push(v);
    }
    Ok(out)
}

/// Mean loss and classification accuracy on a whole dataset.
pub fn evaluate_dataset(model: &GwmModel, kind: LossKind, data: &Dataset) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::InvalidParameter("empty dataset".into()));
    }
    check_labels(kind, &data.examples)?;
    let values = predict(model, data.pictures())?;
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (e, &f) in data.examples.iter().zip(&values) {
        loss += pointwise(kind, f, e.label).0;
        if classify(kind, f) == e.is_positive() {
            correct += 1;
        }
    }
    let n = data.len() as f64;
    Ok(Metrics {
        loss: loss / n,
        accuracy: correct as f64 / n,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub iteration: usize,
    /// Loss on the mini-batch of this iteration, before the update.
    pub train_loss: f64,
    /// Metrics on each evaluation set, in the order they were given.
    pub evals: Vec<Metrics>,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub eval_names: Vec<String>,
    pub records: Vec<Record>,
    pub model: GwmModel,
    pub iterations: usize,
}

/// Whether the loop keeps going after a logging step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

impl TrainReport {
    pub fn csv_header(&self) -> String {
        let mut h = String::from("iteration,train_loss");
        for name in &self.eval_names {
            write!(h, ",{name}_loss,{name}_accuracy").unwrap();
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for r in &self.records {
            write!(out, "{},{}", r.iteration, r.train_loss).unwrap();
            for m in &r.evals {
                write!(out, ",{},{}", m.loss, m.accuracy).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }
}

pub fn train(config: &TrainConfig, train_set: &Dataset, eval_sets: &[(&str, &Dataset)]) -> Result<TrainReport> {
    train_with_observer(config, train_set, eval_sets, |_, _| Control::Continue)
}

/// Runs the training loop, handing every logged record and the current model to
/// `observer`.
pub fn train_with_observer(
    config: &TrainConfig,
    train_set: &Dataset,
    eval_sets: &[(&str, &Dataset)],
    mut observer: impl FnMut(&Record, &GwmModel) -> Control,
) -> Result<TrainReport> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidParameter("training set is empty".into()));
    }
    check_labels(config.loss, &train_set.examples)?;
    for (_, d) in eval_sets {
        check_labels(config.loss, &d.examples)?;
    }
    let mut model = GwmModel::random_init(config.dim, &config.alphabet, config.init_std, config.seed)?;
    let mut adam = AdamState::new(&model);
    // the batch stream gets its own generator so that it does not depend on the model size
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = train_set.len();
    let total = config.iterations(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n;
    let mut records = Vec::new();
    let mut batch = Vec::with_capacity(config.batch_size);

    for iteration in 1..=total {
        batch.clear();
        match config.batching {
            Batching::WithReplacement => {
                for _ in 0..config.batch_size {
                    batch.push(train_set.examples[rng.random_range(0..n)].clone());
                }
            }
            Batching::Epochs => {
                if cursor >= n {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                let end = (cursor + config.batch_size).min(n);
                batch.extend(order[cursor..end].iter().map(|&k| train_set.examples[k].clone()));
                cursor = end;
            }
        }
        let (loss, mut grads) = loss_and_gradient(&model, config.loss, &batch)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { iteration, loss });
        }
        if let Some(c) = config.clip {
            clip_gradients(&mut grads, c);
        }
        adam_step(&mut model, &mut adam, &grads, config.learning_rate, &config.adam);

        if iteration % config.log_every == 0 || iteration == total {
            let evals = eval_sets
                .iter()
                .map(|(_, d)| evaluate_dataset(&model, config.loss, d))
                .collect::<Result<Vec<_>>>()?;
            let record = Record {
                iteration,
                train_loss: loss,
                evals,
            };
            let control = observer(&record, &model);
            records.push(record);
            if control == Control::Stop {
                break;
            }
        }
    }
    Ok(TrainReport {
        eval_names: eval_sets.iter().map(|(name, _)| name.to_string()).collect(),
        records,
        model,
        iterations: total,
    })
}
