//! Desk-scale classifier: softmax regression (`hidden = 0`) or a single tanh
//! hidden layer, trained with mini-batch cross-entropy.
//!
//! Plain training logs one [`DynamicsRecord`] per sample at the end of every
//! epoch. Mixed training adds a soft-label cross-entropy term over MixUp
//! pairs, interpolated either on the inputs or on the hidden activations.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Sample};
use crate::dynamics::{DynamicsLog, DynamicsRecord, SampleId};
use crate::error::{Error, Result};
use crate::mixup::{
    build_random_schedule, build_td_schedule, mix_pair, MixSpace, MixupConfig, ScheduledPair,
};
use crate::numeric::{one_hot, softmax_in_place};

const LOG_FLOOR: f64 = 1e-12;
const CHECKPOINT_MAGIC: &str = "tdmixup-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

/// Flat parameter vector with a fixed layout:
/// `[w1 (hidden x input), b1 (hidden), w2 (classes x rep), b2 (classes)]`
/// where `rep` is `hidden`, or `input_dim` for the linear model (which has no
/// `w1`/`b1`). Matrices are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub input_dim: usize,
    pub hidden: usize,
    pub classes: usize,
    pub values: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(input_dim: usize, hidden: usize, classes: usize) -> Self {
        let n = Self::count(input_dim, hidden, classes);
        ModelParams {
            input_dim,
            hidden,
            classes,
            values: vec![0.0; n],
        }
    }

    fn count(input_dim: usize, hidden: usize, classes: usize) -> usize {
        let rep = if hidden == 0 { input_dim } else { hidden };
        hidden * input_dim + hidden + classes * rep + classes
    }

    /// Uniform in `[-s, s]` with `s = 1 / sqrt(fan_in)` for every weight and bias.
    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: usize,
        classes: usize,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(input_dim, hidden, classes);
        let s1 = 1.0 / (input_dim.max(1) as f64).sqrt();
        let s2 = 1.0 / (p.rep_dim().max(1) as f64).sqrt();
        let hidden_len = hidden * input_dim + hidden;
        for (i, v) in p.values.iter_mut().enumerate() {
            let s = if i < hidden_len { s1 } else { s2 };
            *v = rng.random_range(-s..=s);
        }
        p
    }

    /// Width of the representation fed to the output layer.
    pub fn rep_dim(&self) -> usize {
        if self.hidden == 0 {
            self.input_dim
        } else {
            self.hidden
        }
    }

    fn w1_len(&self) -> usize {
        self.hidden * self.input_dim
    }

    fn out_offset(&self) -> usize {
        self.w1_len() + self.hidden
    }

    pub fn w1(&self) -> &[f64] {
        &self.values[..self.w1_len()]
    }

    pub fn b1(&self) -> &[f64] {
        &self.values[self.w1_len()..self.out_offset()]
    }

    pub fn w2(&self) -> &[f64] {
        let o = self.out_offset();
        &self.values[o..o + self.classes * self.rep_dim()]
    }

    pub fn b2(&self) -> &[f64] {
        let o = self.out_offset() + self.classes * self.rep_dim();
        &self.values[o..]
    }

    /// Whether `index` addresses a weight (as opposed to a bias).
    fn is_weight(&self, index: usize) -> bool {
        let o = self.out_offset();
        index < self.w1_len() || (index >= o && index < o + self.classes * self.rep_dim())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_checkpoint(&self, seed: u64) -> String {
        let mut out = format!(
            "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}\ninput_dim {}\nhidden {}\nclasses {}\nseed {seed}\nvalues {}\n",
            self.input_dim,
            self.hidden,
            self.classes,
            self.values.len()
        );
        for v in &self.values {
            out.push_str(&format!("{v:e}\n"));
        }
        out
    }

    /// Parses a checkpoint, returning the parameters and the recorded seed.
    pub fn from_checkpoint(text: &str) -> Result<(Self, u64)> {
        let mut lines = text.lines().enumerate();
        let mut next = |key: &str| -> Result<(usize, String)> {
            let (i, line) = lines
                .next()
                .ok_or_else(|| Error::Data(format!("checkpoint truncated before {key:?}")))?;
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next()) {
                (Some(k), Some(v)) if k == key => Ok((i + 1, v.to_owned())),
                _ => Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected `{key} <value>`"),
                }),
            }
        };
        let num = |(line, v): (usize, String)| -> Result<u64> {
            v.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad integer {v:?}"),
            })
        };
        let version = num(next(CHECKPOINT_MAGIC)?)?;
        if version != u64::from(CHECKPOINT_VERSION) {
            return Err(Error::Data(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let input_dim = num(next("input_dim")?)? as usize;
        let hidden = num(next("hidden")?)? as usize;
        let classes = num(next("classes")?)? as usize;
        let seed = num(next("seed")?)?;
        let count = num(next("values")?)? as usize;
        let mut p = Self::zeros(input_dim, hidden, classes);
        if count != p.values.len() {
            return Err(Error::DimensionMismatch {
                context: "checkpoint values",
                expected: p.values.len(),
                actual: count,
            });
        }
        let body: Vec<&str> = text
            .lines()
            .skip(6)
            .filter(|l| !l.trim().is_empty())
            .collect();
        if body.len() != count {
            return Err(Error::DimensionMismatch {
                context: "checkpoint values",
                expected: count,
                actual: body.len(),
            });
        }
        for (i, (slot, raw)) in p.values.iter_mut().zip(body).enumerate() {
            *slot = raw.trim().parse().map_err(|_| Error::Parse {
                line: i + 7,
                message: format!("bad value {raw:?}"),
            })?;
        }
        Ok((p, seed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// Output-layer input: tanh activations, or the raw features for the
    /// linear model.
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
}

fn representation(params: &ModelParams, x: &[f64]) -> Vec<f64> {
    if params.hidden == 0 {
        return x.to_vec();
    }
    let w1 = params.w1();
    let b1 = params.b1();
    (0..params.hidden)
        .map(|h| {
            let row = &w1[h * params.input_dim..(h + 1) * params.input_dim];
            (b1[h] + dot(row, x)).tanh()
        })
        .collect()
}

fn head(params: &ModelParams, rep: &[f64]) -> Vec<f64> {
    let r = params.rep_dim();
    let w2 = params.w2();
    let b2 = params.b2();
    (0..params.classes)
        .map(|k| b2[k] + dot(&w2[k * r..(k + 1) * r], rep))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn forward(params: &ModelParams, features: &[f64]) -> Result<Forward> {
    if features.len() != params.input_dim {
        return Err(Error::DimensionMismatch {
            context: "forward input",
            expected: params.input_dim,
            actual: features.len(),
        });
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite input feature".into()));
    }
    let hidden = representation(params, features);
    let logits = head(params, &hidden);
    let mut probabilities = logits.clone();
    softmax_in_place(&mut probabilities);
    Ok(Forward {
        hidden,
        logits,
        probabilities,
    })
}

/// `-sum_k target_k * ln(max(p_k, 1e-12))`.
pub fn soft_cross_entropy(probabilities: &[f64], soft_label: &[f64]) -> Result<f64> {
    if probabilities.len() != soft_label.len() {
        return Err(Error::DimensionMismatch {
            context: "cross-entropy",
            expected: probabilities.len(),
            actual: soft_label.len(),
        });
    }
    Ok(-probabilities
        .iter()
        .zip(soft_label)
        .map(|(p, y)| {
            if *y == 0.0 {
                0.0
            } else {
                y * p.max(LOG_FLOOR).ln()
            }
        })
        .sum::<f64>())
}

/// One interpolated pair inside a training step.
#[derive(Debug, Clone, Copy)]
pub struct MixedPair<'a> {
    pub a: &'a Sample,
    pub b: &'a Sample,
    pub lambda: f64,
}

/// Inputs of one optimizer step: a raw mini-batch and a mixed mini-batch.
/// Either may be empty.
#[derive(Debug, Clone, Default)]
pub struct StepBatch<'a> {
    pub raw: Vec<&'a Sample>,
    pub mixed: Vec<MixedPair<'a>>,
}

/// Loss `mean raw CE + mean mixed soft CE + l2/2 * |weights|^2` and its
/// gradient with respect to `params.values`.
pub fn batch_loss_and_grad(
    params: &ModelParams,
    batch: &StepBatch<'_>,
    mix_space: MixSpace,
    l2: f64,
) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; params.values.len()];
    let mut loss = 0.0;
    let c = params.classes;

    if !batch.raw.is_empty() {
        let w = 1.0 / batch.raw.len() as f64;
        for s in &batch.raw {
            check_label(s, c)?;
            let fwd = forward(params, &s.features)?;
            let target = one_hot(s.label, c);
            loss += w * soft_cross_entropy(&fwd.probabilities, &target)?;
            backprop(params, &fwd, &target, w, &[(&s.features, 1.0)], &mut grad);
        }
    }

    if !batch.mixed.is_empty() {
        let w = 1.0 / batch.mixed.len() as f64;
        for pair in &batch.mixed {
            let mixed = mix_pair(pair.a, pair.b, pair.lambda, c)?;
            let use_input = mix_space == MixSpace::Input || params.hidden == 0;
            if use_input {
                let fwd = forward(params, &mixed.features)?;
                loss += w * soft_cross_entropy(&fwd.probabilities, &mixed.soft_label)?;
                backprop(
                    params,
                    &fwd,
                    &mixed.soft_label,
                    w,
                    &[(&mixed.features, 1.0)],
                    &mut grad,
                );
            } else {
                let ra = forward(params, &pair.a.features)?.hidden;
                let rb = forward(params, &pair.b.features)?.hidden;
                let rep: Vec<f64> = ra
                    .iter()
                    .zip(&rb)
                    .map(|(x, y)| pair.lambda * x + (1.0 - pair.lambda) * y)
                    .collect();
                let logits = head(params, &rep);
                let mut probabilities = logits.clone();
                softmax_in_place(&mut probabilities);
                let fwd = Forward {
                    hidden: rep,
                    logits,
                    probabilities,
                };
                loss += w * soft_cross_entropy(&fwd.probabilities, &mixed.soft_label)?;
                backprop_hidden_mix(
                    params,
                    &fwd,
                    &mixed.soft_label,
                    w,
                    pair,
                    &ra,
                    &rb,
                    &mut grad,
                );
            }
        }
    }

    if l2 > 0.0 {
        for (i, v) in params.values.iter().enumerate() {
            if params.is_weight(i) {
                loss += 0.5 * l2 * v * v;
                grad[i] += l2 * v;
            }
        }
    }
    Ok((loss, grad))
}

/// Loss only; see [`batch_loss_and_grad`].
pub fn batch_loss(
    params: &ModelParams,
    batch: &StepBatch<'_>,
    mix_space: MixSpace,
    l2: f64,
) -> Result<f64> {
    batch_loss_and_grad(params, batch, mix_space, l2).map(|(l, _)| l)
}

fn check_label(s: &Sample, classes: usize) -> Result<()> {
    if s.label >= classes {
        return Err(Error::Data(format!(
            "sample {} has label {} but the model has {classes} outputs",
            s.id, s.label
        )));
    }
    Ok(())
}

/// Accumulates the output-layer gradient and returns dL/d(representation).
fn backprop_head(
    params: &ModelParams,
    fwd: &Forward,
    target: &[f64],
    weight: f64,
    grad: &mut [f64],
) -> Vec<f64> {
    let r = params.rep_dim();
    let o = params.out_offset();
    let w2 = params.w2();
    let mut d_rep = vec![0.0; r];
    for k in 0..params.classes {
        let d = weight * (fwd.probabilities[k] - target[k]);
        if d == 0.0 {
            continue;
        }
        let row = o + k * r;
        for (j, &h) in fwd.hidden.iter().enumerate() {
            grad[row + j] += d * h;
            d_rep[j] += d * w2[k * r + j];
        }
        grad[o + params.classes * r + k] += d;
    }
    d_rep
}

/// Pushes dL/d(rep) through `tanh` and the first layer for an input `x`
/// whose activations `rep` entered the mix with coefficient `coef`.
fn backprop_first(
    params: &ModelParams,
    x: &[f64],
    rep: &[f64],
    d_rep: &[f64],
    coef: f64,
    grad: &mut [f64],
) {
    let d_in = params.input_dim;
    let b1 = params.w1_len();
    for h in 0..params.hidden {
        let d_pre = coef * d_rep[h] * (1.0 - rep[h] * rep[h]);
        if d_pre == 0.0 {
            continue;
        }
        for (i, &xi) in x.iter().enumerate() {
            grad[h * d_in + i] += d_pre * xi;
        }
        grad[b1 + h] += d_pre;
    }
}

fn backprop(
    params: &ModelParams,
    fwd: &Forward,
    target: &[f64],
    weight: f64,
    inputs: &[(&[f64], f64)],
    grad: &mut [f64],
) {
    let d_rep = backprop_head(params, fwd, target, weight, grad);
    if params.hidden > 0 {
        for &(x, coef) in inputs {
            backprop_first(params, x, &fwd.hidden, &d_rep, coef, grad);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn backprop_hidden_mix(
    params: &ModelParams,
    fwd: &Forward,
    target: &[f64],
    weight: f64,
    pair: &MixedPair<'_>,
    ra: &[f64],
    rb: &[f64],
    grad: &mut [f64],
) {
    let d_rep = backprop_head(params, fwd, target, weight, grad);
    backprop_first(params, &pair.a.features, ra, &d_rep, pair.lambda, grad);
    backprop_first(
        params,
        &pair.b.features,
        rb,
        &d_rep,
        1.0 - pair.lambda,
        grad,
    );
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    #[default]
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden_width: usize,
    pub optimizer: Optimizer,
    pub l2: f64,
    pub seed: u64,
    pub mixup: Option<MixupConfig>,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            epochs: 6,
            learning_rate: 0.1,
            batch_size: 32,
            hidden_width: 32,
            optimizer: Optimizer::Sgd,
            l2: 0.0,
            seed: 0,
            mixup: None,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "bad learning rate {}",
                self.learning_rate
            )));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(format!("bad l2 {}", self.l2)));
        }
        if let Some(m) = &self.mixup {
            m.validate()?;
        }
        Ok(())
    }
}

struct OptimizerState {
    kind: Optimizer,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl OptimizerState {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(kind: Optimizer, lr: f64, n: usize) -> Self {
        let (m, v) = match kind {
            Optimizer::Sgd => (Vec::new(), Vec::new()),
            Optimizer::Adam => (vec![0.0; n], vec![0.0; n]),
        };
        OptimizerState {
            kind,
            lr,
            m,
            v,
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            Optimizer::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            Optimizer::Adam => {
                self.t += 1;
                let c1 = 1.0 - Self::BETA1.powi(self.t);
                let c2 = 1.0 - Self::BETA2.powi(self.t);
                for i in 0..params.len() {
                    self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
                    self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    params[i] -= self.lr * m_hat / (v_hat.sqrt() + Self::EPS);
                }
            }
        }
    }
}

fn apply_step(
    params: &mut ModelParams,
    opt: &mut OptimizerState,
    batch: &StepBatch<'_>,
    mix_space: MixSpace,
    l2: f64,
    epoch: usize,
    batch_index: usize,
) -> Result<f64> {
    let (loss, grad) = batch_loss_and_grad(params, batch, mix_space, l2)?;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            epoch,
            batch: batch_index,
        });
    }
    opt.step(&mut params.values, &grad);
    if !params.is_finite() {
        return Err(Error::NonFinite {
            epoch,
            batch: batch_index,
        });
    }
    Ok(loss)
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: ModelParams,
    pub dynamics: DynamicsLog,
}

/// End-of-epoch inference pass producing one record per sample.
pub fn dynamics_pass(
    params: &ModelParams,
    dataset: &Dataset,
    epoch: u32,
) -> Result<Vec<DynamicsRecord>> {
    dataset
        .samples
        .iter()
        .map(|s| {
            Ok(DynamicsRecord {
                id: s.id.clone(),
                epoch,
                gold_label: s.label,
                logits: forward(params, &s.features)?.logits,
            })
        })
        .collect()
}

/// Mini-batch training over `dataset.classes` outputs with dynamics logging.
pub fn train(dataset: &Dataset, config: &TrainerConfig) -> Result<TrainOutput> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ModelParams::init(dataset.dim, config.hidden_width, dataset.classes, &mut rng);
    let mut opt = OptimizerState::new(config.optimizer, config.learning_rate, params.values.len());
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut records = Vec::with_capacity(dataset.len() * config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch = StepBatch {
                raw: chunk.iter().map(|&i| &dataset.samples[i]).collect(),
                mixed: Vec::new(),
            };
            apply_step(
                &mut params,
                &mut opt,
                &batch,
                MixSpace::Input,
                config.l2,
                epoch,
                b,
            )?;
        }
        records.extend(dynamics_pass(&params, dataset, epoch as u32)?);
    }
    let dynamics = DynamicsLog::from_records(records)?;
    Ok(TrainOutput { params, dynamics })
}

/// How mixed pairs are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSource {
    /// One easy-to-learn sample with one ambiguous sample.
    EasyAmbiguous {
        easy: Vec<SampleId>,
        ambiguous: Vec<SampleId>,
    },
    /// Any two distinct samples of the pool.
    Random { pool: Vec<SampleId> },
}

#[derive(Debug, Clone)]
pub struct MixedTrainOutput {
    pub params: ModelParams,
    /// Ids that appeared in a raw mini-batch.
    pub raw_ids_used: BTreeSet<SampleId>,
    /// Ids that appeared as a mixing parent.
    pub mixed_ids_used: BTreeSet<SampleId>,
    pub steps: usize,
}

/// Training on raw mini-batches from `raw_ids` plus mixed mini-batches from
/// `pairs`, equally weighted. Each epoch runs `steps_per_epoch` steps; when
/// `None`, the length of one schedule pass is used.
pub fn train_with_mixup(
    dataset: &Dataset,
    raw_ids: &[SampleId],
    pairs: &PairSource,
    steps_per_epoch: Option<usize>,
    config: &TrainerConfig,
) -> Result<MixedTrainOutput> {
    config.validate()?;
    let mix = config
        .mixup
        .as_ref()
        .ok_or_else(|| Error::Config("mixed training requires a mixup configuration".into()))?;
    if raw_ids.is_empty() {
        return Err(Error::Data("no raw samples for mixed training".into()));
    }
    let index: BTreeMap<&SampleId, &Sample> = dataset.index();
    let lookup = |id: &SampleId| -> Result<&Sample> {
        index
            .get(id)
            .copied()
            .ok_or_else(|| Error::Data(format!("unknown sample id {id}")))
    };
    let raw: Vec<&Sample> = raw_ids.iter().map(lookup).collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut mix_rng = ChaCha8Rng::seed_from_u64(mix.seed);
    let mut params = ModelParams::init(dataset.dim, config.hidden_width, dataset.classes, &mut rng);
    let mut opt = OptimizerState::new(config.optimizer, config.learning_rate, params.values.len());

    let make_schedule = |rng: &mut ChaCha8Rng| match pairs {
        PairSource::EasyAmbiguous { easy, ambiguous } => {
            build_td_schedule(easy, ambiguous, mix, rng)
        }
        PairSource::Random { pool } => build_random_schedule(pool, mix, rng),
    };

    let mut raw_ids_used = BTreeSet::new();
    let mut mixed_ids_used = BTreeSet::new();
    let mut raw_order: Vec<usize> = (0..raw.len()).collect();
    let mut raw_pos = raw_order.len();
    let mut steps = 0;

    for epoch in 1..=config.epochs {
        let first = make_schedule(&mut mix_rng)?;
        let n_steps = steps_per_epoch.unwrap_or_else(|| first.num_batches());
        let needed = n_steps * mix.batch_size;
        let mut pending: Vec<ScheduledPair> = first.pairs;
        while pending.len() < needed {
            pending.extend(make_schedule(&mut mix_rng)?.pairs);
        }
        pending.truncate(needed);

        for (b, chunk) in pending.chunks(mix.batch_size).enumerate() {
            let mut raw_batch = Vec::with_capacity(config.batch_size);
            for _ in 0..config.batch_size.min(raw.len()) {
                if raw_pos == raw_order.len() {
                    raw_order.shuffle(&mut rng);
                    raw_pos = 0;
                }
                let s = raw[raw_order[raw_pos]];
                raw_pos += 1;
                raw_ids_used.insert(s.id.clone());
                raw_batch.push(s);
            }
            let mut mixed = Vec::with_capacity(chunk.len());
            for p in chunk {
                let a = lookup(&p.i)?;
                let b = lookup(&p.j)?;
                mixed_ids_used.insert(a.id.clone());
                mixed_ids_used.insert(b.id.clone());
                mixed.push(MixedPair {
                    a,
                    b,
                    lambda: p.lambda,
                });
            }
            let batch = StepBatch {
                raw: raw_batch,
                mixed,
            };
            apply_step(
                &mut params,
                &mut opt,
                &batch,
                mix.mix_space,
                config.l2,
                epoch,
                b,
            )?;
            steps += 1;
        }
    }
    Ok(MixedTrainOutput {
        params,
        raw_ids_used,
        mixed_ids_used,
        steps,
    })
}

/// TDMixUp: raw batches from easy ∪ ambiguous, mixed batches pairing one
/// easy sample with one ambiguous sample.
pub fn train_tdmixup(
    easy: &Dataset,
    ambiguous: &Dataset,
    config: &TrainerConfig,
) -> Result<ModelParams> {
    if easy.is_empty() || ambiguous.is_empty() {
        return Err(Error::Data(
            "TDMixUp needs non-empty easy and ambiguous sets".into(),
        ));
    }
    if easy.dim != ambiguous.dim || easy.classes != ambiguous.classes {
        return Err(Error::Data(
            "easy and ambiguous sets disagree on shape".into(),
        ));
    }
    let mut samples = easy.samples.clone();
    samples.extend(ambiguous.samples.iter().cloned());
    let union = Dataset::new(samples, Some(easy.classes), "easy + ambiguous")?;
    let pairs = PairSource::EasyAmbiguous {
        easy: easy.ids(),
        ambiguous: ambiguous.ids(),
    };
    Ok(train_with_mixup(&union, &union.ids(), &pairs, None, config)?.params)
}
