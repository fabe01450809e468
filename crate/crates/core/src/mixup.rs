//! Mixing coefficients, pairwise interpolation and the pair schedules used by
//! TDMixUp (easy x ambiguous) and the random-pair baseline.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Sample;
use crate::dynamics::SampleId;
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.4;

/// Where interpolation happens: on raw feature vectors, or on the
/// post-activation hidden layer of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixSpace {
    Input,
    #[default]
    Hidden,
}

impl std::str::FromStr for MixSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "input" => Ok(MixSpace::Input),
            "hidden" => Ok(MixSpace::Hidden),
            other => Err(Error::Config(format!("unknown mix space {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixupConfig {
    pub alpha: f64,
    pub mix_space: MixSpace,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MixupConfig {
    fn default() -> Self {
        MixupConfig {
            alpha: DEFAULT_ALPHA,
            mix_space: MixSpace::Hidden,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl MixupConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "mixup alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("mixup batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Gamma(shape, 1) draw.
///
/// Marsaglia-Tsang squeeze for `shape >= 1`; for `shape < 1` the boost
/// `Gamma(shape + 1) * U^(1/shape)` with `U` uniform on (0, 1].
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let u: f64 = 1.0 - rng.random::<f64>();
        return sample_gamma(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u: f64 = rng.random();
        if u < 1.0 - 0.0331 * x.powi(4) {
            return d * v;
        }
        if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One Beta(alpha, alpha) draw as `G1 / (G1 + G2)`.
pub fn sample_lambda<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!(
            "Beta shape must be > 0, got {alpha}"
        )));
    }
    let g1 = sample_gamma(alpha, rng);
    let g2 = sample_gamma(alpha, rng);
    let total = g1 + g2;
    if total == 0.0 {
        // both draws underflowed; the distribution is symmetric
        return Ok(0.5);
    }
    Ok((g1 / total).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedSample {
    pub features: Vec<f64>,
    pub soft_label: Vec<f64>,
    pub lambda: f64,
    pub parent_ids: (SampleId, SampleId),
}

/// Convex combination `lambda * a + (1 - lambda) * b` of features and one-hot
/// labels.
pub fn mix_pair(a: &Sample, b: &Sample, lambda: f64, classes: usize) -> Result<MixedSample> {
    if a.features.len() != b.features.len() {
        return Err(Error::DimensionMismatch {
            context: "mixup parents",
            expected: a.features.len(),
            actual: b.features.len(),
        });
    }
    for s in [a, b] {
        if s.label >= classes {
            return Err(Error::Data(format!(
                "sample {} has label {} >= {classes}",
                s.id, s.label
            )));
        }
    }
    let features = mix_vectors(&a.features, &b.features, lambda);
    let mut soft_label = vec![0.0; classes];
    soft_label[a.label] += lambda;
    soft_label[b.label] += 1.0 - lambda;
    Ok(MixedSample {
        features,
        soft_label,
        lambda,
        parent_ids: (a.id.clone(), b.id.clone()),
    })
}

pub fn mix_vectors(a: &[f64], b: &[f64], lambda: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledPair {
    pub i: SampleId,
    pub j: SampleId,
    pub lambda: f64,
}

/// Ordered pairs grouped into mini-batches of `batch_size` (the last batch may
/// be short).
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub pairs: Vec<ScheduledPair>,
    pub batch_size: usize,
}

impl Schedule {
    pub fn batches(&self) -> std::slice::Chunks<'_, ScheduledPair> {
        self.pairs.chunks(self.batch_size)
    }

    pub fn num_batches(&self) -> usize {
        self.pairs.len().div_ceil(self.batch_size)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.pairs {
            out.push_str(&serde_json::to_string(p).expect("pair serializes"));
            out.push('\n');
        }
        out
    }
}

/// Endless stream over a pool: a fresh shuffle each time the pool is used up.
struct CyclingPool<'a> {
    ids: &'a [SampleId],
    order: Vec<usize>,
    pos: usize,
}

impl<'a> CyclingPool<'a> {
    fn new(ids: &'a [SampleId]) -> Self {
        CyclingPool {
            ids,
            order: (0..ids.len()).collect(),
            pos: ids.len(),
        }
    }

    fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &'a SampleId {
        if self.pos == self.order.len() {
            self.order.shuffle(rng);
            self.pos = 0;
        }
        let id = &self.ids[self.order[self.pos]];
        self.pos += 1;
        id
    }
}

/// Easy x ambiguous pairs covering one pass over the larger pool; the smaller
/// pool is reshuffled and reused as needed.
pub fn build_td_schedule<R: Rng + ?Sized>(
    easy_ids: &[SampleId],
    ambiguous_ids: &[SampleId],
    config: &MixupConfig,
    rng: &mut R,
) -> Result<Schedule> {
    config.validate()?;
    if easy_ids.is_empty() || ambiguous_ids.is_empty() {
        return Err(Error::Data(format!(
            "TDMixUp needs non-empty pools (easy: {}, ambiguous: {})",
            easy_ids.len(),
            ambiguous_ids.len()
        )));
    }
    let total = easy_ids.len().max(ambiguous_ids.len());
    let mut easy = CyclingPool::new(easy_ids);
    let mut ambiguous = CyclingPool::new(ambiguous_ids);
    let mut pairs = Vec::with_capacity(total);
    for _ in 0..total {
        let i = easy.next(rng).clone();
        let j = ambiguous.next(rng).clone();
        let lambda = sample_lambda(config.alpha, rng)?;
        pairs.push(ScheduledPair { i, j, lambda });
    }
    Ok(Schedule {
        pairs,
        batch_size: config.batch_size,
    })
}

/// Random-pair baseline: the pool shuffled against an independent shuffle of
/// itself, with self-pairs re-drawn.
pub fn build_random_schedule<R: Rng + ?Sized>(
    pool_ids: &[SampleId],
    config: &MixupConfig,
    rng: &mut R,
) -> Result<Schedule> {
    config.validate()?;
    if pool_ids.len() < 2 {
        return Err(Error::Data(format!(
            "random-pair MixUp needs at least 2 samples, got {}",
            pool_ids.len()
        )));
    }
    let mut left: Vec<usize> = (0..pool_ids.len()).collect();
    let mut right = left.clone();
    left.shuffle(rng);
    right.shuffle(rng);
    let mut pairs = Vec::with_capacity(pool_ids.len());
    for (&a, &b) in left.iter().zip(&right) {
        let mut b = b;
        while b == a {
            b = rng.random_range(0..pool_ids.len());
        }
        let lambda = sample_lambda(config.alpha, rng)?;
        pairs.push(ScheduledPair {
            i: pool_ids[a].clone(),
            j: pool_ids[b].clone(),
            lambda,
        });
    }
    Ok(Schedule {
        pairs,
        batch_size: config.batch_size,
    })
}
