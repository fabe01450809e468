//! Labeled feature-vector datasets: file ingestion (dense vectors or raw text)
//! and a seeded Gaussian-cluster generator with planted label noise.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::SampleId;
use crate::error::{Error, Result};
use crate::featurize::HashedNgrams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: SampleId,
    #[serde(rename = "label")]
    pub label: usize,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub classes: usize,
    pub dim: usize,
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    #[default]
    Vectors,
    Text,
}

#[derive(Deserialize)]
struct TextLine {
    id: SampleId,
    label: usize,
    text: String,
    #[serde(default)]
    text_b: Option<String>,
}

impl Dataset {
    /// Validates ids, labels and arity. `classes` defaults to `max label + 1`.
    pub fn new(
        samples: Vec<Sample>,
        classes: Option<usize>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Data("dataset is empty".into()));
        }
        let dim = samples[0].features.len();
        let mut ids = HashSet::with_capacity(samples.len());
        let max_label = samples.iter().map(|s| s.label).max().unwrap_or(0);
        let classes = classes.unwrap_or(max_label + 1);
        for s in &samples {
            if !ids.insert(&s.id) {
                return Err(Error::Data(format!("duplicate sample id {}", s.id)));
            }
            if s.features.len() != dim {
                return Err(Error::Data(format!(
                    "sample {} has {} features, expected {dim}",
                    s.id,
                    s.features.len()
                )));
            }
            if s.label >= classes {
                return Err(Error::Data(format!(
                    "sample {} has label {} outside [0, {classes})",
                    s.id, s.label
                )));
            }
        }
        Ok(Dataset {
            samples,
            classes,
            dim,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn ids(&self) -> Vec<SampleId> {
        self.samples.iter().map(|s| s.id.clone()).collect()
    }

    pub fn labels(&self) -> BTreeMap<SampleId, usize> {
        self.samples
            .iter()
            .map(|s| (s.id.clone(), s.label))
            .collect()
    }

    pub fn index(&self) -> BTreeMap<&SampleId, &Sample> {
        self.samples.iter().map(|s| (&s.id, s)).collect()
    }

    /// Samples whose id is in `ids`, in dataset order. Unknown ids are an error.
    pub fn subset(&self, ids: &BTreeSet<SampleId>) -> Result<Dataset> {
        let known: BTreeSet<&SampleId> = self.samples.iter().map(|s| &s.id).collect();
        if let Some(missing) = ids.iter().find(|id| !known.contains(id)) {
            return Err(Error::Data(format!("unknown sample id {missing}")));
        }
        let samples: Vec<Sample> = self
            .samples
            .iter()
            .filter(|s| ids.contains(&s.id))
            .cloned()
            .collect();
        Dataset::new(
            samples,
            Some(self.classes),
            format!("{} (subset)", self.provenance),
        )
    }

    pub fn load(path: &Path, format: DataFormat, classes: Option<usize>) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = std::io::BufReader::new(file);
        let provenance = path.display().to_string();
        match format {
            DataFormat::Vectors => Self::read_vectors(reader, classes, provenance),
            DataFormat::Text => {
                Self::read_text(reader, &HashedNgrams::default(), classes, provenance)
            }
        }
    }

    /// `{"id":..., "label": <int>, "features": [...]}` per line.
    pub fn read_vectors<R: BufRead>(
        reader: R,
        classes: Option<usize>,
        provenance: String,
    ) -> Result<Self> {
        let mut samples = Vec::new();
        let mut dim = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| parse_err(i, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let s: Sample = serde_json::from_str(&line).map_err(|e| parse_err(i, e))?;
            check_line(&s, i, &mut dim, classes)?;
            samples.push(s);
        }
        Dataset::new(samples, classes, provenance)
    }

    /// `{"id":..., "label": <int>, "text": "...", "text_b": "..."?}` per line.
    pub fn read_text<R: BufRead>(
        reader: R,
        featurizer: &HashedNgrams,
        classes: Option<usize>,
        provenance: String,
    ) -> Result<Self> {
        let mut samples = Vec::new();
        let mut dim = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| parse_err(i, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let t: TextLine = serde_json::from_str(&line).map_err(|e| parse_err(i, e))?;
            let features = match &t.text_b {
                Some(b) => featurizer.featurize_pair(&t.text, b),
                None => featurizer.featurize(&t.text),
            };
            let s = Sample {
                id: t.id,
                label: t.label,
                features,
            };
            check_line(&s, i, &mut dim, classes)?;
            samples.push(s);
        }
        Dataset::new(samples, classes, provenance)
    }

    pub fn to_vectors_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(&serde_json::to_string(s).expect("sample serializes"));
            out.push('\n');
        }
        out
    }
}

fn parse_err(idx: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        line: idx + 1,
        message: e.to_string(),
    }
}

fn check_line(
    s: &Sample,
    idx: usize,
    dim: &mut Option<usize>,
    classes: Option<usize>,
) -> Result<()> {
    match *dim {
        None => *dim = Some(s.features.len()),
        Some(d) if d != s.features.len() => {
            return Err(parse_err(
                idx,
                format!("ragged features: expected {d}, got {}", s.features.len()),
            ))
        }
        _ => {}
    }
    if let Some(c) = classes {
        if s.label >= c {
            return Err(parse_err(
                idx,
                format!("label {} outside [0, {c})", s.label),
            ));
        }
    }
    if s.features.iter().any(|x| !x.is_finite()) {
        return Err(parse_err(idx, "non-finite feature"));
    }
    Ok(())
}

/// Isotropic Gaussian clusters, one per class, centered at
/// `separation * e_k` (requires `dim >= classes`).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianClusters {
    pub classes: usize,
    pub dim: usize,
    pub separation: f64,
    pub spread: f64,
}

impl Default for GaussianClusters {
    fn default() -> Self {
        GaussianClusters {
            classes: 3,
            dim: 8,
            separation: 3.0,
            spread: 1.0,
        }
    }
}

/// A generated dataset plus the generator's record of which labels it flipped.
#[derive(Debug, Clone)]
pub struct PlantedNoise {
    pub dataset: Dataset,
    pub flipped: BTreeSet<SampleId>,
    pub clean_labels: BTreeMap<SampleId, usize>,
}

impl GaussianClusters {
    /// `n` samples with balanced classes; `round(noise_rate * n)` of them get a
    /// label drawn uniformly from the other classes.
    pub fn generate(
        &self,
        n: usize,
        noise_rate: f64,
        id_prefix: &str,
        seed: u64,
    ) -> Result<PlantedNoise> {
        if self.dim < self.classes || self.classes < 2 {
            return Err(Error::Config(format!(
                "need 2 <= classes <= dim, got classes={} dim={}",
                self.classes, self.dim
            )));
        }
        if !(0.0..=1.0).contains(&noise_rate) {
            return Err(Error::Config(format!(
                "noise rate {noise_rate} outside [0, 1]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let width = n.to_string().len().max(4);
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % self.classes;
            let features = (0..self.dim)
                .map(|d| {
                    let center = if d == label { self.separation } else { 0.0 };
                    let z: f64 = rng.sample(StandardNormal);
                    center + self.spread * z
                })
                .collect();
            samples.push(Sample {
                id: SampleId(format!("{id_prefix}{i:0width$}")),
                label,
                features,
            });
        }
        let clean_labels: BTreeMap<SampleId, usize> =
            samples.iter().map(|s| (s.id.clone(), s.label)).collect();
        let n_flip = (noise_rate * n as f64).round() as usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut flipped = BTreeSet::new();
        for &i in order.iter().take(n_flip) {
            let original = samples[i].label;
            let draw = rng.random_range(0..self.classes - 1);
            samples[i].label = if draw >= original { draw + 1 } else { draw };
            flipped.insert(samples[i].id.clone());
        }
        let dataset = Dataset::new(
            samples,
            Some(self.classes),
            format!("gaussian clusters n={n} noise={noise_rate} seed={seed}"),
        )?;
        Ok(PlantedNoise {
            dataset,
            flipped,
            clean_labels,
        })
    }
}
