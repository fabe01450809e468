//! Data-map regions from confidence/variability ranks.
//!
//! The ambiguous set is the top `fraction` of samples by variability. The
//! easy-to-learn set is then the top `fraction` by confidence among the
//! remaining samples, so the two sets never overlap. Everything else is
//! hard-to-learn.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{SampleId, SampleStats};
use crate::error::{Error, Result};

pub const DEFAULT_FRACTION: f64 = 0.33;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    #[serde(rename = "easy")]
    EasyToLearn,
    Ambiguous,
    #[serde(rename = "hard")]
    HardToLearn,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::EasyToLearn, Region::Ambiguous, Region::HardToLearn];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::EasyToLearn => "easy",
            Region::Ambiguous => "ambiguous",
            Region::HardToLearn => "hard",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "easy" => Ok(Region::EasyToLearn),
            "ambiguous" => Ok(Region::Ambiguous),
            "hard" => Ok(Region::HardToLearn),
            other => Err(Error::Config(format!("unknown region {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryAssignment {
    pub id: SampleId,
    pub region: Region,
    pub aum_filtered: bool,
}

/// Number of samples claimed by each of the two ranked regions.
pub fn region_size(n: usize, fraction: f64) -> usize {
    // guard against 0.33 * 100 = 32.99999...
    (fraction * n as f64 + 1e-9).floor() as usize
}

/// Assigns regions; output is in ascending id order.
pub fn categorize(stats: &[SampleStats], fraction: f64) -> Result<Vec<CategoryAssignment>> {
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(Error::Config(format!(
            "cartography fraction must lie in (0, 0.5], got {fraction}"
        )));
    }
    if stats.is_empty() {
        return Err(Error::Data("no samples to categorize".into()));
    }
    if stats.len() < 3 {
        return Err(Error::Data(format!(
            "need at least 3 samples to categorize, got {}",
            stats.len()
        )));
    }
    let k = region_size(stats.len(), fraction);
    let mut regions = vec![Region::HardToLearn; stats.len()];

    let mut by_variability: Vec<usize> = (0..stats.len()).collect();
    by_variability.sort_by(|&a, &b| {
        desc(stats[a].variability, stats[b].variability).then_with(|| stats[a].id.cmp(&stats[b].id))
    });
    for &i in by_variability.iter().take(k) {
        regions[i] = Region::Ambiguous;
    }

    let mut by_confidence: Vec<usize> = (0..stats.len())
        .filter(|&i| regions[i] != Region::Ambiguous)
        .collect();
    by_confidence.sort_by(|&a, &b| {
        desc(stats[a].confidence, stats[b].confidence)
            .then_with(|| asc(stats[a].variability, stats[b].variability))
            .then_with(|| stats[a].id.cmp(&stats[b].id))
    });
    for &i in by_confidence.iter().take(k) {
        regions[i] = Region::EasyToLearn;
    }

    let mut out: Vec<CategoryAssignment> = stats
        .iter()
        .zip(regions)
        .map(|(s, region)| CategoryAssignment {
            id: s.id.clone(),
            region,
            aum_filtered: false,
        })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

fn desc(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

fn asc(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// Ids assigned to `region`, ascending.
pub fn ids_in(assignments: &[CategoryAssignment], region: Region) -> Vec<SampleId> {
    let mut ids: Vec<SampleId> = assignments
        .iter()
        .filter(|a| a.region == region)
        .map(|a| a.id.clone())
        .collect();
    ids.sort();
    ids
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataMapPoint {
    pub id: SampleId,
    pub variability: f64,
    pub confidence: f64,
    pub correctness: f64,
    pub region: Region,
}

/// One point per sample in ascending id order. Samples without an assignment
/// are treated as hard-to-learn.
pub fn datamap_points(
    stats: &[SampleStats],
    assignments: &[CategoryAssignment],
) -> Vec<DataMapPoint> {
    let lookup: std::collections::BTreeMap<&SampleId, Region> =
        assignments.iter().map(|a| (&a.id, a.region)).collect();
    let mut points: Vec<DataMapPoint> = stats
        .iter()
        .map(|s| DataMapPoint {
            id: s.id.clone(),
            variability: s.variability,
            confidence: s.confidence,
            correctness: s.correctness,
            region: lookup.get(&s.id).copied().unwrap_or(Region::HardToLearn),
        })
        .collect();
    points.sort_by(|a, b| a.id.cmp(&b.id));
    points
}

pub fn categories_to_jsonl(assignments: &[CategoryAssignment]) -> String {
    let mut out = String::new();
    for a in assignments {
        out.push_str(&serde_json::to_string(a).expect("assignment serializes"));
        out.push('\n');
    }
    out
}

pub fn categories_from_jsonl(text: &str) -> Result<Vec<CategoryAssignment>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
