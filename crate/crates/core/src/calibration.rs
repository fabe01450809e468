//! Accuracy and expected calibration error over equal-width confidence bins.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numeric::argmax;
use crate::trainer::{forward, ModelParams};

pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub predicted: usize,
    /// Largest class probability.
    pub confidence: f64,
    pub correct: bool,
}

pub fn evaluate(params: &ModelParams, test: &Dataset) -> Result<Vec<Prediction>> {
    if test.is_empty() {
        return Err(Error::Data("empty test set".into()));
    }
    test.samples
        .iter()
        .map(|s| {
            let fwd = forward(params, &s.features)?;
            let predicted = argmax(&fwd.probabilities);
            Ok(Prediction {
                predicted,
                confidence: fwd.probabilities[predicted],
                correct: predicted == s.label,
            })
        })
        .collect()
}

pub fn accuracy(predictions: &[Prediction]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::Data("accuracy of no predictions".into()));
    }
    Ok(predictions.iter().filter(|p| p.correct).count() as f64 / predictions.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_confidence: f64,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub accuracy: f64,
    pub ece: f64,
    pub n_bins: usize,
    pub bins: Vec<ReliabilityBin>,
}

/// Bin of a confidence under `(m/n, (m+1)/n]`, with 0 going to the first bin.
pub fn bin_index(confidence: f64, n_bins: usize) -> usize {
    if confidence <= 0.0 {
        return 0;
    }
    let n = n_bins as f64;
    let mut b = (confidence * n).ceil() as usize;
    // correct for rounding in confidence * n near bin edges
    if b > 1 && confidence <= (b - 1) as f64 / n {
        b -= 1;
    } else if b < n_bins && confidence > b as f64 / n {
        b += 1;
    }
    b.clamp(1, n_bins) - 1
}

pub fn reliability(predictions: &[Prediction], n_bins: usize) -> Result<CalibrationReport> {
    if predictions.is_empty() {
        return Err(Error::Data("calibration of no predictions".into()));
    }
    if n_bins == 0 {
        return Err(Error::Config("need at least one bin".into()));
    }
    if let Some(p) = predictions
        .iter()
        .find(|p| !(0.0..=1.0).contains(&p.confidence))
    {
        return Err(Error::Data(format!(
            "confidence {} outside [0, 1]",
            p.confidence
        )));
    }
    let mut count = vec![0usize; n_bins];
    let mut conf = vec![0.0; n_bins];
    let mut hits = vec![0.0; n_bins];
    for p in predictions {
        let b = bin_index(p.confidence, n_bins);
        count[b] += 1;
        conf[b] += p.confidence;
        if p.correct {
            hits[b] += 1.0;
        }
    }
    let n = predictions.len() as f64;
    let mut ece = 0.0;
    let bins = (0..n_bins)
        .map(|b| {
            let (mc, ma) = if count[b] == 0 {
                (0.0, 0.0)
            } else {
                (conf[b] / count[b] as f64, hits[b] / count[b] as f64)
            };
            ece += count[b] as f64 / n * (ma - mc).abs();
            ReliabilityBin {
                lower: b as f64 / n_bins as f64,
                upper: (b + 1) as f64 / n_bins as f64,
                count: count[b],
                mean_confidence: mc,
                mean_accuracy: ma,
            }
        })
        .collect();
    Ok(CalibrationReport {
        accuracy: accuracy(predictions)?,
        ece,
        n_bins,
        bins,
    })
}

pub fn ece(predictions: &[Prediction], n_bins: usize) -> Result<f64> {
    reliability(predictions, n_bins).map(|r| r.ece)
}

impl CalibrationReport {
    /// Aligned text table; accuracy, ECE and per-bin means shown in percent.
    pub fn render(&self, title: &str) -> String {
        let mut out = format!(
            "{title}\n  accuracy {:6.2}%   ECE {:6.2}%\n  {:>11}  {:>6}  {:>8}  {:>8}\n",
            100.0 * self.accuracy,
            100.0 * self.ece,
            "bin",
            "count",
            "conf%",
            "acc%"
        );
        for b in &self.bins {
            out.push_str(&format!(
                "  ({:.2}, {:.2}]  {:>6}  {:>8.2}  {:>8.2}\n",
                b.lower,
                b.upper,
                b.count,
                100.0 * b.mean_confidence,
                100.0 * b.mean_accuracy
            ));
        }
        out
    }
}
