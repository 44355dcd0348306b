//! Evaluation metrics: confusion matrix, accuracy, Cohen's kappa,
//! probability RMSE, per-class rates and ROC curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square count matrix indexed `[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Result<ConfusionMatrix> {
        if labels.is_empty() {
            return Err(Error::InvalidConfig(
                "confusion matrix needs at least one class label".into(),
            ));
        }
        let n = labels.len();
        Ok(ConfusionMatrix {
            labels,
            counts: vec![vec![0; n]; n],
        })
    }

    pub fn from_pairs(labels: Vec<String>, pairs: &[(usize, usize)]) -> Result<ConfusionMatrix> {
        let mut m = ConfusionMatrix::new(labels)?;
        for &(actual, predicted) in pairs {
            m.record(actual, predicted)?;
        }
        Ok(m)
    }

    pub fn record(&mut self, actual: usize, predicted: usize) -> Result<()> {
        let n = self.labels.len();
        if actual >= n || predicted >= n {
            return Err(Error::SchemaMismatch(format!(
                "class pair ({actual}, {predicted}) out of range for {n} labels"
            )));
        }
        self.counts[actual][predicted] += 1;
        Ok(())
    }

    /// Element-wise sum with another matrix over the same labels.
    pub fn absorb(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::SchemaMismatch(
                "cannot merge confusion matrices with different labels".into(),
            ));
        }
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, oc) in row.iter_mut().zip(orow) {
                *c += oc;
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn count(&self, actual: usize, predicted: usize) -> usize {
        self.counts[actual][predicted]
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().map(|r| r.iter().sum::<usize>()).sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Instances whose actual class is `class`.
    pub fn row_total(&self, class: usize) -> usize {
        self.counts[class].iter().sum()
    }

    /// Instances predicted as `class`.
    pub fn col_total(&self, class: usize) -> usize {
        self.counts.iter().map(|r| r[class]).sum()
    }

    /// Fraction of instances on the diagonal.
    pub fn accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::ZeroDenominator(
                "accuracy of an empty confusion matrix".into(),
            ));
        }
        Ok(self.trace() as f64 / total as f64)
    }

    /// Cohen's kappa. When chance agreement is exactly 1 the statistic is
    /// defined as 1 for perfect observed agreement and 0 otherwise.
    pub fn kappa(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::ZeroDenominator(
                "kappa of an empty confusion matrix".into(),
            ));
        }
        let n = self.labels.len();
        // Do the degenerate-chance test in integers so it is exact.
        let chance_num: u128 = (0..n)
            .map(|c| self.row_total(c) as u128 * self.col_total(c) as u128)
            .sum();
        let denom = (total as u128) * (total as u128);
        if chance_num == denom {
            return Ok(if self.trace() == total { 1.0 } else { 0.0 });
        }
        let p0 = self.trace() as f64 / total as f64;
        let pe = chance_num as f64 / denom as f64;
        Ok((p0 - pe) / (1.0 - pe))
    }

    /// True-positive rate (recall) of one class. Errors when the class has
    /// no actual instances.
    pub fn tp_rate(&self, class: usize) -> Result<f64> {
        let actual = self.row_total(class);
        if actual == 0 {
            return Err(Error::ZeroDenominator(format!(
                "tp rate of class '{}' with no actual instances",
                self.labels[class]
            )));
        }
        Ok(self.counts[class][class] as f64 / actual as f64)
    }

    /// False-positive rate of one class. Errors when every instance belongs
    /// to the class.
    pub fn fp_rate(&self, class: usize) -> Result<f64> {
        let negatives = self.total() - self.row_total(class);
        if negatives == 0 {
            return Err(Error::ZeroDenominator(format!(
                "fp rate of class '{}' with no negative instances",
                self.labels[class]
            )));
        }
        let fp = self.col_total(class) - self.counts[class][class];
        Ok(fp as f64 / negatives as f64)
    }
}

/// Root mean squared error of predicted class-probability vectors against
/// one-hot actual classes, averaged over every instance *and* class slot:
///
/// `sqrt( sum_i sum_c (p[i][c] - y[i][c])^2 / (N * C) )`
pub fn rmse(probabilities: &[Vec<f64>], actual: &[usize]) -> Result<f64> {
    if probabilities.is_empty() {
        return Err(Error::EmptyInput("rmse over zero instances".into()));
    }
    if probabilities.len() != actual.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} probability vectors against {} actual classes",
            probabilities.len(),
            actual.len()
        )));
    }
    let n_classes = probabilities[0].len();
    if n_classes == 0 {
        return Err(Error::EmptyInput("probability vectors are empty".into()));
    }
    let mut sum = 0.0;
    for (row, (probs, &class)) in probabilities.iter().zip(actual).enumerate() {
        if probs.len() != n_classes {
            return Err(Error::SchemaMismatch(format!(
                "probability vector {} has length {}, expected {}",
                row,
                probs.len(),
                n_classes
            )));
        }
        if class >= n_classes {
            return Err(Error::SchemaMismatch(format!(
                "actual class {} out of range for {} classes",
                class, n_classes
            )));
        }
        for (c, &p) in probs.iter().enumerate() {
            let y = if c == class { 1.0 } else { 0.0 };
            sum += (p - y) * (p - y);
        }
    }
    Ok((sum / (probabilities.len() as f64 * n_classes as f64)).sqrt())
}

/// One operating point of a ROC curve. `threshold` is the smallest score
/// still classified positive; the synthetic origin, above every score, has
/// no finite threshold and carries `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: Option<f64>,
    pub fp_rate: f64,
    pub tp_rate: f64,
}

/// ROC curve for scores of the positive class. Thresholds sweep the distinct
/// scores in descending order (an instance is positive when `score >=
/// threshold`), so tied scores produce a single step. The first point is
/// always (0,0) and the last (1,1).
pub fn roc_points(scores: &[f64], labels: &[bool]) -> Result<Vec<RocPoint>> {
    if scores.len() != labels.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} scores against {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput("roc over zero instances".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidConfig("roc scores must be finite".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClassLabels);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = vec![RocPoint {
        threshold: None,
        fp_rate: 0.0,
        tp_rate: 0.0,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        // Consume the whole tie group before emitting a point.
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: Some(threshold),
            fp_rate: fp as f64 / negatives as f64,
            tp_rate: tp as f64 / positives as f64,
        });
    }
    Ok(points)
}

/// Per-class rates for a report. `None` marks a rate whose denominator was
/// zero (for example a class with no instances).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRates {
    pub label: String,
    pub tp_rate: Option<f64>,
    pub fp_rate: Option<f64>,
}

/// Everything one evaluation run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub classifier: String,
    pub missing_method: String,
    pub folds: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub rmse: f64,
    pub kappa: f64,
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassRates>,
    pub roc: Option<Vec<RocPoint>>,
    /// Breakdown per cross-validation fold; empty when not applicable.
    pub fold_metrics: Vec<FoldMetrics>,
    /// Wall-clock seconds; zeroed when reports are written for comparison.
    pub wall_time_secs: f64,
}

/// Metrics of a single cross-validation fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub test_size: usize,
    pub accuracy: f64,
    pub rmse: f64,
    pub kappa: f64,
}

impl EvaluationReport {
    /// Per-class rates with zero-denominator cases mapped to `None`.
    pub fn rates_from(confusion: &ConfusionMatrix) -> Vec<ClassRates> {
        (0..confusion.n_classes())
            .map(|c| ClassRates {
                label: confusion.labels()[c].clone(),
                tp_rate: confusion.tp_rate(c).ok(),
                fp_rate: confusion.fp_rate(c).ok(),
            })
            .collect()
    }
}
