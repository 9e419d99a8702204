//! Binary classification metrics, ROC analysis and stratified folds.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(labels: &[Label], predictions: &[Label]) -> Result<ConfusionMatrix> {
    if labels.len() != predictions.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::input("confusion matrix of an empty prediction set"));
    }
    let mut cm = ConfusionMatrix::default();
    for (&l, &p) in labels.iter().zip(predictions) {
        match (l == 1, p == 1) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Standard formulas; any ratio with a zero denominator is reported as 0.
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    if cm.total() == 0 {
        return Err(Error::input("metrics of an empty confusion matrix"));
    }
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    Ok(Metrics {
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        precision,
        recall,
        specificity: ratio(cm.tn, cm.tn + cm.fp),
        f1: f1_score(precision, recall),
    })
}

/// ROC curve and trapezoidal AUC. Thresholds are the distinct scores in
/// descending order; equal scores move both rates in a single step, so the
/// area equals the concordance probability with ties counted as one half.
pub fn roc_auc(labels: &[Label], scores: &[f64]) -> Result<(f64, Vec<(f64, f64)>)> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::input("ROC scores must be finite"));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    // Twice the area in units of (1/pos)(1/neg), kept exact.
    let mut area2: u128 = 0;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (tp0, fp0) = (tp, fp);
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        area2 += u128::from(fp - fp0) * u128::from(tp + tp0);
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = area2 as f64 / (2.0 * pos as f64 * neg as f64);
    Ok((auc, points))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Each class is shuffled separately (negatives first) and dealt
/// round-robin into `k` test folds; indices within a fold are sorted.
pub fn stratified_kfold(labels: &[Label], k: usize, rng: &mut Rng) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::param(format!("k-fold needs k >= 2, got {k}")));
    }
    let mut tests = vec![Vec::new(); k];
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::input(format!(
                "class {class} has {} samples, fewer than k = {k}",
                members.len()
            )));
        }
        rng.shuffle(&mut members);
        for (j, idx) in members.into_iter().enumerate() {
            tests[j % k].push(idx);
        }
    }
    Ok(tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let train = (0..labels.len())
                .filter(|i| test.binary_search(i).is_err())
                .collect();
            Fold { train, test }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub name: String,
    pub n_samples: u64,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
    pub auc: f64,
    pub roc_points: Vec<(f64, f64)>,
}

impl EvalReport {
    /// `scores` rank samples for the ROC; `predictions` are the hard labels.
    pub fn from_predictions(
        name: impl Into<String>,
        labels: &[Label],
        scores: &[f64],
        predictions: &[Label],
    ) -> Result<Self> {
        let cm = confusion(labels, predictions)?;
        let m = metrics(&cm)?;
        let (auc, roc_points) = roc_auc(labels, scores)?;
        Ok(EvalReport {
            name: name.into(),
            n_samples: cm.total(),
            confusion: cm,
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            specificity: m.specificity,
            f1: m.f1,
            auc,
            roc_points,
        })
    }

    /// Two-column metric table.
    pub fn to_table(&self) -> String {
        let pct = |v: f64| format!("{:.1}%", 100.0 * v);
        let rows = [
            ("Accuracy", pct(self.accuracy)),
            ("Precision", pct(self.precision)),
            ("Recall (Sensitivity)", pct(self.recall)),
            ("Specificity", pct(self.specificity)),
            ("F1-Score", format!("{:.2}", self.f1)),
            ("AUC", format!("{:.2}", self.auc)),
            (
                "TP / FP / FN / TN",
                format!(
                    "{} / {} / {} / {}",
                    self.confusion.tp, self.confusion.fp, self.confusion.fn_, self.confusion.tn
                ),
            ),
        ];
        let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(6);
        let w1 = rows.iter().map(|r| r.1.len()).max().unwrap_or(0).max(5);
        let rule = format!("+{}+{}+\n", "-".repeat(w0 + 2), "-".repeat(w1 + 2));
        let mut out = format!("{} (n = {})\n", self.name, self.n_samples);
        out.push_str(&rule);
        let _ = writeln!(out, "| {:<w0$} | {:<w1$} |", "Metric", "Value");
        out.push_str(&rule);
        for (k, v) in rows {
            let _ = writeln!(out, "| {k:<w0$} | {v:>w1$} |");
        }
        out.push_str(&rule);
        out
    }

    pub fn roc_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (fpr, tpr) in &self.roc_points {
            let _ = writeln!(out, "{fpr},{tpr}");
        }
        out
    }
}
