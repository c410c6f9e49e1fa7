//! Multi-class evaluation: confusion matrix and per-class report.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("length mismatch: {truths} truths vs {predictions} predictions")]
    LengthMismatch { truths: usize, predictions: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("confusion matrix is empty")]
    Empty,
    #[error("expected {expected} class names, got {got}")]
    ClassNames { expected: usize, got: usize },
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n_classes + predicted]
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.n_classes + predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        (0..self.n_classes).map(|j| self.get(truth, j)).sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        (0..self.n_classes).map(|i| self.get(i, predicted)).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|i| self.get(i, i)).sum()
    }
}

pub fn confusion(truths: &[usize], predictions: &[usize], n_classes: usize) -> Result<ConfusionMatrix, MetricsError> {
    if truths.len() != predictions.len() {
        return Err(MetricsError::LengthMismatch {
            truths: truths.len(),
            predictions: predictions.len(),
        });
    }
    let mut cm = ConfusionMatrix::new(n_classes);
    for (&t, &p) in truths.iter().zip(predictions) {
        for label in [t, p] {
            if label >= n_classes {
                return Err(MetricsError::LabelOutOfRange { label, n_classes });
            }
        }
        cm.add(t, p);
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when any of the three rates had a zero denominator and was
    /// reported as 0.
    pub zero_division: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn report(cm: &ConfusionMatrix, class_names: &[String]) -> Result<ClassReport, MetricsError> {
    let n = cm.n_classes();
    let total = cm.total();
    if n == 0 || total == 0 {
        return Err(MetricsError::Empty);
    }
    if class_names.len() != n {
        return Err(MetricsError::ClassNames {
            expected: n,
            got: class_names.len(),
        });
    }
    let mut classes = Vec::with_capacity(n);
    for (i, name) in class_names.iter().enumerate() {
        let tp = cm.get(i, i);
        let support = cm.row_sum(i);
        let (precision, p0) = ratio(tp, cm.col_sum(i));
        let (recall, r0) = ratio(tp, support);
        let (f1, f0) = if precision + recall > 0.0 {
            (2.0 * precision * recall / (precision + recall), false)
        } else {
            (0.0, true)
        };
        classes.push(ClassMetrics {
            name: name.clone(),
            precision,
            recall,
            f1,
            support,
            zero_division: p0 || r0 || f0,
        });
    }
    let nf = n as f64;
    let macro_precision = classes.iter().map(|c| c.precision).sum::<f64>() / nf;
    let macro_recall = classes.iter().map(|c| c.recall).sum::<f64>() / nf;
    let macro_f1 = classes.iter().map(|c| c.f1).sum::<f64>() / nf;
    let weighted_f1 = classes.iter().map(|c| c.f1 * c.support as f64).sum::<f64>() / total as f64;
    Ok(ClassReport {
        classes,
        accuracy: cm.trace() as f64 / total as f64,
        macro_precision,
        macro_recall,
        macro_f1,
        weighted_f1,
        total,
    })
}

impl ClassReport {
    /// Aligned text table: Class, Precision, Recall, F1-score, Support.
    pub fn to_table(&self) -> String {
        let width = self
            .classes
            .iter()
            .map(|c| c.name.len())
            .chain([9])
            .max()
            .unwrap_or(9);
        let mut s = String::new();
        let rule = "-".repeat(width + 42);
        let _ = writeln!(s, "{:<width$} {:>9} {:>9} {:>9} {:>10}", "Class", "Precision", "Recall", "F1-score", "Support");
        let _ = writeln!(s, "{rule}");
        for c in &self.classes {
            let mark = if c.zero_division { "*" } else { "" };
            let _ = writeln!(
                s,
                "{:<width$} {:>9.4} {:>9.4} {:>9.4} {:>10}{mark}",
                c.name, c.precision, c.recall, c.f1, c.support
            );
        }
        let _ = writeln!(s, "{rule}");
        let _ = writeln!(
            s,
            "{:<width$} {:>9.4} {:>9.4} {:>9.4} {:>10}",
            "Macro Avg", self.macro_precision, self.macro_recall, self.macro_f1, self.total
        );
        let _ = writeln!(s, "{rule}");
        let _ = writeln!(s, "Accuracy: {:.2}%", self.accuracy * 100.0);
        let _ = writeln!(s, "Weighted F1: {:.2}%", self.weighted_f1 * 100.0);
        let _ = writeln!(s, "Macro F1: {:.2}%", self.macro_f1 * 100.0);
        if self.classes.iter().any(|c| c.zero_division) {
            let _ = writeln!(s, "* undefined precision/recall/F1 reported as 0");
        }
        s
    }

    /// `key=value` lines with full precision.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "accuracy={}", self.accuracy);
        let _ = writeln!(s, "macro_precision={}", self.macro_precision);
        let _ = writeln!(s, "macro_recall={}", self.macro_recall);
        let _ = writeln!(s, "macro_f1={}", self.macro_f1);
        let _ = writeln!(s, "weighted_f1={}", self.weighted_f1);
        let _ = writeln!(s, "total={}", self.total);
        for c in &self.classes {
            let key = format!("class.{}", c.name);
            let _ = writeln!(s, "{key}.precision={}", c.precision);
            let _ = writeln!(s, "{key}.recall={}", c.recall);
            let _ = writeln!(s, "{key}.f1={}", c.f1);
            let _ = writeln!(s, "{key}.support={}", c.support);
            let _ = writeln!(s, "{key}.zero_division={}", c.zero_division);
        }
        s
    }

    pub fn class(&self, name: &str) -> Option<&ClassMetrics> {
        self.classes.iter().find(|c| c.name == name)
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}
