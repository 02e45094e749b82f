//! Confusion-matrix based classification metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Nothing was predicted as this class; precision reported as 0.
    pub precision_undefined: bool,
    /// The class never occurs in the ground truth; recall reported as 0.
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<u64>>,
    pub total: u64,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Unweighted mean over classes that occur in the truth or the predictions.
    pub macro_avg: Averages,
    /// Support-weighted mean over all classes.
    pub weighted_avg: Averages,
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], classes: usize) -> Result<Vec<Vec<u64>>> {
    if y_true.len() != y_pred.len() {
        return Err(shape_err("confusion", format!("{} truths, {} predictions", y_true.len(), y_pred.len())));
    }
    let mut m = vec![vec![0u64; classes]; classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for index in [t, p] {
            if index >= classes {
                return Err(Error::IndexOutOfRange { index, classes });
            }
        }
        m[t][p] += 1;
    }
    Ok(m)
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn metrics_from_confusion(confusion: &[Vec<u64>], class_names: &[String]) -> Result<MetricsReport> {
    let c = confusion.len();
    if confusion.iter().any(|r| r.len() != c) || class_names.len() != c {
        return Err(shape_err("metrics", format!("{c} confusion rows, {} class names", class_names.len())));
    }
    let total: u64 = confusion.iter().flatten().sum();
    if total == 0 {
        return Err(Error::EmptyInput("no samples to evaluate"));
    }
    let trace: u64 = (0..c).map(|i| confusion[i][i]).sum();
    let mut per_class = Vec::with_capacity(c);
    for k in 0..c {
        let tp = confusion[k][k];
        let support: u64 = confusion[k].iter().sum();
        let predicted: u64 = confusion.iter().map(|r| r[k]).sum();
        let (precision, precision_undefined) = ratio(tp, predicted);
        let (recall, recall_undefined) = ratio(tp, support);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassMetrics {
            name: class_names[k].clone(),
            precision,
            recall,
            f1,
            support,
            precision_undefined,
            recall_undefined,
        });
    }
    let present: Vec<&ClassMetrics> = per_class
        .iter()
        .filter(|m| !(m.precision_undefined && m.recall_undefined))
        .collect();
    let n = present.len() as f64;
    let macro_avg = Averages {
        precision: present.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: present.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: present.iter().map(|m| m.f1).sum::<f64>() / n,
    };
    let w = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total as f64;
    let weighted_avg = Averages {
        precision: w(|m| m.precision),
        recall: w(|m| m.recall),
        f1: w(|m| m.f1),
    };
    Ok(MetricsReport {
        confusion: confusion.to_vec(),
        total,
        accuracy: trace as f64 / total as f64,
        per_class,
        macro_avg,
        weighted_avg,
    })
}

pub fn classification_report(y_true: &[usize], y_pred: &[usize], class_names: &[String]) -> Result<MetricsReport> {
    metrics_from_confusion(&confusion_matrix(y_true, y_pred, class_names.len())?, class_names)
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned per-class table followed by the averages. Undefined ratios are
    /// marked with `*`.
    pub fn to_table(&self) -> String {
        let width = self.per_class.iter().map(|m| m.name.len()).chain(["weighted avg".len()]).max().unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>10}  {:>10}  {:>10}  {:>8}", "class", "precision", "recall", "f1", "support");
        let cell = |v: f64, undefined: bool| format!("{v:.4}{}", if undefined { "*" } else { " " });
        for m in &self.per_class {
            let _ = writeln!(
                out,
                "{:<width$}  {:>10}  {:>10}  {:>10.4}   {:>8}",
                m.name,
                cell(m.precision, m.precision_undefined),
                cell(m.recall, m.recall_undefined),
                m.f1,
                m.support
            );
        }
        let _ = writeln!(out);
        for (label, a) in [("macro avg", self.macro_avg), ("weighted avg", self.weighted_avg)] {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}   {:>9.4}   {:>10.4}   {:>8}",
                label, a.precision, a.recall, a.f1, self.total
            );
        }
        let _ = writeln!(out, "{:<width$}  {:>10.4}", "accuracy", self.accuracy);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn perfect_predictor() {
        let r = metrics_from_confusion(&[vec![50, 0], vec![0, 50]], &names(2)).unwrap();
        assert_eq!(r.accuracy, 1.0);
        for m in &r.per_class {
            assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.macro_avg, Averages { precision: 1.0, recall: 1.0, f1: 1.0 });
    }

    #[test]
    fn single_class_truth_is_flagged_not_nan() {
        let r = classification_report(&[0, 0, 0], &[0, 0, 0], &names(2)).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert!(r.per_class[1].precision_undefined && r.per_class[1].recall_undefined);
        assert_eq!(r.per_class[1].f1, 0.0);
        assert_eq!(r.macro_avg.f1, 1.0);
        assert!(r.to_table().contains("0.0000*"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(classification_report(&[], &[], &names(2)), Err(Error::EmptyInput(_))));
        assert!(matches!(
            classification_report(&[0], &[2], &names(2)),
            Err(Error::IndexOutOfRange { index: 2, classes: 2 })
        ));
    }
}
