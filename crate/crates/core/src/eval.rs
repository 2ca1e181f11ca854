//! Confusion matrices, precision / recall / F1 / accuracy and comparison
//! reports. Depressive is always the positive class.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::label::Label;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{0} true labels but {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("nothing to evaluate")]
    Empty,
    #[error("report has no rows")]
    EmptyReport,
    #[error("duplicate classifier name {0:?} in report")]
    DuplicateName(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
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

    pub fn record(&mut self, truth: Label, pred: Label) {
        match (truth, pred) {
            (Label::Depressive, Label::Depressive) => self.tp += 1,
            (Label::NonDepressive, Label::Depressive) => self.fp += 1,
            (Label::Depressive, Label::NonDepressive) => self.fn_ += 1,
            (Label::NonDepressive, Label::NonDepressive) => self.tn += 1,
        }
    }

    /// The same counts with non_depressive taken as the positive class.
    pub fn swapped(&self) -> ConfusionMatrix {
        ConfusionMatrix { tp: self.tn, fp: self.fn_, fn_: self.fp, tn: self.tp }
    }

    /// Labeled 2×2 grid, rows = actual, columns = predicted.
    pub fn render_grid(&self) -> String {
        let w = [self.tp, self.fp, self.fn_, self.tn].iter().map(|v| v.to_string().len()).max().unwrap_or(1).max(14);
        let mut s = String::new();
        let _ = writeln!(s, "{:<22} {:>w$} {:>w$}", "actual \\ predicted", "depressive", "non_depressive");
        let _ = writeln!(s, "{:<22} {:>w$} {:>w$}", "depressive", self.tp, self.fn_);
        let _ = writeln!(s, "{:<22} {:>w$} {:>w$}", "non_depressive", self.fp, self.tn);
        s
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        cm.record(t, p);
    }
    Ok(cm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    ratio(2.0 * precision * recall, precision + recall)
}

/// Undefined ratios (0/0) are reported as 0.
pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    let (tp, fp, fn_, tn) = (cm.tp as f64, cm.fp as f64, cm.fn_ as f64, cm.tn as f64);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Metrics { precision, recall, f1: f1_score(precision, recall), accuracy: ratio(tp + tn, tp + fp + fn_ + tn) }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub classifier: String,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

pub const CSV_HEADER: &str = "classifier,precision,recall,f1,accuracy";
const COLUMNS: [&str; 5] = ["Classifier", "Precision", "Recall", "F1 Score", "Accuracy"];

impl Report {
    pub fn push(&mut self, classifier: impl Into<String>, metrics: Metrics) -> Result<(), EvalError> {
        let classifier = classifier.into();
        if self.rows.iter().any(|r| r.classifier == classifier) {
            return Err(EvalError::DuplicateName(classifier));
        }
        self.rows.push(ReportRow { classifier, metrics });
        Ok(())
    }

    fn cells(&self) -> Vec<[String; 5]> {
        self.rows
            .iter()
            .map(|r| {
                let m = &r.metrics;
                [
                    r.classifier.clone(),
                    format!("{:.2}", m.precision),
                    format!("{:.2}", m.recall),
                    format!("{:.2}", m.f1),
                    format!("{:.2}%", 100.0 * m.accuracy),
                ]
            })
            .collect()
    }

    /// `classifier,precision,recall,f1,accuracy` with a header line.
    pub fn to_csv(&self) -> Result<String, EvalError> {
        if self.rows.is_empty() {
            return Err(EvalError::EmptyReport);
        }
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in self.cells() {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Ok(out)
    }

    /// Fixed-width table; the name column is left aligned, numbers right.
    pub fn to_table(&self) -> Result<String, EvalError> {
        if self.rows.is_empty() {
            return Err(EvalError::EmptyReport);
        }
        let cells = self.cells();
        let mut widths = COLUMNS.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let line = |row: [&str; 5]| {
            let mut s = format!("{:<w$}", row[0], w = widths[0]);
            for (c, w) in row.iter().zip(widths).skip(1) {
                let _ = write!(s, "  {c:>w$}");
            }
            s.push('\n');
            s
        };
        let mut out = line(COLUMNS);
        for row in &cells {
            out.push_str(&line([&row[0], &row[1], &row[2], &row[3], &row[4]]));
        }
        Ok(out)
    }
}

/// Text table followed by the CSV form.
pub fn render_report(report: &Report) -> Result<(String, String), EvalError> {
    Ok((report.to_table()?, report.to_csv()?))
}
