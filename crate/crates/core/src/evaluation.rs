//! Classification metrics and ROC analysis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    /// Counts with `positive` treated as the positive class.
    pub fn for_class(predictions: &[u8], labels: &[u8], positive: u8) -> Self {
        let mut c = ConfusionCounts::default();
        for (&p, &l) in predictions.iter().zip(labels) {
            match (p == positive, l == positive) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

impl ClassMetrics {
    fn from_counts(c: &ConfusionCounts) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support: c.tp + c.fn_,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Indexed by class: 0 non-injury, 1 injury.
    pub classes: [ClassMetrics; 2],
    /// Support-weighted mean of the per-class rows.
    pub weighted: AverageMetrics,
    pub accuracy: f64,
    pub auc: Option<f64>,
}

impl EvaluationReport {
    /// Fixed-width table with two decimals.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<12}{:>10}{:>10}{:>10}{:>10}\n",
            "", "precision", "recall", "f1-score", "support"
        );
        for (name, m) in ["Non-injury", "Injury"].iter().zip(&self.classes) {
            out.push_str(&format!(
                "{:<12}{:>10.2}{:>10.2}{:>10.2}{:>10}\n",
                name, m.precision, m.recall, m.f1, m.support
            ));
        }
        let support: usize = self.classes.iter().map(|c| c.support).sum();
        out.push_str(&format!(
            "{:<12}{:>10.2}{:>10.2}{:>10.2}{:>10}\n",
            "Average", self.weighted.precision, self.weighted.recall, self.weighted.f1, support
        ));
        if let Some(auc) = self.auc {
            out.push_str(&format!("AUC {auc:.2}\n"));
        }
        out
    }
}

/// Per-class precision, recall and F1 plus support-weighted averages.
pub fn classification_report(predictions: &[u8], labels: &[u8]) -> Result<EvaluationReport> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Validation("cannot evaluate zero rows".into()));
    }
    let classes = [0u8, 1].map(|c| ClassMetrics::from_counts(&ConfusionCounts::for_class(predictions, labels, c)));
    let n = labels.len() as f64;
    let weighted_mean = |f: fn(&ClassMetrics) -> f64| classes.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / n;
    let weighted = AverageMetrics {
        precision: weighted_mean(|c| c.precision),
        recall: weighted_mean(|c| c.recall),
        f1: weighted_mean(|c| c.f1),
    };
    let correct = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(EvaluationReport {
        classes,
        weighted,
        accuracy: correct as f64 / n,
        auc: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// From `(0, 0)` at the sentinel threshold to `(1, 1)` at the lowest score.
    pub points: Vec<RocPoint>,
}

/// ROC curve over every distinct score. A row is predicted positive when its
/// score is at least the threshold; the first threshold is one above the
/// largest score so the curve starts at `(0, 0)`.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Validation("score is NaN".into()));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Validation(
            "ROC needs at least one positive and one negative label".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let top = scores[order[0]];
    let mut points = vec![RocPoint {
        threshold: top + 1.0,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
        });
    }
    Ok(RocCurve { points })
}

/// Area under the curve by the trapezoidal rule.
pub fn auc_trapezoid(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    roc_curve(scores, labels).map(|c| auc_trapezoid(&c))
}

impl RocCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
        out
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Standalone SVG with one ROC polyline per model and AUC in the legend.
pub fn roc_svg(curves: &[(String, RocCurve)]) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 50.0;
    let px = |v: f64| PAD + v * SIZE;
    let py = |v: f64| PAD + (1.0 - v) * SIZE;
    let total = SIZE + 2.0 * PAD;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{w}\" viewBox=\"0 0 {w} {w}\">\n",
        w = total + 160.0
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"none\" stroke=\"black\"/>\n"
    ));
    for t in 0..=5 {
        let v = t as f64 / 5.0;
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{v:.1}</text>\n",
            px(v),
            py(0.0) + 16.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{v:.1}</text>\n",
            px(0.0) - 6.0,
            py(v) + 4.0
        ));
    }
    svg.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n",
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">False positive rate</text>\n",
        px(0.5),
        total - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">True positive rate</text>\n",
        py(0.5),
        py(0.5)
    ));
    for (i, (name, curve)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.fpr), py(p.tpr)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        let y = PAD + 16.0 + 18.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{x1:.1}\" y1=\"{y:.1}\" x2=\"{x2:.1}\" y2=\"{y:.1}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            x1 = px(1.0) + 12.0,
            x2 = px(1.0) + 32.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{} (AUC = {:.2})</text>\n",
            px(1.0) + 38.0,
            y + 4.0,
            escape_xml(name),
            auc_trapezoid(curve)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn coords(c: &RocCurve) -> Vec<(f64, f64)> {
        c.points.iter().map(|p| (p.fpr, p.tpr)).collect()
    }

    #[test]
    fn perfect_predictions() {
        let r = classification_report(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap();
        for c in &r.classes {
            assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn worked_report_example() {
        let r = classification_report(&[1, 0, 0, 0], &[1, 1, 0, 0]).unwrap();
        let [c0, c1] = r.classes;
        assert_abs_diff_eq!(c1.precision, 1.0);
        assert_abs_diff_eq!(c1.recall, 0.5);
        assert_abs_diff_eq!(c1.f1, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c0.precision, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c0.recall, 1.0);
        assert_abs_diff_eq!(c0.f1, 0.8, epsilon = 1e-15);
    }

    #[test]
    fn zero_over_zero_is_zero() {
        let r = classification_report(&[0, 0, 0], &[0, 1, 0]).unwrap();
        assert_eq!(r.classes[1].precision, 0.0);
        assert_eq!(r.classes[1].f1, 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(classification_report(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn roc_examples() {
        let c = roc_curve(&[1.0, 0.0], &[1, 0]).unwrap();
        assert_eq!(coords(&c), vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        assert_eq!(auc_trapezoid(&c), 1.0);

        let c = roc_curve(&[0.3, 0.3, 0.3], &[1, 0, 1]).unwrap();
        assert_eq!(coords(&c), vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auc_trapezoid(&c), 0.5);

        let c = roc_curve(&[0.9, 0.8, 0.7, 0.6], &[1, 0, 1, 0]).unwrap();
        assert_eq!(
            coords(&c),
            vec![(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)]
        );
        assert_abs_diff_eq!(auc_trapezoid(&c), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn single_class_rejected() {
        assert!(roc_curve(&[0.1, 0.2], &[1, 1]).is_err());
    }

    #[test]
    fn csv_and_svg_exports() {
        let c = roc_curve(&[1.0, 0.0], &[1, 0]).unwrap();
        assert_eq!(c.to_csv(), "threshold,fpr,tpr\n2,0,0\n1,0,1\n0,1,1\n");
        let svg = roc_svg(&[("logreg".into(), c)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("logreg (AUC = 1.00)"));
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
}
