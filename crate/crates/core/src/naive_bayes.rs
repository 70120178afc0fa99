//! Gaussian naive Bayes with maximum-likelihood class-conditional moments.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::sigmoid;

/// Relative variance floor: every variance is at least this times the
/// largest per-feature variance of the training data.
pub const VAR_SMOOTHING: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    pub priors: [f64; 2],
    /// Per-class feature means, indexed `[class][feature]`.
    pub means: [Vec<f64>; 2],
    /// Per-class population variances after flooring.
    pub variances: [Vec<f64>; 2],
    pub variance_floor: f64,
}

fn moments<'a>(rows: impl Iterator<Item = ArrayView1<'a, f64>> + Clone, p: usize) -> (Vec<f64>, Vec<f64>, usize) {
    let mut mean = vec![0.0; p];
    let mut n = 0usize;
    for row in rows.clone() {
        n += 1;
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; p];
    for row in rows {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= n as f64);
    (mean, var, n)
}

pub fn fit_gnb(x: ArrayView2<f64>, labels: &[u8]) -> Result<GaussianNbModel> {
    if labels.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: labels.len(),
        });
    }
    let p = x.ncols();
    let (_, overall_var, _) = moments(x.rows().into_iter(), p);
    let max_var = overall_var.iter().cloned().fold(0.0, f64::max);
    let variance_floor = if max_var > 0.0 {
        VAR_SMOOTHING * max_var
    } else {
        VAR_SMOOTHING
    };

    let mut fitted: Vec<(Vec<f64>, Vec<f64>, usize)> = Vec::with_capacity(2);
    for class in [0u8, 1] {
        let rows = x
            .rows()
            .into_iter()
            .zip(labels)
            .filter(move |(_, &l)| l == class)
            .map(|(r, _)| r);
        let (mean, mut var, n) = moments(rows, p);
        if n == 0 {
            return Err(Error::Validation(format!(
                "naive Bayes needs both classes; class {class} is absent"
            )));
        }
        var.iter_mut().for_each(|v| *v = v.max(variance_floor));
        fitted.push((mean, var, n));
    }
    let total = labels.len() as f64;
    let (m1, v1, n1) = fitted.pop().expect("two classes");
    let (m0, v0, n0) = fitted.pop().expect("two classes");
    Ok(GaussianNbModel {
        priors: [n0 as f64 / total, n1 as f64 / total],
        means: [m0, m1],
        variances: [v0, v1],
        variance_floor,
    })
}

impl GaussianNbModel {
    /// `ln P(y = class) + Σ ln N(x_i; μ, σ²)`.
    pub fn log_joint(&self, x: ArrayView1<f64>, class: usize) -> f64 {
        let ll: f64 = x
            .iter()
            .zip(&self.means[class])
            .zip(&self.variances[class])
            .map(|((&v, &m), &s2)| -0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - m) * (v - m) / s2))
            .sum();
        self.priors[class].ln() + ll
    }

    /// `[p₀, p₁]`, normalized in log space.
    pub fn predict_proba(&self, x: ArrayView1<f64>) -> [f64; 2] {
        let p1 = sigmoid(self.log_joint(x, 1) - self.log_joint(x, 0));
        [1.0 - p1, p1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn mle_moments() {
        let x = array![[1.0], [3.0], [10.0], [14.0]];
        let m = fit_gnb(x.view(), &[0, 0, 1, 1]).unwrap();
        assert_eq!(m.means[0][0], 2.0);
        assert_eq!(m.variances[0][0], 1.0);
        assert_eq!(m.means[1][0], 12.0);
        assert_eq!(m.variances[1][0], 4.0);
        assert_eq!(m.priors, [0.5, 0.5]);
    }

    #[test]
    fn constant_feature_gets_floor() {
        let x = array![[1.0, 0.0], [1.0, 4.0], [1.0, 2.0], [5.0, 2.0]];
        let m = fit_gnb(x.view(), &[0, 0, 0, 1]).unwrap();
        assert!(m.variances[0][0] > 0.0);
        assert_eq!(m.variances[0][0], m.variance_floor);
        assert_eq!(m.variances[1][1], m.variance_floor);
    }

    #[test]
    fn symmetric_case() {
        let m = GaussianNbModel {
            priors: [0.5, 0.5],
            means: [vec![-1.0], vec![1.0]],
            variances: [vec![1.0], vec![1.0]],
            variance_floor: 1e-9,
        };
        let [p0, p1] = m.predict_proba(array![0.0].view());
        assert_abs_diff_eq!(p0, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p1, 0.5, epsilon = 1e-15);
        let [_, p1] = m.predict_proba(array![1.0].view());
        assert_abs_diff_eq!(p1, 0.8807970779778823, epsilon = 1e-12);
    }

    #[test]
    fn identical_classes_return_priors() {
        let m = GaussianNbModel {
            priors: [0.7, 0.3],
            means: [vec![0.5, 2.0], vec![0.5, 2.0]],
            variances: [vec![1.5, 0.2], vec![1.5, 0.2]],
            variance_floor: 1e-9,
        };
        let [p0, p1] = m.predict_proba(array![3.0, -4.0].view());
        assert_abs_diff_eq!(p0, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(p1, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(fit_gnb(array![[1.0], [2.0]].view(), &[1, 1]).is_err());
    }

    #[test]
    fn extreme_inputs_stay_normalized() {
        let x = array![[0.0, 1.0], [0.0, 0.0], [1.0, 1.0], [1.0, 0.0]];
        let m = fit_gnb(x.view(), &[0, 0, 1, 1]).unwrap();
        for q in [array![1e3, -1e3], array![-1e3, 1e3], array![0.5, 1e3]] {
            let [p0, p1] = m.predict_proba(q.view());
            assert!(p0.is_finite() && p1.is_finite());
            assert!((p0 + p1 - 1.0).abs() <= 1e-12);
            assert!(p0.max(p1) > 0.0);
        }
    }
}
