//! C-support vector classification trained by sequential minimal optimization.
//!
//! Solves the dual `min ½ αᵀQα − eᵀα` subject to `0 ≤ α_i ≤ C` and `yᵀα = 0`,
//! with `Q_ij = y_i y_j K(x_i, x_j)`. Each iteration updates the maximal
//! KKT-violating pair; the solver stops when the violation gap is at most
//! `tol`.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::labels_to_signs;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
    Polynomial { gamma: f64, degree: u32, coef0: f64 },
}

impl KernelSpec {
    /// RBF kernel with the default `gamma = 1 / n_features`.
    pub fn rbf_default(n_features: usize) -> Self {
        KernelSpec::Rbf {
            gamma: default_gamma(n_features),
        }
    }

    pub fn polynomial_default(n_features: usize, degree: u32) -> Self {
        KernelSpec::Polynomial {
            gamma: default_gamma(n_features),
            degree,
            coef0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } | KernelSpec::Polynomial { gamma, .. } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::Validation(format!("kernel gamma must be positive, got {gamma}")))
            }
            KernelSpec::Polynomial { degree: 0, .. } => {
                Err(Error::Validation("polynomial degree must be at least 1".into()))
            }
            KernelSpec::Polynomial { coef0, .. } if !coef0.is_finite() => {
                Err(Error::Validation("polynomial coef0 must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(a, b),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            KernelSpec::Polynomial { gamma, degree, coef0 } => (gamma * dot(a, b) + coef0).powi(degree as i32),
        }
    }
}

pub fn default_gamma(n_features: usize) -> f64 {
    1.0 / n_features.max(1) as f64
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub kernel: KernelSpec,
    /// Maximum tolerated KKT violation gap at return.
    pub tol: f64,
    /// Iteration cap; `None` means `max(DEFAULT_MAX_ITER, 100 * n)`.
    pub max_iter: Option<usize>,
    /// Kernel column cache budget in megabytes.
    pub cache_mb: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 9.0,
            kernel: KernelSpec::Linear,
            tol: 1e-3,
            max_iter: None,
            cache_mb: 200,
        }
    }
}

/// Fitted dual solution restricted to the support vectors (`α_i > 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmDualModel {
    pub alphas: Vec<f64>,
    /// Training-row index of each support vector.
    pub support_rows: Vec<usize>,
    /// Sign label (`±1`) of each support vector.
    pub support_signs: Vec<f64>,
    pub support_vectors: Array2<f64>,
    pub b: f64,
    pub kernel: KernelSpec,
    pub c: f64,
    pub iterations: usize,
    /// Final maximal violation `max_{I_up} -yG − min_{I_low} -yG`.
    pub kkt_gap: f64,
}

impl SvmDualModel {
    /// `Σ α_i y_i K(x_i, x) + b`.
    pub fn decision(&self, x: ArrayView1<f64>) -> f64 {
        let owned;
        let x = match x.as_slice() {
            Some(s) => s,
            None => {
                owned = x.to_vec();
                &owned
            }
        };
        self.support_vectors
            .outer_iter()
            .zip(self.alphas.iter().zip(&self.support_signs))
            .map(|(sv, (a, y))| a * y * self.kernel.eval(sv.as_slice().expect("standard layout"), x))
            .sum::<f64>()
            + self.b
    }

    pub fn decision_batch(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.axis_iter(Axis(0))
            .into_par_iter()
            .map(|row| self.decision(row))
            .collect()
    }
}

/// FIFO cache of kernel matrix columns.
struct KernelColumns<'a> {
    x: &'a Array2<f64>,
    kernel: KernelSpec,
    capacity: usize,
    columns: HashMap<usize, Arc<Vec<f64>>>,
    order: VecDeque<usize>,
}

impl<'a> KernelColumns<'a> {
    fn new(x: &'a Array2<f64>, kernel: KernelSpec, cache_mb: usize) -> Self {
        let column_bytes = 8 * x.nrows().max(1);
        let capacity = ((cache_mb << 20) / column_bytes).max(2);
        KernelColumns {
            x,
            kernel,
            capacity,
            columns: HashMap::new(),
            order: VecDeque::new(),
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        self.x.row(i).to_slice().expect("standard layout")
    }

    fn column(&mut self, i: usize) -> Arc<Vec<f64>> {
        if let Some(col) = self.columns.get(&i) {
            return Arc::clone(col);
        }
        let xi = self.row(i);
        let n = self.x.nrows();
        let kernel = self.kernel;
        let col: Vec<f64> = if n >= 2048 {
            (0..n).into_par_iter().map(|t| kernel.eval(self.row(t), xi)).collect()
        } else {
            (0..n).map(|t| kernel.eval(self.row(t), xi)).collect()
        };
        let col = Arc::new(col);
        if self.columns.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.columns.remove(&old);
            }
        }
        self.columns.insert(i, Arc::clone(&col));
        self.order.push_back(i);
        col
    }
}

const TAU: f64 = 1e-12;

/// Iteration floor when `max_iter` is unset.
pub const DEFAULT_MAX_ITER: usize = 10_000_000;

/// Trains a C-SVC on labels in `{0, 1}` (mapped to `-1, +1`).
pub fn fit_svm(x: ArrayView2<f64>, labels: &[u8], config: &SvmConfig) -> Result<SvmDualModel> {
    let n = x.nrows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(Error::Validation(format!(
            "penalty C must be positive, got {}",
            config.c
        )));
    }
    config.kernel.validate()?;
    if n == 0 {
        return Err(Error::Validation("cannot fit an SVM on zero rows".into()));
    }

    let data = x.as_standard_layout().to_owned();
    let y = labels_to_signs(labels);
    let c = config.c;
    let max_iter = config.max_iter.unwrap_or_else(|| DEFAULT_MAX_ITER.max(100 * n));
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let r = data.row(i);
            let r = r.to_slice().expect("standard layout");
            config.kernel.eval(r, r)
        })
        .collect();
    let mut cache = KernelColumns::new(&data, config.kernel, config.cache_mb);

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    let mut iterations = 0;
    let gap = loop {
        // i maximizes the violation; j maximizes the second-order decrease
        // of the dual objective given i.
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i = t;
            }
        }
        let col_i = (i != usize::MAX).then(|| cache.column(i));
        let mut j = usize::MAX;
        let mut g_min = f64::INFINITY;
        let mut best_decrease = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            g_min = g_min.min(v);
            if let Some(col_i) = &col_i {
                let diff = g_max - v;
                if diff > 0.0 {
                    let quad = (diag[i] + diag[t] - 2.0 * col_i[t]).max(TAU);
                    let decrease = -diff * diff / quad;
                    if decrease < best_decrease {
                        best_decrease = decrease;
                        j = t;
                    }
                }
            }
        }
        let gap = if i == usize::MAX || g_min == f64::INFINITY {
            0.0
        } else {
            g_max - g_min
        };
        if gap <= config.tol || j == usize::MAX {
            break gap;
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence {
                iterations,
                violation: gap,
            });
        }
        iterations += 1;

        let col_i = col_i.expect("i is set whenever the gap is positive");
        let col_j = cache.column(j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = col_i[j];

        if y[i] != y[j] {
            let quad = (diag[i] + diag[j] - 2.0 * kij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (diag[i] + diag[j] - 2.0 * kij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let d_i = alpha[i] - old_i;
        let d_j = alpha[j] - old_j;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * col_i[t] * d_i + y[j] * col_j[t] * d_j);
        }
    };

    let b = -compute_rho(&alpha, &grad, &y, c);
    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    Ok(SvmDualModel {
        alphas: support.iter().map(|&t| alpha[t]).collect(),
        support_signs: support.iter().map(|&t| y[t]).collect(),
        support_vectors: data.select(Axis(0), &support),
        support_rows: support,
        b,
        kernel: config.kernel,
        c,
        iterations,
        kkt_gap: gap,
    })
}

/// Offset from the KKT conditions: the mean of `y_i G_i` over free
/// variables, or the midpoint of the feasible interval when none are free.
fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else {
        0.5 * (upper + lower)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn fit(x: Array2<f64>, labels: &[u8], c: f64, kernel: KernelSpec) -> SvmDualModel {
        let config = SvmConfig {
            c,
            kernel,
            ..SvmConfig::default()
        };
        fit_svm(x.view(), labels, &config).unwrap()
    }

    #[test]
    fn two_point_max_margin() {
        let m = fit(array![[0.0], [2.0]], &[0, 1], 1e3, KernelSpec::Linear);
        // w = Σ α y x
        let w: f64 = m
            .support_vectors
            .column(0)
            .iter()
            .zip(m.alphas.iter().zip(&m.support_signs))
            .map(|(x, (a, y))| a * y * x)
            .sum();
        assert_abs_diff_eq!(w, 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(m.decision(array![1.0].view()), 0.0, epsilon = 1e-3);
        assert_abs_diff_eq!(m.decision(array![0.0].view()), -1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(m.decision(array![2.0].view()), 1.0, epsilon = 1e-3);
        assert!(m.kkt_gap <= 1e-3);
    }

    #[test]
    fn conflicting_duplicates_sit_at_bound() {
        let c = 2.5;
        let m = fit(array![[1.0, 1.0], [1.0, 1.0]], &[1, 0], c, KernelSpec::Linear);
        assert_eq!(m.alphas.len(), 2);
        for a in &m.alphas {
            assert_abs_diff_eq!(*a, c, epsilon = 1e-12);
        }
    }

    #[test]
    fn rescaled_features_keep_training_predictions() {
        let base = fit(array![[0.0], [2.0]], &[0, 1], 1e3, KernelSpec::Linear);
        let scaled = fit(array![[0.0], [20.0]], &[0, 1], 1e3, KernelSpec::Linear);
        for (a, b) in [(0.0, 0.0), (2.0, 20.0)] {
            let da = base.decision(array![a].view());
            let db = scaled.decision(array![b].view());
            assert_eq!(da.signum(), db.signum());
            assert_abs_diff_eq!(da, db, epsilon = 1e-3);
        }
    }

    #[test]
    fn rejects_nonpositive_gamma() {
        let config = SvmConfig {
            kernel: KernelSpec::Rbf { gamma: 0.0 },
            ..SvmConfig::default()
        };
        assert!(fit_svm(array![[0.0], [1.0]].view(), &[0, 1], &config).is_err());
        assert!(KernelSpec::Polynomial {
            gamma: 1.0,
            degree: 0,
            coef0: 0.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn iteration_cap_is_an_error() {
        let x = array![[0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [0.2, 0.1], [0.9, 0.4]];
        let config = SvmConfig {
            c: 10.0,
            kernel: KernelSpec::Rbf { gamma: 1.0 },
            max_iter: Some(1),
            ..SvmConfig::default()
        };
        let err = fit_svm(x.view(), &[0, 0, 1, 1, 0], &config).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn dual_feasibility_on_overlapping_data() {
        let x = array![
            [0.0, 0.1],
            [0.4, -0.3],
            [1.0, 1.2],
            [0.8, 0.6],
            [0.5, 0.5],
            [0.45, 0.55],
            [-0.2, 0.9],
            [1.1, -0.1]
        ];
        let labels = [0, 0, 1, 1, 0, 1, 1, 0];
        for kernel in [
            KernelSpec::Linear,
            KernelSpec::Rbf { gamma: 0.7 },
            KernelSpec::Polynomial {
                gamma: 0.5,
                degree: 3,
                coef0: 1.0,
            },
        ] {
            let c = 3.0;
            let m = fit(x.clone(), &labels, c, kernel);
            assert!(m.alphas.iter().all(|&a| (0.0..=c).contains(&a)));
            let balance: f64 = m.alphas.iter().zip(&m.support_signs).map(|(a, y)| a * y).sum();
            assert!(balance.abs() <= 1e-6 * c * 8.0, "balance {balance}");
            assert!(m.kkt_gap <= 1e-3);
        }
    }
}
