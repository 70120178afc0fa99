//! L2-regularized logistic regression solved by damped Newton iterations.
//!
//! Minimizes `0.5 * θᵀθ + C * Σ log(1 + exp(-y_i θᵀx̃_i))` with `y_i ∈ {-1, +1}`.
//! When an intercept is fitted, `x̃_i` is `x_i` with a constant 1 appended and the
//! bias is penalized like any other weight.

use log::warn;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{labels_to_signs, sigmoid, softplus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub c: f64,
    /// Stop once the gradient's infinity norm falls to this value.
    pub tol: f64,
    pub max_iter: usize,
    pub fit_intercept: bool,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            c: 1.0,
            tol: 1e-6,
            max_iter: 100,
            fit_intercept: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearCoefficients {
    pub w: Vec<f64>,
    pub b: f64,
    pub c: f64,
}

impl LinearCoefficients {
    pub fn decision(&self, x: ArrayView1<f64>) -> f64 {
        x.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>() + self.b
    }

    /// `[p_noninjury, p_injury]`.
    pub fn predict_proba(&self, x: ArrayView1<f64>) -> [f64; 2] {
        let p = sigmoid(self.decision(x));
        [1.0 - p, p]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub coefficients: LinearCoefficients,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Objective at the start and after every accepted Newton step, each
    /// entry accumulated from the exact per-step change.
    pub objective_trace: Vec<f64>,
}

/// The regularized logistic objective over an augmented design.
pub struct LogisticObjective {
    x: Array2<f64>,
    y: Array1<f64>,
    c: f64,
}

impl LogisticObjective {
    pub fn new(x: ArrayView2<f64>, labels: &[u8], c: f64, fit_intercept: bool) -> Result<Self> {
        if labels.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                actual: labels.len(),
            });
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Validation(format!("penalty C must be positive, got {c}")));
        }
        let x = if fit_intercept {
            let mut aug = Array2::<f64>::ones((x.nrows(), x.ncols() + 1));
            aug.slice_mut(ndarray::s![.., ..x.ncols()]).assign(&x);
            aug
        } else {
            x.to_owned()
        };
        Ok(LogisticObjective {
            x,
            y: Array1::from(labels_to_signs(labels)),
            c,
        })
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn margins(&self, theta: ArrayView1<f64>) -> Array1<f64> {
        self.x.dot(&theta) * &self.y
    }

    pub fn value(&self, theta: ArrayView1<f64>) -> f64 {
        let loss: f64 = self.margins(theta).iter().map(|&m| softplus(-m)).sum();
        0.5 * theta.dot(&theta) + self.c * loss
    }

    /// `value(theta + step) - value(theta)`, evaluated term by term without
    /// cancellation so tiny decreases near the optimum stay resolvable.
    pub fn change(&self, theta: ArrayView1<f64>, step: ArrayView1<f64>) -> f64 {
        let margins = self.margins(theta);
        let shift = self.x.dot(&step) * &self.y;
        let loss: f64 = margins
            .iter()
            .zip(&shift)
            .map(|(&m, &d)| (sigmoid(-m) * (-d).exp_m1()).ln_1p())
            .sum();
        theta.dot(&step) + 0.5 * step.dot(&step) + self.c * loss
    }

    pub fn gradient(&self, theta: ArrayView1<f64>) -> Array1<f64> {
        let coef: Array1<f64> = self
            .margins(theta)
            .iter()
            .zip(&self.y)
            .map(|(&m, &y)| -self.c * y * sigmoid(-m))
            .collect();
        &theta + &self.x.t().dot(&coef)
    }

    pub fn hessian(&self, theta: ArrayView1<f64>) -> Array2<f64> {
        let weights: Array1<f64> = self
            .margins(theta)
            .iter()
            .map(|&m| (self.c * sigmoid(m) * sigmoid(-m)).sqrt())
            .collect();
        let scaled = &self.x * &weights.insert_axis(Axis(1));
        let mut h = scaled.t().dot(&scaled);
        for i in 0..h.nrows() {
            h[[i, i]] += 1.0;
        }
        h
    }
}

fn inf_norm(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Fits logistic regression with labels in `{0, 1}` (1 is the positive class).
pub fn fit_logreg(x: ArrayView2<f64>, labels: &[u8], config: &LogisticConfig) -> Result<LogisticFit> {
    let objective = LogisticObjective::new(x, labels, config.c, config.fit_intercept)?;
    let mut theta = Array1::<f64>::zeros(objective.dim());
    let mut value = objective.value(theta.view());
    let mut trace = vec![value];
    let mut grad = objective.gradient(theta.view());
    let mut iterations = 0;
    let mut converged = inf_norm(&grad) <= config.tol;

    while !converged && iterations < config.max_iter {
        iterations += 1;
        let hess = objective.hessian(theta.view());
        let direction = crate::linalg::solve_spd(&hess, &grad.mapv(|g| -g))
            .ok_or_else(|| Error::Validation("Newton system is not positive definite".into()))?;
        let slope = grad.dot(&direction);

        // Backtracking line search with the Armijo condition.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let delta = &direction * step;
            let change = objective.change(theta.view(), delta.view());
            if change <= 1e-4 * step * slope {
                accepted = Some((&theta + &delta, value + change));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_value)) = accepted else {
            // No decrease is representable; the iterate is as good as it gets.
            break;
        };
        if !next_value.is_finite() || next.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite { iteration: iterations });
        }
        theta = next;
        value = next_value;
        trace.push(value);
        grad = objective.gradient(theta.view());
        converged = inf_norm(&grad) <= config.tol;
    }

    let gradient_norm = inf_norm(&grad);
    if !converged {
        warn!("logistic regression stopped after {iterations} iterations with gradient norm {gradient_norm:.3e}");
    }

    let p = x.ncols();
    let (w, b) = if config.fit_intercept {
        (theta.slice(ndarray::s![..p]).to_vec(), theta[p])
    } else {
        (theta.to_vec(), 0.0)
    };
    Ok(LogisticFit {
        coefficients: LinearCoefficients { w, b, c: config.c },
        iterations,
        converged,
        gradient_norm,
        objective_trace: trace,
    })
}
