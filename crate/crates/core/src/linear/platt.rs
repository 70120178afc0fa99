//! Platt scaling: a two-parameter sigmoid fitted to decision values.
//!
//! Fits `P(y = 1 | f) = 1 / (1 + exp(A f + B))` by regularized maximum
//! likelihood against smoothed targets `t₊ = (N₊ + 1) / (N₊ + 2)` and
//! `t₋ = 1 / (N₋ + 2)`, using Newton's method with backtracking and a small
//! ridge on the Hessian (Lin, Lin and Weng's formulation).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattParams {
    pub a: f64,
    pub b: f64,
}

impl PlattParams {
    /// Probability of the positive class for a decision value.
    pub fn probability(&self, decision: f64) -> f64 {
        let fapb = decision * self.a + self.b;
        if fapb >= 0.0 {
            let e = (-fapb).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + fapb.exp())
        }
    }

    /// `[p_noninjury, p_injury]`.
    pub fn predict_proba(&self, decision: f64) -> [f64; 2] {
        let p = self.probability(decision);
        [1.0 - p, p]
    }
}

/// Smoothed (negative, positive) targets for the given class counts.
pub fn platt_targets(n_pos: usize, n_neg: usize) -> (f64, f64) {
    let hi = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
    let lo = 1.0 / (n_neg as f64 + 2.0);
    (lo, hi)
}

const MAX_ITER: usize = 100;
const MIN_STEP: f64 = 1e-10;
const HESSIAN_RIDGE: f64 = 1e-12;
const GRAD_TOL: f64 = 1e-5;

fn negative_log_likelihood(decisions: &[f64], targets: &[f64], a: f64, b: f64) -> f64 {
    decisions
        .iter()
        .zip(targets)
        .map(|(&f, &t)| {
            let fapb = f * a + b;
            if fapb >= 0.0 {
                t * fapb + (-fapb).exp().ln_1p()
            } else {
                (t - 1.0) * fapb + fapb.exp().ln_1p()
            }
        })
        .sum()
}

/// Fits Platt parameters to decision values with labels in `{0, 1}`.
pub fn fit_platt(decisions: &[f64], labels: &[u8]) -> Result<PlattParams> {
    if decisions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: decisions.len(),
            actual: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Validation("Platt scaling needs examples of both classes".into()));
    }
    if decisions.iter().any(|f| !f.is_finite()) {
        return Err(Error::Validation("non-finite decision value".into()));
    }
    let (lo, hi) = platt_targets(n_pos, n_neg);
    let targets: Vec<f64> = labels.iter().map(|&l| if l == 1 { hi } else { lo }).collect();

    let mut a = 0.0;
    let mut b = ((n_neg as f64 + 1.0) / (n_pos as f64 + 1.0)).ln();
    let mut fval = negative_log_likelihood(decisions, &targets, a, b);

    for _ in 0..MAX_ITER {
        let (mut h11, mut h22, mut h21) = (HESSIAN_RIDGE, HESSIAN_RIDGE, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        for (&f, &t) in decisions.iter().zip(&targets) {
            let fapb = f * a + b;
            let (p, q) = if fapb >= 0.0 {
                let e = (-fapb).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = fapb.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < GRAD_TOL && g2.abs() < GRAD_TOL {
            break;
        }

        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;

        let mut step = 1.0;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = negative_log_likelihood(decisions, &targets, na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < MIN_STEP {
            break;
        }
    }
    Ok(PlattParams { a, b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn targets_for_three_and_one() {
        let (lo, hi) = platt_targets(3, 1);
        assert_abs_diff_eq!(hi, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(lo, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn ranked_values_give_negative_slope() {
        let f = [-2.0, -1.5, -0.3, 0.4, 1.1, 2.5];
        let params = fit_platt(&f, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!(params.a < 0.0);
        let probs: Vec<f64> = f.iter().map(|&v| params.probability(v)).collect();
        assert!(probs.windows(2).all(|w| w[1] > w[0]));
        assert!(probs.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn zero_decisions_balanced_classes_give_half() {
        let params = fit_platt(&[0.0; 6], &[0, 1, 0, 1, 0, 1]).unwrap();
        for f in [-5.0, 0.0, 3.0] {
            assert_abs_diff_eq!(params.probability(f), 0.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(fit_platt(&[0.1, 0.2], &[1, 1]).is_err());
    }

    #[test]
    fn proba_pairs_sum_to_one() {
        let params = PlattParams { a: -1.7, b: 0.3 };
        for f in [-1e6, -3.0, 0.0, 0.25, 40.0, 1e6] {
            let [p0, p1] = params.predict_proba(f);
            assert!((p0 + p1 - 1.0).abs() <= 1e-12);
        }
        let mid = PlattParams { a: -1.0, b: 0.0 };
        assert_eq!(mid.predict_proba(0.0), [0.5, 0.5]);
        assert_abs_diff_eq!(mid.probability(3f64.ln()), 0.75, epsilon = 1e-15);
        assert_eq!(mid.probability(1e6), 1.0);
    }
}
