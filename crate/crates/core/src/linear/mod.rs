//! Logistic regression, kernel SVM and Platt calibration.

pub mod logistic;
pub mod platt;
pub mod svm;

pub use logistic::{fit_logreg, LinearCoefficients, LogisticConfig, LogisticFit, LogisticObjective};
pub use platt::{fit_platt, platt_targets, PlattParams};
pub use svm::{fit_svm, KernelSpec, SvmConfig, SvmDualModel};

/// Maps `{0, 1}` labels to `{-1, +1}`.
pub fn labels_to_signs(labels: &[u8]) -> Vec<f64> {
    labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect()
}

/// Logistic function, evaluated without overflow.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}
