//! The interface shared by all five learners and their hyperparameters.

use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{fit_forest, ForestConfig, ForestModel};
use crate::knn::{fit_knn, KnnModel};
use crate::linear::{
    fit_logreg, fit_platt, fit_svm, svm::default_gamma, KernelSpec, LinearCoefficients, LogisticConfig, PlattParams,
    SvmConfig, SvmDualModel,
};
use crate::naive_bayes::{fit_gnb, GaussianNbModel};

/// Probabilistic binary classifier. Probabilities are `[p_noninjury, p_injury]`.
pub trait Classifier: Sync {
    fn predict_proba(&self, x: ArrayView1<f64>) -> [f64; 2];

    /// Class 1 only when it is strictly more probable; ties go to class 0.
    fn predict(&self, x: ArrayView1<f64>) -> u8 {
        let [p0, p1] = self.predict_proba(x);
        u8::from(p1 > p0)
    }

    fn predict_proba_batch(&self, x: ArrayView2<f64>) -> Vec<[f64; 2]> {
        x.axis_iter(Axis(0))
            .into_par_iter()
            .map(|row| self.predict_proba(row))
            .collect()
    }

    fn predict_batch(&self, x: ArrayView2<f64>) -> Vec<u8> {
        x.axis_iter(Axis(0))
            .into_par_iter()
            .map(|row| self.predict(row))
            .collect()
    }
}

impl Classifier for LinearCoefficients {
    fn predict_proba(&self, x: ArrayView1<f64>) -> [f64; 2] {
        LinearCoefficients::predict_proba(self, x)
    }
}

impl Classifier for GaussianNbModel {
    fn predict_proba(&self, x: ArrayView1<f64>) -> [f64; 2] {
        GaussianNbModel::predict_proba(self, x)
    }
}

impl Classifier for KnnModel {
    fn predict_proba(&self, x: ArrayView1<f64>) -> [f64; 2] {
        KnnModel::predict_proba(self, x)
    }
}

impl Classifier for ForestModel {
    fn predict_proba(&self, x: ArrayView1<f64>) -> [f64; 2] {
        ForestModel::predict_proba(self, x)
    }
}

/// SVM decision function with Platt-calibrated probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmClassifier {
    pub dual: SvmDualModel,
    pub platt: PlattParams,
}

impl Classifier for SvmClassifier {
    fn predict_proba(&self, x: ArrayView1<f64>) -> [f64; 2] {
        self.platt.predict_proba(self.dual.decision(x))
    }

    /// Sign of the decision function; a zero decision value is class 0.
    fn predict(&self, x: ArrayView1<f64>) -> u8 {
        u8::from(self.dual.decision(x) > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Logreg,
    Svm,
    Gnb,
    Knn,
    Forest,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::Logreg,
        ModelFamily::Svm,
        ModelFamily::Gnb,
        ModelFamily::Knn,
        ModelFamily::Forest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Logreg => "logreg",
            ModelFamily::Svm => "svm",
            ModelFamily::Gnb => "gnb",
            ModelFamily::Knn => "knn",
            ModelFamily::Forest => "forest",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelFamily::Logreg => "Logistic Regression",
            ModelFamily::Svm => "SVM",
            ModelFamily::Gnb => "Naive Bayes",
            ModelFamily::Knn => "kNN",
            ModelFamily::Forest => "Random Forest",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Validation(format!("unknown model family {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Rbf,
    Polynomial,
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "rbf" => Ok(KernelKind::Rbf),
            "polynomial" | "poly" => Ok(KernelKind::Polynomial),
            other => Err(Error::Validation(format!("unknown kernel {other:?}"))),
        }
    }
}

/// SVM hyperparameters before the feature count is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: KernelKind,
    /// `None` means `1 / n_features`.
    pub gamma: Option<f64>,
    pub degree: u32,
    pub coef0: f64,
    pub tol: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 9.0,
            kernel: KernelKind::Linear,
            gamma: None,
            degree: 3,
            coef0: 0.0,
            tol: 1e-3,
        }
    }
}

impl SvmParams {
    pub fn resolve(&self, n_features: usize) -> SvmConfig {
        let gamma = self.gamma.unwrap_or_else(|| default_gamma(n_features));
        let kernel = match self.kernel {
            KernelKind::Linear => KernelSpec::Linear,
            KernelKind::Rbf => KernelSpec::Rbf { gamma },
            KernelKind::Polynomial => KernelSpec::Polynomial {
                gamma,
                degree: self.degree,
                coef0: self.coef0,
            },
        };
        SvmConfig {
            c: self.c,
            kernel,
            tol: self.tol,
            ..SvmConfig::default()
        }
    }
}

pub const DEFAULT_K: usize = 8;

/// A model family together with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Logreg(LogisticConfig),
    Svm(SvmParams),
    Gnb,
    Knn { k: usize },
    Forest(ForestConfig),
}

impl ModelSpec {
    /// Defaults: C = 1 logistic regression, linear SVM with C = 9, k = 8,
    /// 200 trees.
    pub fn default_for(family: ModelFamily, seed: u64) -> Self {
        match family {
            ModelFamily::Logreg => ModelSpec::Logreg(LogisticConfig::default()),
            ModelFamily::Svm => ModelSpec::Svm(SvmParams::default()),
            ModelFamily::Gnb => ModelSpec::Gnb,
            ModelFamily::Knn => ModelSpec::Knn { k: DEFAULT_K },
            ModelFamily::Forest => ModelSpec::Forest(ForestConfig {
                seed,
                ..ForestConfig::default()
            }),
        }
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            ModelSpec::Logreg(_) => ModelFamily::Logreg,
            ModelSpec::Svm(_) => ModelFamily::Svm,
            ModelSpec::Gnb => ModelFamily::Gnb,
            ModelSpec::Knn { .. } => ModelFamily::Knn,
            ModelSpec::Forest(_) => ModelFamily::Forest,
        }
    }

    pub fn fit(&self, x: ArrayView2<f64>, labels: &[u8]) -> Result<TrainedModel> {
        match self {
            ModelSpec::Logreg(config) => {
                let fit = fit_logreg(x, labels, config)?;
                Ok(TrainedModel::Logreg(fit.coefficients))
            }
            ModelSpec::Svm(params) => {
                let config = params.resolve(x.ncols());
                let dual = fit_svm(x, labels, &config)?;
                let decisions = dual.decision_batch(x);
                let platt = fit_platt(&decisions, labels)?;
                Ok(TrainedModel::Svm(SvmClassifier { dual, platt }))
            }
            ModelSpec::Gnb => fit_gnb(x, labels).map(TrainedModel::Gnb),
            ModelSpec::Knn { k } => fit_knn(x, labels, *k).map(TrainedModel::Knn),
            ModelSpec::Forest(config) => fit_forest(x, labels, config).map(TrainedModel::Forest),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Logreg(LinearCoefficients),
    Svm(SvmClassifier),
    Gnb(GaussianNbModel),
    Knn(KnnModel),
    Forest(ForestModel),
}

impl TrainedModel {
    pub fn family(&self) -> ModelFamily {
        match self {
            TrainedModel::Logreg(_) => ModelFamily::Logreg,
            TrainedModel::Svm(_) => ModelFamily::Svm,
            TrainedModel::Gnb(_) => ModelFamily::Gnb,
            TrainedModel::Knn(_) => ModelFamily::Knn,
            TrainedModel::Forest(_) => ModelFamily::Forest,
        }
    }

    pub fn as_classifier(&self) -> &dyn Classifier {
        match self {
            TrainedModel::Logreg(m) => m,
            TrainedModel::Svm(m) => m,
            TrainedModel::Gnb(m) => m,
            TrainedModel::Knn(m) => m,
            TrainedModel::Forest(m) => m,
        }
    }
}

impl Classifier for TrainedModel {
    fn predict_proba(&self, x: ArrayView1<f64>) -> [f64; 2] {
        self.as_classifier().predict_proba(x)
    }

    fn predict(&self, x: ArrayView1<f64>) -> u8 {
        self.as_classifier().predict(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn family_round_trip() {
        for f in ModelFamily::ALL {
            assert_eq!(f.as_str().parse::<ModelFamily>().unwrap(), f);
        }
        assert!("tree".parse::<ModelFamily>().is_err());
    }

    #[test]
    fn default_specs_match_study_settings() {
        match ModelSpec::default_for(ModelFamily::Logreg, 0) {
            ModelSpec::Logreg(c) => assert_eq!(c.c, 1.0),
            other => panic!("{other:?}"),
        }
        match ModelSpec::default_for(ModelFamily::Svm, 0) {
            ModelSpec::Svm(p) => {
                assert_eq!(p.c, 9.0);
                assert_eq!(p.kernel, KernelKind::Linear);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(ModelSpec::default_for(ModelFamily::Knn, 0), ModelSpec::Knn { k: 8 });
        match ModelSpec::default_for(ModelFamily::Forest, 5) {
            ModelSpec::Forest(c) => assert_eq!((c.n_estimators, c.seed), (200, 5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gamma_defaults_to_inverse_feature_count() {
        let p = SvmParams {
            kernel: KernelKind::Rbf,
            ..SvmParams::default()
        };
        assert_eq!(p.resolve(4).kernel, KernelSpec::Rbf { gamma: 0.25 });
    }

    #[test]
    fn every_family_fits_and_sums_to_one() {
        let x = array![
            [0.0, 1.0],
            [0.2, 0.8],
            [0.1, 1.2],
            [1.0, 0.0],
            [0.9, -0.2],
            [1.2, 0.1],
            [0.5, 0.5],
            [0.45, 0.6],
            [0.6, 0.4]
        ];
        let labels = [0, 0, 0, 1, 1, 1, 0, 1, 1];
        for family in ModelFamily::ALL {
            let spec = match family {
                ModelFamily::Knn => ModelSpec::Knn { k: 3 },
                f => ModelSpec::default_for(f, 1),
            };
            let model = spec.fit(x.view(), &labels).unwrap();
            assert_eq!(model.family(), family);
            for p in model.predict_proba_batch(x.view()) {
                assert!((p[0] + p[1] - 1.0).abs() <= 1e-12, "{family}: {p:?}");
                assert!((0.0..=1.0).contains(&p[1]));
            }
        }
    }
}
