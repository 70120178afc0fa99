//! Grid search over explicit hyperparameter axes, scored by validation AUC.

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::roc_auc;
use crate::features::{split_stream, DesignMatrix};
use crate::model::{Classifier, KernelKind, ModelFamily, ModelSpec};

/// Largest number of grid points expanded unless configured otherwise.
pub const DEFAULT_TRIAL_CAP: usize = 64;

/// Fraction of the training rows used for fitting; the rest validate.
pub const FIT_FRACTION: f64 = 0.75;

/// ChaCha stream used for the fit/validation split.
const TUNE_STREAM: u64 = 0x7475_6e65;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl ParamValue {
    fn number(&self, name: &str) -> Result<f64> {
        match self {
            ParamValue::Number(v) => Ok(*v),
            ParamValue::Text(t) => t
                .parse()
                .map_err(|_| Error::Validation(format!("{name} expects a number, got {t:?}"))),
        }
    }

    fn count(&self, name: &str) -> Result<usize> {
        let v = self.number(name)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::Validation(format!("{name} expects a whole number, got {v}")));
        }
        Ok(v as usize)
    }

    fn text(&self) -> String {
        match self {
            ParamValue::Number(v) => v.to_string(),
            ParamValue::Text(t) => t.clone(),
        }
    }
}

pub type ParamSet = IndexMap<String, ParamValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub family: ModelFamily,
    /// Axis name to candidate values; expanded as a Cartesian product in
    /// declaration order with the last axis varying fastest.
    #[serde(default)]
    pub axes: IndexMap<String, Vec<ParamValue>>,
}

impl ParamGrid {
    pub fn size(&self) -> usize {
        self.axes.values().map(Vec::len).product()
    }

    pub fn expand(&self, cap: usize) -> Result<Vec<ParamSet>> {
        if let Some((name, _)) = self.axes.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::Validation(format!("grid axis {name} has no values")));
        }
        let size = self.size();
        if size > cap {
            return Err(Error::Validation(format!(
                "grid has {size} points, above the trial cap of {cap}"
            )));
        }
        let mut points = vec![ParamSet::new()];
        for (name, values) in &self.axes {
            points = points
                .into_iter()
                .flat_map(|base| {
                    values.iter().map(move |v| {
                        let mut next = base.clone();
                        next.insert(name.clone(), v.clone());
                        next
                    })
                })
                .collect();
        }
        Ok(points)
    }
}

/// Builds a model spec from a family's defaults with `params` applied.
pub fn spec_from_params(family: ModelFamily, params: &ParamSet, seed: u64) -> Result<ModelSpec> {
    let mut spec = ModelSpec::default_for(family, seed);
    for (name, value) in params {
        let unknown = || Error::Validation(format!("{family} has no hyperparameter {name:?}"));
        match &mut spec {
            ModelSpec::Logreg(c) => match name.as_str() {
                "c" | "C" => c.c = value.number(name)?,
                "tol" => c.tol = value.number(name)?,
                "max_iter" => c.max_iter = value.count(name)?,
                _ => return Err(unknown()),
            },
            ModelSpec::Svm(p) => match name.as_str() {
                "c" | "C" => p.c = value.number(name)?,
                "kernel" => p.kernel = value.text().parse::<KernelKind>()?,
                "gamma" => p.gamma = Some(value.number(name)?),
                "degree" => p.degree = value.count(name)? as u32,
                "coef0" => p.coef0 = value.number(name)?,
                "tol" => p.tol = value.number(name)?,
                _ => return Err(unknown()),
            },
            ModelSpec::Gnb => return Err(unknown()),
            ModelSpec::Knn { k } => match name.as_str() {
                "k" => *k = value.count(name)?,
                _ => return Err(unknown()),
            },
            ModelSpec::Forest(f) => match name.as_str() {
                "n_estimators" => f.n_estimators = value.count(name)?,
                "max_features" => f.max_features = Some(value.count(name)?),
                _ => return Err(unknown()),
            },
        }
    }
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub params: ParamSet,
    pub auc: f64,
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub family: ModelFamily,
    pub best_params: ParamSet,
    pub best_auc: f64,
    pub trials: Vec<Trial>,
}

impl TuneResult {
    pub fn best_spec(&self, seed: u64) -> Result<ModelSpec> {
        spec_from_params(self.family, &self.best_params, seed)
    }
}

/// Splits `rows` 75/25 into fit and validation parts.
pub fn validation_split(rows: &[usize], seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let inner = split_stream(rows.len(), FIT_FRACTION, seed, TUNE_STREAM)?;
    Ok((
        inner.train.iter().map(|&i| rows[i]).collect(),
        inner.test.iter().map(|&i| rows[i]).collect(),
    ))
}

/// Fits every grid point on the fit part of `rows` and scores injury-class
/// AUC on the validation part. A failing trial scores 0 and is flagged. Ties
/// keep the earliest grid point.
pub fn grid_search(
    matrix: &DesignMatrix,
    rows: &[usize],
    grid: &ParamGrid,
    seed: u64,
    trial_cap: usize,
) -> Result<TuneResult> {
    let points = grid.expand(trial_cap)?;
    let specs = points
        .iter()
        .map(|p| spec_from_params(grid.family, p, seed))
        .collect::<Result<Vec<_>>>()?;
    let (fit_rows, val_rows) = validation_split(rows, seed)?;
    let fit = matrix.select_rows(&fit_rows);
    let val = matrix.select_rows(&val_rows);
    let positives = val.labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == val.labels.len() {
        return Err(Error::Validation(
            "validation split contains a single class; AUC is undefined".into(),
        ));
    }

    let trials: Vec<Trial> = points
        .into_par_iter()
        .zip(specs.into_par_iter())
        .map(|(params, spec)| {
            let outcome = spec.fit(fit.view(), &fit.labels).and_then(|model| {
                let scores: Vec<f64> = model
                    .predict_proba_batch(val.view())
                    .into_iter()
                    .map(|p| p[1])
                    .collect();
                roc_auc(&scores, &val.labels)
            });
            match outcome {
                Ok(auc) => Trial {
                    params,
                    auc,
                    failed: false,
                    error: None,
                },
                Err(e) => Trial {
                    params,
                    auc: 0.0,
                    failed: true,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let best = trials
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |acc, (i, t)| match acc {
            Some((_, a)) if t.auc <= a => acc,
            _ => Some((i, t.auc)),
        })
        .map(|(i, _)| i)
        .expect("grid has at least one point");
    Ok(TuneResult {
        family: grid.family,
        best_params: trials[best].params.clone(),
        best_auc: trials[best].auc,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(json: &str) -> ParamGrid {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn expansion_order_and_size() {
        let g = grid(r#"{"family": "svm", "axes": {"kernel": ["linear", "rbf"], "c": [1, 9, 100]}}"#);
        let points = g.expand(DEFAULT_TRIAL_CAP).unwrap();
        assert_eq!(points.len(), 6);
        assert_eq!(points[0]["kernel"], ParamValue::Text("linear".into()));
        assert_eq!(points[1]["c"], ParamValue::Number(9.0));
        assert_eq!(points[3]["kernel"], ParamValue::Text("rbf".into()));
    }

    #[test]
    fn cap_and_empty_axes() {
        let g = grid(r#"{"family": "knn", "axes": {"k": [1, 2, 3, 4, 5]}}"#);
        assert!(g.expand(4).is_err());
        let empty = grid(r#"{"family": "knn", "axes": {"k": []}}"#);
        assert!(empty.expand(64).is_err());
        let none = grid(r#"{"family": "gnb"}"#);
        assert_eq!(none.expand(64).unwrap().len(), 1);
    }

    #[test]
    fn params_build_specs() {
        let mut p = ParamSet::new();
        p.insert("kernel".into(), ParamValue::Text("rbf".into()));
        p.insert("gamma".into(), ParamValue::Number(0.5));
        p.insert("C".into(), ParamValue::Number(2.0));
        match spec_from_params(ModelFamily::Svm, &p, 0).unwrap() {
            ModelSpec::Svm(s) => {
                assert_eq!(s.kernel, KernelKind::Rbf);
                assert_eq!(s.gamma, Some(0.5));
                assert_eq!(s.c, 2.0);
            }
            other => panic!("{other:?}"),
        }
        let mut bad = ParamSet::new();
        bad.insert("depth".into(), ParamValue::Number(3.0));
        assert!(spec_from_params(ModelFamily::Forest, &bad, 0).is_err());
        let mut frac = ParamSet::new();
        frac.insert("k".into(), ParamValue::Number(2.5));
        assert!(spec_from_params(ModelFamily::Knn, &frac, 0).is_err());
    }

    #[test]
    fn toml_grid_keeps_axis_order() {
        let g: ParamGrid =
            toml::from_str("family = \"forest\"\n[axes]\nn_estimators = [10, 50]\nmax_features = [1, 2]\n").unwrap();
        let names: Vec<&String> = g.axes.keys().collect();
        assert_eq!(names, ["n_estimators", "max_features"]);
    }
}
