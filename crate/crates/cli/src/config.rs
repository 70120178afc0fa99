//! Run configuration, loaded from TOML or JSON.

use std::path::{Path, PathBuf};

use riskml_core::dataset::{Schema, DEFAULT_DATETIME_COLUMN};
use riskml_core::forest::{ForestConfig, DEFAULT_TREES};
use riskml_core::linear::LogisticConfig;
use riskml_core::model::{ModelFamily, ModelSpec, SvmParams, DEFAULT_K};
use riskml_core::tuning::{ParamGrid, DEFAULT_TRIAL_CAP};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_OUT_DIR: &str = "riskml-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaOverrides {
    pub datetime_column: String,
    pub delimiter: char,
    /// chrono formats tried in order for the date part.
    pub date_formats: Vec<String>,
}

impl Default for SchemaOverrides {
    fn default() -> Self {
        let schema = Schema::default();
        SchemaOverrides {
            datetime_column: DEFAULT_DATETIME_COLUMN.to_string(),
            delimiter: schema.delimiter,
            date_formats: schema.date_formats,
        }
    }
}

impl SchemaOverrides {
    pub fn schema(&self) -> Schema {
        let mut schema = Schema::accidents_2013(&self.datetime_column);
        schema.delimiter = self.delimiter;
        schema.date_formats = self.date_formats.clone();
        schema
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: DEFAULT_K }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_estimators: DEFAULT_TREES,
            max_features: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub logreg: LogisticConfig,
    pub svm: SvmParams,
    pub knn: KnnParams,
    pub forest: ForestParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    pub roc_svg: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { roc_svg: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub schema: SchemaOverrides,
    pub seed: u64,
    pub train_fraction: f64,
    pub models: Vec<ModelFamily>,
    pub params: ModelParams,
    /// Families listed here are tuned by grid search instead of using
    /// `params`.
    pub grids: Vec<ParamGrid>,
    pub trial_cap: usize,
    /// Where artifacts go; not part of the saved configuration so runs into
    /// different directories stay byte-identical.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub report: ReportOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            schema: SchemaOverrides::default(),
            seed: 0,
            train_fraction: 0.6,
            models: ModelFamily::ALL.to_vec(),
            params: ModelParams::default(),
            grids: Vec::new(),
            trial_cap: DEFAULT_TRIAL_CAP,
            out: PathBuf::from(DEFAULT_OUT_DIR),
            report: ReportOptions::default(),
        }
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Parses TOML, or JSON when the file name ends in `.json`.
pub fn load_file<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    if is_json(path) {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// A grid file holds either one grid or a `grids` list.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GridFile {
    Many { grids: Vec<ParamGrid> },
    One(ParamGrid),
}

pub fn load_grids(path: &Path) -> CliResult<Vec<ParamGrid>> {
    Ok(match load_file::<GridFile>(path)? {
        GridFile::Many { grids } => grids,
        GridFile::One(grid) => vec![grid],
    })
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(CliError::Config(format!(
                "train_fraction {} must lie strictly between 0 and 1",
                self.train_fraction
            )));
        }
        if self.models.is_empty() {
            return Err(CliError::Config("no models requested".into()));
        }
        for (i, f) in self.models.iter().enumerate() {
            if self.models[..i].contains(f) {
                return Err(CliError::Config(format!("model {f} listed twice")));
            }
        }
        for (i, g) in self.grids.iter().enumerate() {
            if self.grids[..i].iter().any(|h| h.family == g.family) {
                return Err(CliError::Config(format!("two grids for {}", g.family)));
            }
        }
        Ok(())
    }

    pub fn grid_for(&self, family: ModelFamily) -> Option<&ParamGrid> {
        self.grids.iter().find(|g| g.family == family)
    }

    /// Hyperparameters for `family` from `params`, seeded from the run seed.
    pub fn spec_for(&self, family: ModelFamily) -> ModelSpec {
        let p = &self.params;
        match family {
            ModelFamily::Logreg => ModelSpec::Logreg(p.logreg),
            ModelFamily::Svm => ModelSpec::Svm(p.svm),
            ModelFamily::Gnb => ModelSpec::Gnb,
            ModelFamily::Knn => ModelSpec::Knn { k: p.knn.k },
            ModelFamily::Forest => ModelSpec::Forest(ForestConfig {
                n_estimators: p.forest.n_estimators,
                max_features: p.forest.max_features,
                seed: self.seed,
                bootstrap: p.forest.bootstrap,
            }),
        }
    }
}

/// Parses a comma-separated model list such as `logreg,svm`.
pub fn parse_models(list: &str) -> CliResult<Vec<ModelFamily>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<ModelFamily>().map_err(CliError::from))
        .collect()
}
