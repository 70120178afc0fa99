//! On-disk artifact layout, hashing and manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use riskml_core::evaluation::EvaluationReport;
use riskml_core::features::{apply_scaler, DesignMatrix, ScalerParams, SplitIndices};
use riskml_core::forest::ForestModel;
use riskml_core::knn::fit_knn;
use riskml_core::linear::LinearCoefficients;
use riskml_core::model::{ModelFamily, ModelSpec, SvmClassifier, TrainedModel};
use riskml_core::naive_bayes::GaussianNbModel;
use riskml_core::tuning::TuneResult;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CLEAN: &str = "clean.json";
pub const CLEANSE_LOG: &str = "cleanse_log.json";
pub const DESIGN: &str = "design.csv";
pub const SPLIT: &str = "split.json";
pub const SCALER: &str = "scaler.json";
pub const RUN_CONFIG: &str = "run_config.json";
pub const PREPARE_MANIFEST: &str = "prepare_manifest.json";
pub const TRAIN_MANIFEST: &str = "train_manifest.json";
pub const ROC_CSV: &str = "roc.csv";
pub const ROC_SVG: &str = "roc.svg";
pub const IMPORTANCE_CSV: &str = "importance.csv";
pub const SUMMARY: &str = "summary.txt";

/// Paths of every artifact under one output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn model(&self, family: ModelFamily) -> PathBuf {
        self.root.join("models").join(format!("{family}.json"))
    }

    pub fn tuning(&self, family: ModelFamily) -> PathBuf {
        self.root.join("tuning").join(format!("{family}.json"))
    }

    pub fn report(&self, family: ModelFamily) -> PathBuf {
        self.root.join("reports").join(format!("{family}.json"))
    }

    pub fn roc(&self, family: ModelFamily) -> PathBuf {
        self.root.join("reports").join(format!("roc_{family}.csv"))
    }

    pub fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.root)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` (creating parent directories) and returns their hash.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<String> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_error(path, e))?;
    Ok(sha256_hex(bytes))
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(riskml_core::Error::from)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<String> {
    write_bytes(path, &to_json_bytes(value)?)
}

/// Reads an artifact; a missing file names the `stage` that writes it.
pub fn read_bytes(path: &Path, stage: &'static str) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| {
        if e.kind() == ErrorKind::NotFound {
            CliError::MissingArtifact {
                path: path.display().to_string(),
                stage,
            }
        } else {
            io_error(path, e)
        }
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path, stage: &'static str) -> CliResult<(T, String)> {
    let bytes = read_bytes(path, stage)?;
    let value = serde_json::from_slice(&bytes).map_err(|e| CliError::StaleArtifact {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok((value, sha256_hex(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceInfo {
    pub uri: String,
    pub sha256: String,
    pub raw_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareManifest {
    pub tool_version: String,
    pub seed: u64,
    pub train_fraction: f64,
    pub source: SourceInfo,
    pub clean_rows: usize,
    pub dropped_rows: usize,
    /// `[non-injury, injury]` over all clean rows.
    pub class_counts: [usize; 2],
    pub design_columns: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Artifact file name to SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

/// A trained model on disk. kNN keeps no copy of its reference rows; it
/// names the design matrix and split it was fit on by hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelArtifact {
    Logreg {
        model: LinearCoefficients,
    },
    Svm {
        model: SvmClassifier,
    },
    Gnb {
        model: GaussianNbModel,
    },
    Knn {
        k: usize,
        design_sha256: String,
        scaler_sha256: String,
        split_sha256: String,
    },
    Forest {
        model: ForestModel,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainStatus {
    Trained,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub family: ModelFamily,
    pub status: TrainStatus,
    pub spec: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuneResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub artifact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainManifest {
    pub tool_version: String,
    pub seed: u64,
    pub prepare_manifest_sha256: String,
    pub models: Vec<ModelRecord>,
}

/// Everything needed to replay one model's evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportManifest {
    pub tool_version: String,
    pub seed: u64,
    pub train_fraction: f64,
    pub params: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuneResult>,
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub family: ModelFamily,
    pub model: String,
    pub test_rows: usize,
    pub report: EvaluationReport,
    pub manifest: ReportManifest,
}

/// The outputs of `prepare`, loaded and checked against their manifest.
pub struct Prepared {
    pub manifest: PrepareManifest,
    pub manifest_sha256: String,
    pub config: RunConfig,
    pub split: SplitIndices,
    pub scaled: DesignMatrix,
}

impl Prepared {
    pub fn load(layout: &Layout) -> CliResult<Prepared> {
        let (manifest, manifest_sha256): (PrepareManifest, _) = read_json(&layout.path(PREPARE_MANIFEST), "prepare")?;
        let check = |name: &str, hash: &str| -> CliResult<()> {
            match manifest.artifacts.get(name) {
                Some(expected) if expected == hash => Ok(()),
                _ => Err(CliError::StaleArtifact {
                    path: layout.path(name).display().to_string(),
                    message: "hash differs from the prepare manifest; rerun `riskml prepare`".into(),
                }),
            }
        };
        let (config, config_hash): (RunConfig, _) = read_json(&layout.path(RUN_CONFIG), "prepare")?;
        check(RUN_CONFIG, &config_hash)?;
        let (split, split_hash): (SplitIndices, _) = read_json(&layout.path(SPLIT), "prepare")?;
        check(SPLIT, &split_hash)?;
        let (scaler, scaler_hash): (ScalerParams, _) = read_json(&layout.path(SCALER), "prepare")?;
        check(SCALER, &scaler_hash)?;
        let design_bytes = read_bytes(&layout.path(DESIGN), "prepare")?;
        check(DESIGN, &sha256_hex(&design_bytes))?;
        let design = DesignMatrix::read_csv(design_bytes.as_slice())?;
        let scaled = apply_scaler(&design, &scaler)?;
        Ok(Prepared {
            manifest,
            manifest_sha256,
            config,
            split,
            scaled,
        })
    }

    pub fn artifact_hash(&self, name: &str) -> String {
        self.manifest.artifacts.get(name).cloned().unwrap_or_default()
    }

    pub fn train(&self) -> DesignMatrix {
        self.scaled.select_rows(&self.split.train)
    }

    pub fn test(&self) -> DesignMatrix {
        self.scaled.select_rows(&self.split.test)
    }
}

impl ModelArtifact {
    pub fn from_trained(model: TrainedModel, prepared: &Prepared) -> ModelArtifact {
        match model {
            TrainedModel::Logreg(model) => ModelArtifact::Logreg { model },
            TrainedModel::Svm(model) => ModelArtifact::Svm { model },
            TrainedModel::Gnb(model) => ModelArtifact::Gnb { model },
            TrainedModel::Knn(model) => ModelArtifact::Knn {
                k: model.k,
                design_sha256: prepared.artifact_hash(DESIGN),
                scaler_sha256: prepared.artifact_hash(SCALER),
                split_sha256: prepared.artifact_hash(SPLIT),
            },
            TrainedModel::Forest(model) => ModelArtifact::Forest { model },
        }
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            ModelArtifact::Logreg { .. } => ModelFamily::Logreg,
            ModelArtifact::Svm { .. } => ModelFamily::Svm,
            ModelArtifact::Gnb { .. } => ModelFamily::Gnb,
            ModelArtifact::Knn { .. } => ModelFamily::Knn,
            ModelArtifact::Forest { .. } => ModelFamily::Forest,
        }
    }

    /// Rebuilds the in-memory model; kNN reloads its training rows.
    pub fn into_trained(self, prepared: &Prepared, path: &Path) -> CliResult<TrainedModel> {
        Ok(match self {
            ModelArtifact::Logreg { model } => TrainedModel::Logreg(model),
            ModelArtifact::Svm { model } => TrainedModel::Svm(model),
            ModelArtifact::Gnb { model } => TrainedModel::Gnb(model),
            ModelArtifact::Forest { model } => TrainedModel::Forest(model),
            ModelArtifact::Knn {
                k,
                design_sha256,
                scaler_sha256,
                split_sha256,
            } => {
                let expected = [(DESIGN, design_sha256), (SCALER, scaler_sha256), (SPLIT, split_sha256)];
                for (name, hash) in expected {
                    if prepared.artifact_hash(name) != hash {
                        return Err(CliError::StaleArtifact {
                            path: path.display().to_string(),
                            message: format!("fit on a different {name}; rerun `riskml train`"),
                        });
                    }
                }
                let train = prepared.train();
                TrainedModel::Knn(fit_knn(train.view(), &train.labels, k)?)
            }
        })
    }
}
