//! The prepare, train, tune and evaluate stages.

use std::collections::BTreeMap;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use riskml_core::dataset::{cleanse, parse_dataset, LEAK_COLUMNS};
use riskml_core::evaluation::{auc_trapezoid, classification_report, roc_curve, roc_svg, RocCurve};
use riskml_core::features::{encode, fit_scaler, split};
use riskml_core::model::{Classifier, ModelFamily, ModelSpec, TrainedModel};
use riskml_core::tuning::{grid_search, ParamGrid, TuneResult};

use crate::artifacts::*;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareSummary {
    pub manifest: PrepareManifest,
    pub dropped: Vec<usize>,
}

/// Ingests, cleanses, encodes and splits the dataset named by `config`.
pub fn prepare(config: &RunConfig) -> CliResult<PrepareSummary> {
    config.validate()?;
    let data = config
        .data
        .as_deref()
        .ok_or_else(|| CliError::Config("no dataset given; pass --data or set `data`".into()))?;
    let bytes =
        std::fs::read(data).map_err(|e| CliError::Config(format!("cannot read dataset {}: {e}", data.display())))?;
    let schema = config.schema.schema();
    let uri = data.display().to_string();
    let raw = parse_dataset(bytes.as_slice(), &schema, &uri)?;
    let clean = cleanse(&raw, &schema)?;
    let design = encode(&clean)?;
    for leak in LEAK_COLUMNS {
        let prefix = format!("{leak}=");
        if design.column_names.iter().any(|n| n == leak || n.starts_with(&prefix)) {
            return Err(CliError::Config(format!(
                "leak column {leak} reached the design matrix"
            )));
        }
    }
    let indices = split(design.n_rows(), config.train_fraction, config.seed)?;
    let scaler = fit_scaler(&design, &indices.train)?;

    let layout = Layout::new(&config.out);
    let mut artifacts = BTreeMap::new();
    artifacts.insert(CLEAN.to_string(), write_json(&layout.path(CLEAN), &clean)?);
    artifacts.insert(
        CLEANSE_LOG.to_string(),
        write_json(&layout.path(CLEANSE_LOG), &clean.dropped)?,
    );
    let mut csv = Vec::new();
    design.write_csv(&mut csv)?;
    artifacts.insert(DESIGN.to_string(), write_bytes(&layout.path(DESIGN), &csv)?);
    artifacts.insert(SPLIT.to_string(), write_json(&layout.path(SPLIT), &indices)?);
    artifacts.insert(SCALER.to_string(), write_json(&layout.path(SCALER), &scaler)?);
    artifacts.insert(RUN_CONFIG.to_string(), write_json(&layout.path(RUN_CONFIG), config)?);

    let injuries = design.labels.iter().filter(|&&l| l == 1).count();
    let manifest = PrepareManifest {
        tool_version: TOOL_VERSION.to_string(),
        seed: config.seed,
        train_fraction: config.train_fraction,
        source: SourceInfo {
            uri,
            sha256: sha256_hex(&bytes),
            raw_rows: raw.len(),
        },
        clean_rows: clean.n_rows(),
        dropped_rows: clean.dropped.len(),
        class_counts: [design.n_rows() - injuries, injuries],
        design_columns: design.n_cols(),
        train_rows: indices.train.len(),
        test_rows: indices.test.len(),
        artifacts,
    };
    write_json(&layout.path(PREPARE_MANIFEST), &manifest)?;
    info!(
        "prepared {} rows ({} dropped), {} features",
        manifest.clean_rows, manifest.dropped_rows, manifest.design_columns
    );
    Ok(PrepareSummary {
        manifest,
        dropped: clean.dropped.dropped_row_indices.clone(),
    })
}

fn tune_one(prepared: &Prepared, grid: &ParamGrid, trial_cap: usize) -> CliResult<TuneResult> {
    let result = grid_search(
        &prepared.scaled,
        &prepared.split.train,
        grid,
        prepared.manifest.seed,
        trial_cap,
    )?;
    for t in result.trials.iter().filter(|t| t.failed) {
        warn!(
            "{} trial {:?} failed: {}",
            grid.family,
            t.params,
            t.error.as_deref().unwrap_or("")
        );
    }
    Ok(result)
}

/// Fits every requested family on the training split. A family that fails
/// is recorded in the manifest and the others still train.
pub fn train(config: &RunConfig, out: &Path) -> CliResult<TrainManifest> {
    config.validate()?;
    let layout = Layout::new(out);
    let prepared = Prepared::load(&layout)?;
    check_compatible(config, &prepared)?;
    let train = prepared.train();

    let records: Vec<ModelRecord> = config
        .models
        .par_iter()
        .map(|&family| {
            let tuned = config
                .grid_for(family)
                .map(|grid| tune_one(&prepared, grid, config.trial_cap))
                .transpose();
            let outcome = tuned.and_then(|tuning| {
                let spec = match &tuning {
                    Some(t) => t.best_spec(prepared.manifest.seed)?,
                    None => config.spec_for(family),
                };
                Ok((spec, tuning))
            });
            let (spec, tuning) = match outcome {
                Ok(v) => v,
                Err(e) => return failed(family, None, None, e),
            };
            match spec.fit(train.view(), &train.labels) {
                Ok(model) => {
                    let path = layout.model(family);
                    let artifact = ModelArtifact::from_trained(model, &prepared);
                    match write_json(&path, &artifact) {
                        Ok(sha) => ModelRecord {
                            family,
                            status: TrainStatus::Trained,
                            spec: Some(spec),
                            tuning,
                            artifact: Some(layout.relative(&path)),
                            sha256: Some(sha),
                            error: None,
                        },
                        Err(e) => failed(family, Some(spec), tuning, e),
                    }
                }
                Err(e) => failed(family, Some(spec), tuning, e.into()),
            }
        })
        .collect();

    let manifest = TrainManifest {
        tool_version: TOOL_VERSION.to_string(),
        seed: prepared.manifest.seed,
        prepare_manifest_sha256: prepared.manifest_sha256.clone(),
        models: records,
    };
    write_json(&layout.path(TRAIN_MANIFEST), &manifest)?;
    if manifest.models.iter().all(|m| m.status == TrainStatus::Failed) {
        return Err(CliError::AllModelsFailed);
    }
    Ok(manifest)
}

fn failed(family: ModelFamily, spec: Option<ModelSpec>, tuning: Option<TuneResult>, e: CliError) -> ModelRecord {
    warn!("{family} failed to train: {e}");
    ModelRecord {
        family,
        status: TrainStatus::Failed,
        spec,
        tuning,
        artifact: None,
        sha256: None,
        error: Some(e.to_string()),
    }
}

/// Settings that shaped the prepared artifacts must not change afterwards.
fn check_compatible(config: &RunConfig, prepared: &Prepared) -> CliResult<()> {
    if config.seed != prepared.manifest.seed || config.train_fraction != prepared.manifest.train_fraction {
        return Err(CliError::Config(format!(
            "config seed/train_fraction ({}, {}) differ from the prepared artifacts ({}, {}); rerun `riskml prepare`",
            config.seed, config.train_fraction, prepared.manifest.seed, prepared.manifest.train_fraction
        )));
    }
    Ok(())
}

/// Runs each grid on the training split and writes the trial logs.
pub fn tune(config: &RunConfig, out: &Path, grids: &[ParamGrid]) -> CliResult<Vec<TuneResult>> {
    let layout = Layout::new(out);
    let prepared = Prepared::load(&layout)?;
    check_compatible(config, &prepared)?;
    grids
        .iter()
        .map(|grid| {
            let result = tune_one(&prepared, grid, config.trial_cap)?;
            write_json(&layout.tuning(grid.family), &result)?;
            Ok(result)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateSummary {
    pub reports: Vec<ModelReport>,
    pub table: String,
}

/// Scores every trained model on the test split and writes the reports,
/// ROC curves and the forest's importance ranking.
pub fn evaluate(out: &Path, roc_svg_plot: bool) -> CliResult<EvaluateSummary> {
    let layout = Layout::new(out);
    let prepared = Prepared::load(&layout)?;
    let (manifest, _): (TrainManifest, _) = read_json(&layout.path(TRAIN_MANIFEST), "train")?;
    if manifest.prepare_manifest_sha256 != prepared.manifest_sha256 {
        return Err(CliError::StaleArtifact {
            path: layout.path(TRAIN_MANIFEST).display().to_string(),
            message: "models were trained on other prepared artifacts; rerun `riskml train`".into(),
        });
    }
    let test = prepared.test();
    let mut reports = Vec::new();
    let mut curves: Vec<(String, RocCurve)> = Vec::new();
    let mut table = String::new();

    for record in manifest.models.iter().filter(|m| m.status == TrainStatus::Trained) {
        let path = layout.model(record.family);
        let (artifact, model_sha): (ModelArtifact, _) = read_json(&path, "train")?;
        if Some(&model_sha) != record.sha256.as_ref() || artifact.family() != record.family {
            return Err(CliError::StaleArtifact {
                path: path.display().to_string(),
                message: "model file differs from the train manifest; rerun `riskml train`".into(),
            });
        }
        let model = artifact.into_trained(&prepared, &path)?;
        let probs = model.predict_proba_batch(test.view());
        let scores: Vec<f64> = probs.iter().map(|p| p[1]).collect();
        let preds = model.predict_batch(test.view());
        let mut report = classification_report(&preds, &test.labels)?;
        let curve = roc_curve(&scores, &test.labels)?;
        report.auc = Some(auc_trapezoid(&curve));
        write_bytes(&layout.roc(record.family), curve.to_csv().as_bytes())?;

        if let TrainedModel::Forest(forest) = &model {
            let ranking = forest.feature_importances(&prepared.scaled.column_names)?;
            write_bytes(&layout.path(IMPORTANCE_CSV), ranking.to_csv().as_bytes())?;
        }

        let mut hashes = BTreeMap::new();
        for name in [DESIGN, SPLIT, SCALER, RUN_CONFIG] {
            hashes.insert(name.to_string(), prepared.artifact_hash(name));
        }
        hashes.insert(PREPARE_MANIFEST.to_string(), prepared.manifest_sha256.clone());
        hashes.insert(layout.relative(&path), model_sha);
        let spec = record.spec.clone().ok_or_else(|| CliError::StaleArtifact {
            path: layout.path(TRAIN_MANIFEST).display().to_string(),
            message: format!("{} has no recorded parameters", record.family),
        })?;
        let model_report = ModelReport {
            family: record.family,
            model: record.family.display_name().to_string(),
            test_rows: test.n_rows(),
            report,
            manifest: ReportManifest {
                tool_version: TOOL_VERSION.to_string(),
                seed: prepared.manifest.seed,
                train_fraction: prepared.manifest.train_fraction,
                params: spec,
                tuning: record.tuning.clone(),
                artifacts: hashes,
            },
        };
        write_json(&layout.report(record.family), &model_report)?;
        table.push_str(&format!("{}\n{}\n", model_report.model, model_report.report.table()));
        curves.push((model_report.model.clone(), curve));
        reports.push(model_report);
    }

    let mut combined = String::from("model,threshold,fpr,tpr\n");
    for (name, curve) in &curves {
        for p in &curve.points {
            combined.push_str(&format!("{name},{},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
    }
    write_bytes(&layout.path(ROC_CSV), combined.as_bytes())?;
    if roc_svg_plot {
        write_bytes(&layout.path(ROC_SVG), roc_svg(&curves).as_bytes())?;
    }
    write_bytes(&layout.path(SUMMARY), table.as_bytes())?;
    Ok(EvaluateSummary { reports, table })
}
