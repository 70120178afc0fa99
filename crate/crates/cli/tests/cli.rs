//! End-to-end runs of the `riskml` command through its library entry point.

use std::fs;
use std::path::{Path, PathBuf};

use riskml::artifacts::{PrepareManifest, TrainManifest, TrainStatus};
use riskml_core::dataset::{ColumnKind, Schema};
use riskml_core::evaluation::EvaluationReport;
use riskml_core::model::ModelFamily;
use riskml_core::tuning::ParamValue;
use tempfile::TempDir;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn riskml(args: &[&str]) -> Output {
    let mut argv = vec!["riskml"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = riskml::run(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn ok(args: &[&str]) -> Output {
    let o = riskml(args);
    assert_eq!(o.code, 0, "riskml {args:?} failed: {}", o.stderr);
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, n: usize, signal: f64, seed: u64) -> PathBuf {
    let path = dir.join(format!("synth_{n}_{seed}.csv"));
    ok(&[
        "synth",
        "--n",
        &n.to_string(),
        "--signal",
        &signal.to_string(),
        "--seed",
        &seed.to_string(),
        "--output",
        s(&path),
    ]);
    path
}

/// Writes a config with a smaller forest so debug builds stay quick.
fn quick_config(dir: &Path, data: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(
        &path,
        format!(
            "data = {:?}\nseed = 5\n{extra}[params.forest]\nn_estimators = 25\n",
            s(data)
        ),
    )
    .unwrap();
    path
}

fn pipeline(config: &Path, out: &Path) {
    ok(&["prepare", "--config", s(config), "--out", s(out)]);
    ok(&["train", "--out", s(out)]);
    ok(&["evaluate", "--out", s(out)]);
}

fn read_report(out: &Path, family: &str) -> EvaluationReport {
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("reports").join(format!("{family}.json"))).unwrap()).unwrap();
    serde_json::from_value(v["report"].clone()).unwrap()
}

#[test]
fn same_seed_gives_byte_identical_outputs() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 400, 1.0, 2);
    let config = quick_config(dir.path(), &data, "");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    pipeline(&config, &a);
    pipeline(&config, &b);

    let mut compared = 0;
    for sub in ["", "models", "reports"] {
        for entry in fs::read_dir(a.join(sub)).unwrap() {
            let path = entry.unwrap().path();
            if path.is_file() {
                let twin = b.join(sub).join(path.file_name().unwrap());
                assert_eq!(fs::read(&path).unwrap(), fs::read(&twin).unwrap(), "{}", path.display());
                compared += 1;
            }
        }
    }
    assert!(compared >= 20, "only {compared} files compared");
    for family in ModelFamily::ALL {
        assert!(a.join("reports").join(format!("{family}.json")).is_file());
        assert!(a.join("reports").join(format!("roc_{family}.csv")).is_file());
    }
    for name in ["roc.csv", "roc.svg", "importance.csv", "summary.txt"] {
        assert!(a.join(name).is_file(), "{name}");
    }
}

#[test]
fn rerunning_prepare_keeps_the_split() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 200, 1.0, 4);
    let out = dir.path().join("out");
    ok(&["prepare", "--data", s(&data), "--seed", "11", "--out", s(&out)]);
    let first = fs::read(out.join("split.json")).unwrap();
    ok(&["prepare", "--data", s(&data), "--seed", "11", "--out", s(&out)]);
    assert_eq!(first, fs::read(out.join("split.json")).unwrap());
    ok(&["prepare", "--data", s(&data), "--seed", "12", "--out", s(&out)]);
    assert_ne!(first, fs::read(out.join("split.json")).unwrap());
}

#[test]
fn forest_file_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 300, 1.0, 6);
    let config = quick_config(dir.path(), &data, "models = [\"forest\"]\n");
    let mut hashes = Vec::new();
    for name in ["x", "y"] {
        let out = dir.path().join(name);
        ok(&["prepare", "--config", s(&config), "--out", s(&out)]);
        ok(&["train", "--out", s(&out)]);
        let m: TrainManifest = serde_json::from_slice(&fs::read(out.join("train_manifest.json")).unwrap()).unwrap();
        hashes.push(m.models[0].sha256.clone().unwrap());
    }
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn leak_columns_never_reach_the_design_matrix() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 300, 1.0, 8);
    let out = dir.path().join("out");
    ok(&["prepare", "--data", s(&data), "--out", s(&out)]);
    let design = fs::read_to_string(out.join("design.csv")).unwrap();
    let header: Vec<&str> = design.lines().next().unwrap().split(',').collect();
    for leak in ["FONTE", "UPS"] {
        assert!(
            !header.iter().any(|h| *h == leak || h.starts_with(&format!("{leak}="))),
            "{leak} in {header:?}"
        );
    }
    for name in ["ID", "BOLETIM", "LATITUDE", "REGIAO", "FERIDOS", "DATA_HORA"] {
        assert!(!header.iter().any(|h| h.split('=').next() == Some(name)), "{name}");
    }
    assert_eq!(header.last(), Some(&"TARGET"));
}

#[test]
fn malformed_date_row_is_logged() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 50, 1.0, 1);
    let text = fs::read_to_string(&data).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let schema = Schema::default();
    let date_col = schema
        .columns
        .iter()
        .position(|c| c.kind == ColumnKind::Datetime)
        .unwrap();
    // Repair every synthetic bad date, then break data row 7 only.
    for (i, line) in lines.iter_mut().enumerate().skip(1) {
        let mut cells: Vec<String> = line.split(';').map(String::from).collect();
        cells[date_col] = if i == 7 {
            "2013-13-45 99:99".into()
        } else {
            "2013-03-04 12:30".into()
        };
        *line = cells.join(";");
    }
    fs::write(&data, lines.join("\n") + "\n").unwrap();

    let out = dir.path().join("out");
    let o = ok(&["prepare", "--data", s(&data), "--out", s(&out)]);
    assert!(o.stdout.contains("rows 49 (dropped 1)"), "{}", o.stdout);
    let log: serde_json::Value = serde_json::from_slice(&fs::read(out.join("cleanse_log.json")).unwrap()).unwrap();
    assert_eq!(log["dropped_row_indices"], serde_json::json!([6]));
    let m: PrepareManifest = serde_json::from_slice(&fs::read(out.join("prepare_manifest.json")).unwrap()).unwrap();
    assert_eq!((m.source.raw_rows, m.clean_rows, m.dropped_rows), (50, 49, 1));
}

#[test]
fn bad_arguments_exit_with_one() {
    assert_eq!(riskml(&[]).code, 1);
    assert_eq!(riskml(&["frobnicate"]).code, 1);
    assert_eq!(riskml(&["synth", "--n", "many"]).code, 1);
    assert_eq!(riskml(&["synth", "--n", "3"]).code, 1);
    assert_eq!(riskml(&["--help"]).code, 0);
    let dir = TempDir::new().unwrap();
    let o = riskml(&["prepare", "--out", s(&dir.path().join("o"))]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("no dataset"), "{}", o.stderr);
    let o = riskml(&["prepare", "--data", s(&dir.path().join("absent.csv"))]);
    assert_eq!(o.code, 1);
}

#[test]
fn missing_artifacts_name_the_stage_to_run() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("empty");
    let o = riskml(&["train", "--out", s(&out)]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("riskml prepare"), "{}", o.stderr);

    let data = synth(dir.path(), 200, 1.0, 3);
    ok(&["prepare", "--data", s(&data), "--out", s(&out)]);
    let o = riskml(&["evaluate", "--out", s(&out)]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("riskml train"), "{}", o.stderr);
}

#[test]
fn edited_artifacts_are_rejected() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 200, 1.0, 3);
    let config = quick_config(dir.path(), &data, "models = [\"knn\", \"gnb\"]\n");
    let out = dir.path().join("out");
    pipeline(&config, &out);
    let split = out.join("split.json");
    let mut text = fs::read_to_string(&split).unwrap();
    text.push(' ');
    fs::write(&split, text).unwrap();
    let o = riskml(&["evaluate", "--out", s(&out)]);
    assert_eq!(o.code, 1, "{}", o.stderr);
}

#[test]
fn default_run_trains_all_five_families() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 300, 1.0, 9);
    let config = quick_config(dir.path(), &data, "");
    let out = dir.path().join("out");
    ok(&["prepare", "--config", s(&config), "--out", s(&out)]);
    let o = ok(&["train", "--out", s(&out)]);
    let m: TrainManifest = serde_json::from_slice(&fs::read(out.join("train_manifest.json")).unwrap()).unwrap();
    let families: Vec<ModelFamily> = m.models.iter().map(|r| r.family).collect();
    assert_eq!(families, ModelFamily::ALL);
    assert!(m.models.iter().all(|r| r.status == TrainStatus::Trained));
    assert_eq!(o.stdout.lines().count(), 5);
    for family in ModelFamily::ALL {
        assert!(out.join("models").join(format!("{family}.json")).is_file());
    }
    let evaluated = ok(&["evaluate", "--out", s(&out)]);
    for name in ["Logistic", "Naive Bayes", "Random Forest"] {
        assert!(evaluated.stdout.contains(name), "{name} in {}", evaluated.stdout);
    }
    assert!(evaluated.stdout.contains("Average"));
}

#[test]
fn importance_csv_lists_every_feature() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 300, 1.0, 10);
    let config = quick_config(dir.path(), &data, "models = [\"forest\"]\n");
    let out = dir.path().join("out");
    pipeline(&config, &out);
    let csv = fs::read_to_string(out.join("importance.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("feature,importance"));
    let rows: Vec<(String, f64)> = lines
        .map(|l| {
            let (f, v) = l.rsplit_once(',').unwrap();
            (f.to_string(), v.parse().unwrap())
        })
        .collect();
    let m: PrepareManifest = serde_json::from_slice(&fs::read(out.join("prepare_manifest.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), m.design_columns);
    assert!(rows.windows(2).all(|w| w[0].1 >= w[1].1));
    assert!((rows.iter().map(|r| r.1).sum::<f64>() - 1.0).abs() < 1e-6);
    assert_eq!(rows[0].0, "MOTO");
}

#[test]
fn grid_in_train_is_recorded() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 300, 1.0, 12);
    let config = quick_config(dir.path(), &data, "models = [\"knn\", \"logreg\"]\n");
    let grid = dir.path().join("grid.toml");
    fs::write(&grid, "family = \"knn\"\n[axes]\nk = [1, 5, 15]\n").unwrap();
    let out = dir.path().join("out");
    ok(&["prepare", "--config", s(&config), "--out", s(&out)]);
    ok(&["train", "--out", s(&out), "--grid", s(&grid)]);
    let m: TrainManifest = serde_json::from_slice(&fs::read(out.join("train_manifest.json")).unwrap()).unwrap();
    let knn = m.models.iter().find(|r| r.family == ModelFamily::Knn).unwrap();
    let tuning = knn.tuning.as_ref().expect("tuning recorded");
    assert_eq!(tuning.trials.len(), 3);
    let best_k = match &tuning.best_params["k"] {
        ParamValue::Number(k) => *k as usize,
        other => panic!("{other:?}"),
    };
    assert_eq!(knn.spec, Some(riskml_core::model::ModelSpec::Knn { k: best_k }));
    assert!(m
        .models
        .iter()
        .find(|r| r.family == ModelFamily::Logreg)
        .unwrap()
        .tuning
        .is_none());

    let o = ok(&["tune", "--out", s(&out), "--grid", s(&grid)]);
    assert!(o.stdout.contains("best AUC"));
    assert!(out.join("tuning").join("knn.json").is_file());
}

#[test]
fn json_config_is_accepted() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), 120, 1.0, 13);
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        format!(
            "{{\"data\": {:?}, \"train_fraction\": 0.5, \"models\": [\"gnb\"]}}",
            s(&data)
        ),
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = ok(&["prepare", "--config", s(&config), "--out", s(&out)]);
    assert!(o.stdout.contains("train 59, test 60"), "{}", o.stdout);
    ok(&["train", "--out", s(&out)]);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "trian_fraction = 0.5\n").unwrap();
    assert_eq!(riskml(&["prepare", "--config", s(&bad)]).code, 1);
}

#[test]
fn synth_is_deterministic() {
    let a = ok(&["synth", "--n", "60", "--seed", "3"]).stdout;
    let b = ok(&["synth", "--n", "60", "--seed", "3"]).stdout;
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 61);
    assert_ne!(a, ok(&["synth", "--n", "60", "--seed", "4"]).stdout);
}

/// A fixture whose label is a deterministic function of MOTO and TIPO_ACID,
/// with every other feature column constant.
fn separable_fixture(path: &Path, n: usize) {
    let schema = Schema::default();
    let mut text: String = schema
        .columns
        .iter()
        .map(|c| c.name.as_str())
        .collect::<Vec<_>>()
        .join(";");
    text.push('\n');
    let tipos = ["ABALROAMENTO", "COLISAO", "ATROPELAMENTO", "CHOQUE"];
    for i in 0..n {
        let moto = (i * 7 / 3) % 3 == 0;
        let tipo = tipos[(i * 5 + i / 4) % tipos.len()];
        let injured = moto || tipo == "ATROPELAMENTO";
        let cells: Vec<String> = schema
            .columns
            .iter()
            .map(|c| match (c.kind, c.name.as_str()) {
                (_, "MOTO") => u8::from(moto).to_string(),
                (_, "TIPO_ACID") => tipo.to_string(),
                (_, "FERIDOS") => u8::from(injured).to_string(),
                (ColumnKind::Count | ColumnKind::Casualty, _) => "0".into(),
                (ColumnKind::Datetime, _) => "2013-05-06 08:15".into(),
                (_, "ID") => (i + 1).to_string(),
                _ => "X".into(),
            })
            .collect();
        text.push_str(&cells.join(";"));
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

#[test]
fn separable_fixture_gives_every_model_high_auc() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("separable.csv");
    separable_fixture(&data, 300);
    let config = quick_config(dir.path(), &data, "");
    let out = dir.path().join("out");
    pipeline(&config, &out);
    for family in ModelFamily::ALL {
        let auc = read_report(&out, family.as_str()).auc.unwrap();
        assert!(auc > 0.95, "{family} AUC {auc}");
    }
}
