//! Argument parsing and dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::artifacts::{read_json, Layout, TrainStatus, RUN_CONFIG};
use crate::commands;
use crate::config::{load_file, load_grids, parse_models, RunConfig, DEFAULT_OUT_DIR};
use crate::error::{CliError, CliResult};
use crate::synth;

#[derive(Debug, Parser)]
#[command(
    name = "riskml",
    version,
    about = "Injury-risk classification of traffic accident records"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cleanse, encode and split a dataset into on-disk artifacts.
    Prepare {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Run configuration (TOML, or JSON by extension).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        train_fraction: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit models on the prepared training split.
    Train {
        /// Comma-separated families: logreg,svm,gnb,knn,forest.
        #[arg(long)]
        models: Option<String>,
        /// Grid file; listed families are tuned before the final fit.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score trained models on the test split.
    Evaluate {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write roc.svg (on by default in the run configuration).
        #[arg(long)]
        roc_svg: bool,
    },
    /// Grid-search hyperparameters by validation AUC.
    Tune {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic fixture in the 2013 layout.
    Synth {
        #[arg(long)]
        n: usize,
        /// Strength of the planted signal in [0, 1].
        #[arg(long, default_value_t = 1.0)]
        signal: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// The saved run configuration for `out`, or `config` when given.
fn stage_config(config: Option<&Path>, out: &Path) -> CliResult<RunConfig> {
    let mut c = match config {
        Some(path) => load_file::<RunConfig>(path)?,
        None => read_json::<RunConfig>(&Layout::new(out).path(RUN_CONFIG), "prepare")?.0,
    };
    c.out = out.to_path_buf();
    Ok(c)
}

fn params_text(params: &riskml_core::tuning::ParamSet) -> String {
    serde_json::to_string(params).unwrap_or_default()
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn execute(command: Command, stdout: &mut dyn Write) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Io {
        path: "<stdout>".into(),
        source: e,
    };
    match command {
        Command::Prepare {
            data,
            config,
            seed,
            train_fraction,
            out,
        } => {
            let mut c = match &config {
                Some(path) => load_file::<RunConfig>(path)?,
                None => RunConfig::default(),
            };
            if data.is_some() {
                c.data = data;
            }
            if let Some(seed) = seed {
                c.seed = seed;
            }
            if let Some(f) = train_fraction {
                c.train_fraction = f;
            }
            if let Some(out) = out {
                c.out = out;
            }
            let s = commands::prepare(&c)?;
            let m = &s.manifest;
            writeln!(
                stdout,
                "rows {} (dropped {}), non-injury {}, injury {}, features {}, train {}, test {}",
                m.clean_rows,
                m.dropped_rows,
                m.class_counts[0],
                m.class_counts[1],
                m.design_columns,
                m.train_rows,
                m.test_rows
            )
            .map_err(io)?;
            writeln!(stdout, "artifacts written to {}", c.out.display()).map_err(io)?;
        }
        Command::Train {
            models,
            grid,
            config,
            out,
        } => {
            let out = out_dir(out);
            let mut c = stage_config(config.as_deref(), &out)?;
            if let Some(list) = models {
                c.models = parse_models(&list)?;
            }
            if let Some(path) = grid {
                c.grids = load_grids(&path)?;
            }
            let manifest = commands::train(&c, &out)?;
            for m in &manifest.models {
                match m.status {
                    TrainStatus::Trained => writeln!(stdout, "{:<8} trained", m.family.as_str()),
                    TrainStatus::Failed => writeln!(
                        stdout,
                        "{:<8} FAILED: {}",
                        m.family.as_str(),
                        m.error.as_deref().unwrap_or("")
                    ),
                }
                .map_err(io)?;
            }
        }
        Command::Evaluate { out, roc_svg } => {
            let out = out_dir(out);
            let c = stage_config(None, &out)?;
            let summary = commands::evaluate(&out, roc_svg || c.report.roc_svg)?;
            write!(stdout, "{}", summary.table).map_err(io)?;
        }
        Command::Tune { grid, config, out } => {
            let out = out_dir(out);
            let c = stage_config(config.as_deref(), &out)?;
            let grids = load_grids(&grid)?;
            for result in commands::tune(&c, &out, &grids)? {
                writeln!(
                    stdout,
                    "{}: best AUC {:.4} with {}",
                    result.family,
                    result.best_auc,
                    params_text(&result.best_params)
                )
                .map_err(io)?;
                for t in &result.trials {
                    let flag = if t.failed { " (failed)" } else { "" };
                    writeln!(stdout, "  {:.4} {}{flag}", t.auc, params_text(&t.params)).map_err(io)?;
                }
            }
        }
        Command::Synth {
            n,
            signal,
            seed,
            output,
        } => {
            let text = synth::generate(n, signal, seed)?;
            match output {
                Some(path) => {
                    crate::artifacts::write_bytes(&path, text.as_bytes())?;
                }
                None => stdout.write_all(text.as_bytes()).map_err(io)?,
            }
        }
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// status: 0 success, 1 validation error, 2 runtime error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
