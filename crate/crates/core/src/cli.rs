//! Command implementations behind the `straddled` binary.
//!
//! Each command is an ordinary function so the same behaviour is reachable
//! from tests and examples without spawning a process.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::analysis::{summarise, LossKind, Summary};
use crate::data::{self, SyntheticParams};
use crate::error::{Error, Result};
use crate::experiment::{builtin_config, run_experiment, DatasetSource, ExperimentConfig, Preset};
use crate::initialisers::{make_weights, InitialiserSpec};
use crate::numerics::{Rng, PRNG_NAME};
use crate::plot::loss_curves_svg;
use crate::report::{parse_runs_csv, summary_json, write_runs_csv};

pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_FILE: &str = "loss.svg";
pub const METADATA_FILE: &str = "metadata.json";

/// Where an experiment's configuration comes from.
#[derive(Clone, Debug)]
pub enum ConfigSource {
    File(PathBuf),
    Preset(Preset),
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub config: ConfigSource,
    /// Replaces the dataset path(s) of the config (MNIST: comma-separated
    /// list in the CLI, one entry per file here).
    pub data: Vec<PathBuf>,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub loss: LossKind,
    /// Overrides, mainly for quick runs of a preset.
    pub epochs: Option<usize>,
    pub runs: Option<usize>,
}

impl RunOptions {
    pub fn new(config: ConfigSource, out: impl Into<PathBuf>) -> Self {
        RunOptions {
            config,
            data: Vec::new(),
            out: out.into(),
            workers: None,
            loss: LossKind::Train,
            epochs: None,
            runs: None,
        }
    }
}

/// Paths of everything `cmd_run` wrote.
#[derive(Clone, Debug)]
pub struct OutputBundle {
    pub runs: PathBuf,
    pub summary: PathBuf,
    pub plot: PathBuf,
    pub metadata: PathBuf,
    pub summary_value: Summary,
}

#[derive(Serialize)]
struct RunTiming<'a> {
    initialiser: &'a str,
    run: usize,
    seed: u64,
    seconds: f64,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Resolves the configuration a run command will use.
pub fn resolve_config(opts: &RunOptions) -> Result<ExperimentConfig> {
    let mut cfg = match &opts.config {
        ConfigSource::File(path) => ExperimentConfig::load(path)?,
        ConfigSource::Preset(preset) => builtin_config(*preset),
    };
    if !opts.data.is_empty() {
        match &mut cfg.dataset {
            DatasetSource::Mnist { images_paths, .. } => *images_paths = opts.data.clone(),
            DatasetSource::Csv { path, .. } => {
                if opts.data.len() != 1 {
                    return Err(Error::Config("csv datasets take exactly one --data path".into()));
                }
                *path = opts.data[0].clone();
            }
            DatasetSource::Synthetic { .. } => {
                return Err(Error::Config("--data does not apply to the synthetic dataset".into()))
            }
        }
    }
    if let Some(w) = opts.workers {
        cfg.workers = Some(w);
    }
    if let Some(e) = opts.epochs {
        cfg.epochs = e;
    }
    if let Some(r) = opts.runs {
        cfg.runs = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Trains every configured initialiser and writes runs, summary, plot and
/// metadata into `opts.out`.
pub fn cmd_run(opts: &RunOptions) -> Result<OutputBundle> {
    let cfg = resolve_config(opts)?;
    fs::create_dir_all(&opts.out).map_err(|e| Error::io(&opts.out, e))?;
    let outcome = run_experiment(&cfg)?;

    let runs_text = write_runs_csv(&outcome.logs);
    let summary = summarise(&outcome.logs, cfg.convergence_epsilon, cfg.convergence_alpha, opts.loss)?;
    let svg = loss_curves_svg(&outcome.logs, opts.loss, &format!("{} reconstruction loss", cfg.name))?;

    let timings: Vec<RunTiming> = outcome
        .logs
        .iter()
        .map(|l| RunTiming {
            initialiser: &l.initialiser,
            run: l.run,
            seed: l.seed,
            seconds: l.wall_clock.as_secs_f64(),
        })
        .collect();
    let metadata = json!({
        "config": cfg,
        "prng": PRNG_NAME,
        "code_version": env!("CARGO_PKG_VERSION"),
        "dataset": {
            "name": outcome.data.dataset_name,
            "metadata": outcome.data.dataset_metadata,
            "split_checksum": outcome.data.split_checksum,
            "train_rows": outcome.data.split.train.rows(),
            "test_rows": outcome.data.split.test.rows(),
            "features": outcome.data.split.train.cols(),
        },
        "analysis": {"loss": opts.loss, "test": summary.settings.test},
        "timings": timings,
    });

    let bundle = OutputBundle {
        runs: opts.out.join(RUNS_FILE),
        summary: opts.out.join(SUMMARY_FILE),
        plot: opts.out.join(PLOT_FILE),
        metadata: opts.out.join(METADATA_FILE),
        summary_value: summary,
    };
    write(&bundle.runs, runs_text)?;
    write(&bundle.summary, summary_json(&bundle.summary_value)?)?;
    write(&bundle.plot, svg)?;
    write(&bundle.metadata, serde_json::to_string_pretty(&metadata)? + "\n")?;
    Ok(bundle)
}

/// Recomputes the summary of a runs file. Writes it to `out` when given and
/// returns the JSON text.
pub fn cmd_analyze(
    runs_file: &Path,
    epsilon: f64,
    alpha: usize,
    loss: LossKind,
    out: Option<&Path>,
) -> Result<String> {
    let logs = parse_runs_csv(&read(runs_file)?, runs_file)?;
    let text = summary_json(&summarise(&logs, epsilon, alpha, loss)?)?;
    if let Some(out) = out {
        write(out, &text)?;
    }
    Ok(text)
}

pub fn cmd_plot(runs_file: &Path, out: &Path, loss: LossKind) -> Result<()> {
    let logs = parse_runs_csv(&read(runs_file)?, runs_file)?;
    let title = runs_file
        .parent()
        .and_then(Path::file_name)
        .map_or_else(|| "loss".to_string(), |n| n.to_string_lossy().into_owned());
    write(out, loss_curves_svg(&logs, loss, &title)?)
}

/// Writes the synthetic dataset as CSV plus a `<name>.json` sidecar holding
/// the seed and generator parameters. The CSV is unscaled.
pub fn cmd_gen_synthetic(seed: u64, params: SyntheticParams, out_csv: &Path) -> Result<PathBuf> {
    let dataset = data::generate_synthetic(&mut Rng::new(seed), params)?;
    data::write_csv(out_csv, &dataset)?;
    let sidecar = out_csv.with_extension("json");
    let meta = json!({
        "seed": seed,
        "prng": PRNG_NAME,
        "params": params,
        "generator": dataset.metadata,
        "checksum": data::matrix_checksum(&dataset.features),
    });
    write(&sidecar, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(sidecar)
}

/// Renders an initialiser's `m × n` matrix, one row per line. Structured
/// initialisers print as 0/1, random ones with four decimals.
pub fn cmd_show_init(spec: &InitialiserSpec, m: usize, n: usize, seed: u64) -> Result<String> {
    let w = make_weights(spec, &mut Rng::new(seed), m, n)?;
    let mut out = String::new();
    for r in 0..m {
        let cells: Vec<String> = w
            .row(r)
            .iter()
            .map(|v| {
                if spec.kind.is_deterministic() {
                    format!("{}", *v as i64)
                } else {
                    format!("{v:8.4}")
                }
            })
            .collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    Ok(out)
}
