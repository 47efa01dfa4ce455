//! Benchmark orchestration: seeded repeated trainings of the same
//! autoencoder under every configured initialiser.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset, Split, SyntheticParams};
use crate::error::{Error, Result};
use crate::initialisers::InitialiserSpec;
use crate::network::{build_autoencoder, rmse, Autoencoder, BatchSize, DEFAULT_HIDDEN};
use crate::numerics::{Matrix, Rng};

/// Environment variable overriding the configured worker count.
pub const WORKERS_ENV: &str = "STRADDLED_WORKERS";

/// Where an experiment's records come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Generated records, min-max scaled.
    Synthetic {
        #[serde(default = "default_records")]
        records: usize,
        #[serde(default = "default_latent")]
        latent_dim: usize,
        #[serde(default = "default_features")]
        features: usize,
        #[serde(default)]
        seed: u64,
    },
    /// IDX image files, pixel values divided by 255 (no further scaling).
    /// With `original_split` the first file is train and the second test.
    Mnist {
        images_paths: Vec<PathBuf>,
        #[serde(default)]
        limit: Option<usize>,
        #[serde(default)]
        original_split: bool,
    },
    /// Headed numeric CSV, min-max scaled after dropping label columns.
    Csv {
        path: PathBuf,
        #[serde(default)]
        drop_columns: Vec<String>,
    },
}

fn default_records() -> usize {
    SyntheticParams::default().records
}
fn default_latent() -> usize {
    SyntheticParams::default().latent_dim
}
fn default_features() -> usize {
    SyntheticParams::default().features
}
fn default_hidden() -> Vec<usize> {
    DEFAULT_HIDDEN.to_vec()
}
fn default_fraction() -> f64 {
    0.8
}
fn default_initialisers() -> Vec<InitialiserSpec> {
    InitialiserSpec::benchmarked()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: DatasetSource,
    #[serde(default = "default_fraction")]
    pub split_fraction: f64,
    /// Seed of the data split, shared by every run and initialiser.
    #[serde(default)]
    pub split_seed: u64,
    pub batch_size: BatchSize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub convergence_epsilon: f64,
    pub convergence_alpha: usize,
    #[serde(default = "default_initialisers")]
    pub initialisers: Vec<InitialiserSpec>,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.epochs < 1 {
            return fail("epochs must be at least 1".into());
        }
        if self.runs < 1 {
            return fail("runs must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.convergence_epsilon.is_finite() && self.convergence_epsilon > 0.0) {
            return fail(format!(
                "convergence_epsilon must be > 0, got {}",
                self.convergence_epsilon
            ));
        }
        if self.convergence_alpha < 1 || self.convergence_alpha >= self.epochs {
            return fail(format!(
                "convergence_alpha must be in 1..epochs ({}), got {}",
                self.epochs, self.convergence_alpha
            ));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return fail(format!("split_fraction must be in (0, 1), got {}", self.split_fraction));
        }
        if self.initialisers.is_empty() {
            return fail("initialisers must not be empty".into());
        }
        for (i, a) in self.initialisers.iter().enumerate() {
            if self.initialisers[..i].iter().any(|b| b.name() == a.name()) {
                return fail(format!("initialiser `{}` listed twice", a.name()));
            }
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return fail(format!("hidden widths must be non-empty and positive, got {:?}", self.hidden));
        }
        if self.workers == Some(0) {
            return fail("workers must be at least 1".into());
        }
        if let DatasetSource::Mnist {
            images_paths,
            original_split,
            limit,
        } = &self.dataset
        {
            if images_paths.is_empty() {
                return fail("mnist dataset needs at least one images path".into());
            }
            if *original_split && images_paths.len() != 2 {
                return fail("mnist original_split needs exactly two images paths (train, test)".into());
            }
            if *limit == Some(0) {
                return fail("mnist limit must be at least 1".into());
            }
        }
        Ok(())
    }

    /// Parses and validates a JSON config.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Worker count after applying the environment override.
    pub fn effective_workers(&self) -> Result<usize> {
        match std::env::var(WORKERS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
            },
            Err(_) => Ok(self.workers.unwrap_or_else(|| {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            })),
        }
    }
}

/// The three datasets with settings from the published benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Synthetic,
    Mnist,
    Swarm,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Synthetic => "synthetic",
            Preset::Mnist => "mnist",
            Preset::Swarm => "swarm",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(Preset::Synthetic),
            "mnist" => Ok(Preset::Mnist),
            "swarm" => Ok(Preset::Swarm),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected synthetic, mnist or swarm)"
            ))),
        }
    }
}

/// Default MNIST locations, relative to the working directory.
pub const MNIST_DEFAULT_PATHS: [&str; 2] = [
    "data/mnist/train-images-idx3-ubyte",
    "data/mnist/t10k-images-idx3-ubyte",
];
pub const SWARM_DEFAULT_PATH: &str = "data/swarm/Swarm_Behaviour.csv";
pub const SWARM_LABEL_COLUMN: &str = "Swarm_Behaviour";

pub fn builtin_config(preset: Preset) -> ExperimentConfig {
    let (dataset, batch_size, epochs, epsilon, alpha) = match preset {
        Preset::Synthetic => (
            DatasetSource::Synthetic {
                records: 5000,
                latent_dim: 20,
                features: 100,
                seed: 0,
            },
            BatchSize::Full,
            1000,
            0.001,
            100,
        ),
        Preset::Mnist => (
            DatasetSource::Mnist {
                images_paths: MNIST_DEFAULT_PATHS.iter().map(PathBuf::from).collect(),
                limit: None,
                original_split: false,
            },
            BatchSize::Rows(256),
            1000,
            0.005,
            250,
        ),
        Preset::Swarm => (
            DatasetSource::Csv {
                path: PathBuf::from(SWARM_DEFAULT_PATH),
                drop_columns: vec![SWARM_LABEL_COLUMN.to_string()],
            },
            BatchSize::Full,
            1500,
            0.005,
            500,
        ),
    };
    ExperimentConfig {
        name: preset.name().to_string(),
        dataset,
        split_fraction: 0.8,
        split_seed: 42,
        batch_size,
        epochs,
        learning_rate: 0.1,
        runs: 10,
        base_seed: 0,
        convergence_epsilon: epsilon,
        convergence_alpha: alpha,
        initialisers: InitialiserSpec::benchmarked(),
        hidden: DEFAULT_HIDDEN.to_vec(),
        workers: None,
    }
}

/// Loaded, scaled and split data for one experiment.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub dataset_name: String,
    pub dataset_metadata: serde_json::Value,
    pub split: Split,
    pub split_checksum: String,
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::format(path, "dataset file not found"))
    }
}

pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let (name, metadata, split) = match &cfg.dataset {
        DatasetSource::Synthetic {
            records,
            latent_dim,
            features,
            seed,
        } => {
            let params = SyntheticParams {
                records: *records,
                latent_dim: *latent_dim,
                features: *features,
            };
            let raw = data::generate_synthetic(&mut Rng::new(*seed), params)?;
            let scaled = data::minmax_scale(&raw);
            let split = data::split(&scaled, cfg.split_fraction, cfg.split_seed)?;
            (scaled.name, scaled.metadata, split)
        }
        DatasetSource::Mnist {
            images_paths,
            limit,
            original_split,
        } => {
            let mut parts = Vec::with_capacity(images_paths.len());
            for p in images_paths {
                require_file(p)?;
                parts.push(data::load_mnist_idx(p)?);
            }
            let sources: Vec<_> = parts.iter().map(|d| d.metadata.clone()).collect();
            let meta = serde_json::json!({"sources": sources, "limit": limit});
            if *original_split {
                let mut test = parts.pop().expect("validated two paths");
                let mut train = parts.pop().expect("validated two paths");
                if let Some(n) = limit {
                    let n_train = (*n as f64 * cfg.split_fraction).floor() as usize;
                    train = train.truncate(n_train.max(1))?;
                    test = test.truncate((n - n_train).max(1))?;
                }
                ("mnist".to_string(), meta, data::fixed_split(&train, &test)?)
            } else {
                let combined = concat_datasets("mnist", parts)?;
                let combined = match limit {
                    Some(n) => combined.truncate(*n)?,
                    None => combined,
                };
                let split = data::split(&combined, cfg.split_fraction, cfg.split_seed)?;
                ("mnist".to_string(), meta, split)
            }
        }
        DatasetSource::Csv { path, drop_columns } => {
            require_file(path)?;
            let raw = data::load_csv(path, drop_columns)?;
            let scaled = data::minmax_scale(&raw);
            let split = data::split(&scaled, cfg.split_fraction, cfg.split_seed)?;
            (scaled.name, scaled.metadata, split)
        }
    };
    let split_checksum = split.checksum();
    Ok(PreparedData {
        dataset_name: name,
        dataset_metadata: metadata,
        split,
        split_checksum,
    })
}

fn concat_datasets(name: &str, parts: Vec<Dataset>) -> Result<Dataset> {
    let dim = parts[0].dim();
    let mut rows = 0;
    let mut values = Vec::new();
    for p in parts {
        if p.dim() != dim {
            return Err(Error::InvalidArgument(format!(
                "cannot concatenate datasets of width {dim} and {}",
                p.dim()
            )));
        }
        rows += p.records();
        values.extend(p.features.into_vec());
    }
    Ok(Dataset::new(name, Matrix::new(rows, dim, values)?))
}

/// Per-epoch losses of one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    pub initialiser: String,
    pub run: usize,
    pub seed: u64,
    /// Train RMSE after each epoch; `+∞` from the first non-finite loss on.
    pub train_loss: Vec<f64>,
    pub test_loss: Vec<f64>,
    pub wall_clock: Duration,
}

impl RunLog {
    pub fn diverged(&self) -> bool {
        self.train_loss.iter().chain(&self.test_loss).any(|v| !v.is_finite())
    }

    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }
}

/// 64-bit FNV-1a.
fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Weight/shuffle seed of run `run` for an initialiser: `base_seed + run`,
/// offset by a hash of the initialiser name.
pub fn run_seed(base_seed: u64, run: usize, initialiser: &str) -> u64 {
    base_seed.wrapping_add(run as u64).wrapping_add(fnv1a(initialiser))
}

/// Trains one model for `epochs`, recording train/test RMSE at each epoch
/// end. Training stops at the first non-finite loss and the remaining
/// epochs are filled with `+∞`.
pub fn train_run(
    model: &mut Autoencoder,
    split: &Split,
    batch: BatchSize,
    epochs: usize,
    lr: f64,
    rng: &mut Rng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut train_loss = Vec::with_capacity(epochs);
    let mut test_loss = Vec::with_capacity(epochs);
    // In full-batch mode the epoch-end evaluation of the train set is exactly
    // the forward pass of the next step, so it is reused.
    let mut cached = match batch {
        BatchSize::Full => Some(model.forward(&split.train)?),
        BatchSize::Rows(_) => None,
    };
    for _ in 0..epochs {
        let train = match cached.take() {
            Some(trace) => {
                let grads = model.backward(&trace, &split.train)?;
                model.sgd_step(&grads, lr)?;
                let trace = model.forward(&split.train)?;
                let loss = rmse(trace.output(), &split.train)?;
                cached = Some(trace);
                loss
            }
            None => {
                model.train_epoch(&split.train, batch, lr, rng)?;
                model.evaluate(&split.train)?
            }
        };
        let test = model.evaluate(&split.test)?;
        if !(train.is_finite() && test.is_finite()) {
            train_loss.resize(epochs, f64::INFINITY);
            test_loss.resize(epochs, f64::INFINITY);
            break;
        }
        train_loss.push(train);
        test_loss.push(test);
    }
    Ok((train_loss, test_loss))
}

/// Runs every (initialiser, run) pair on already prepared data. Logs come
/// back ordered by initialiser (config order) then run index.
pub fn run_on_split(cfg: &ExperimentConfig, split: &Split) -> Result<Vec<RunLog>> {
    cfg.validate()?;
    if let BatchSize::Rows(n) = cfg.batch_size {
        if n > split.train.rows() {
            return Err(Error::Config(format!(
                "batch_size {n} exceeds the {} training rows",
                split.train.rows()
            )));
        }
    }
    let tasks: Vec<(InitialiserSpec, usize)> = cfg
        .initialisers
        .iter()
        .flat_map(|spec| (0..cfg.runs).map(move |r| (*spec, r)))
        .collect();

    // A deterministic initialiser trained full-batch never touches its
    // generator, so every run reproduces run 0 exactly.
    let reuse = |spec: &InitialiserSpec| spec.kind.is_deterministic() && cfg.batch_size == BatchSize::Full;

    let train_one = |spec: &InitialiserSpec, run: usize| -> Result<RunLog> {
        let seed = run_seed(cfg.base_seed, run, spec.name());
        let start = Instant::now();
        let mut rng = Rng::new(seed);
        let mut model = build_autoencoder(split.train.cols(), &cfg.hidden, spec, &mut rng)?;
        let (train_loss, test_loss) =
            train_run(&mut model, split, cfg.batch_size, cfg.epochs, cfg.learning_rate, &mut rng)?;
        Ok(RunLog {
            initialiser: spec.name().to_string(),
            run,
            seed,
            train_loss,
            test_loss,
            wall_clock: start.elapsed(),
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.effective_workers()?)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let computed: Vec<Option<RunLog>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(spec, run)| {
                if *run > 0 && reuse(spec) {
                    Ok(None)
                } else {
                    train_one(spec, *run).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut logs: Vec<RunLog> = Vec::with_capacity(tasks.len());
    for ((spec, run), log) in tasks.iter().zip(computed) {
        let log = match log {
            Some(log) => log,
            None => {
                let first = logs
                    .iter()
                    .find(|l| l.initialiser == spec.name() && l.run == 0)
                    .expect("run 0 precedes later runs");
                RunLog {
                    run: *run,
                    seed: run_seed(cfg.base_seed, *run, spec.name()),
                    ..first.clone()
                }
            }
        };
        logs.push(log);
    }
    Ok(logs)
}

/// Everything a finished experiment produced.
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub logs: Vec<RunLog>,
    pub data: PreparedData,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let logs = run_on_split(cfg, &data.split)?;
    Ok(ExperimentOutcome { logs, data })
}
