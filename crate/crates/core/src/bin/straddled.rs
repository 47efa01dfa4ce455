use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use straddled::analysis::LossKind;
use straddled::cli::{self, ConfigSource, RunOptions};
use straddled::data::SyntheticParams;
use straddled::experiment::Preset;
use straddled::report::summary_table;
use straddled::InitialiserSpec;

#[derive(Parser)]
#[command(version, about = "Autoencoder weight-initialisation benchmark")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every initialiser and write runs, summary, plot and metadata.
    Run {
        /// JSON experiment config.
        #[arg(conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long, value_parser = ["synthetic", "mnist", "swarm"])]
        preset: Option<String>,
        /// Dataset file(s), replacing the config's paths.
        #[arg(long, value_delimiter = ',')]
        data: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value = "train")]
        loss: LossKind,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Recompute the summary of a runs file.
    Analyze {
        runs_file: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        alpha: usize,
        #[arg(long, default_value = "train")]
        loss: LossKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot epoch-mean losses of a runs file as SVG.
    Plot {
        runs_file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "train")]
        loss: LossKind,
    },
    /// Write the synthetic dataset as CSV with a JSON sidecar.
    GenSynthetic {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        records: usize,
        #[arg(long, default_value_t = 20)]
        latent_dim: usize,
        #[arg(long, default_value_t = 100)]
        features: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print an initialiser's weight matrix.
    ShowInit {
        kind: InitialiserSpec,
        m: usize,
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(args: Args) -> straddled::Result<()> {
    match args.command {
        Command::Run {
            config,
            preset,
            data,
            out,
            workers,
            loss,
            epochs,
            runs,
        } => {
            let source = match (config, preset) {
                (Some(path), _) => ConfigSource::File(path),
                (None, Some(p)) => ConfigSource::Preset(p.parse::<Preset>()?),
                (None, None) => unreachable!("clap requires one of config/preset"),
            };
            let opts = RunOptions {
                data,
                workers,
                loss,
                epochs,
                runs,
                ..RunOptions::new(source, out)
            };
            let bundle = cli::cmd_run(&opts)?;
            print!("{}", summary_table(&bundle.summary_value));
            println!("wrote {}", bundle.runs.parent().unwrap_or(&bundle.runs).display());
        }
        Command::Analyze {
            runs_file,
            epsilon,
            alpha,
            loss,
            out,
        } => {
            let text = cli::cmd_analyze(&runs_file, epsilon, alpha, loss, out.as_deref())?;
            if out.is_none() {
                print!("{text}");
            }
        }
        Command::Plot { runs_file, out, loss } => cli::cmd_plot(&runs_file, &out, loss)?,
        Command::GenSynthetic {
            seed,
            records,
            latent_dim,
            features,
            out,
        } => {
            let params = SyntheticParams {
                records,
                latent_dim,
                features,
            };
            let sidecar = cli::cmd_gen_synthetic(seed, params, &out)?;
            println!("wrote {} and {}", out.display(), sidecar.display());
        }
        Command::ShowInit { kind, m, n, seed } => print!("{}", cli::cmd_show_init(&kind, m, n, seed)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
