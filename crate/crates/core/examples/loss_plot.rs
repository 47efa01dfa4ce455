//! Runs a short experiment, writes the runs file and an SVG of the loss
//! curves, then recomputes the summary from the runs file alone.
//!
//! ```text
//! cargo run --release --example loss_plot -- [output-dir]
//! ```

use std::path::PathBuf;

use straddled::analysis::LossKind;
use straddled::cli::{cmd_analyze, cmd_plot, cmd_run, ConfigSource, RunOptions};
use straddled::experiment::{builtin_config, DatasetSource, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("straddled-plot"), PathBuf::from);

    let mut cfg = builtin_config(Preset::Synthetic);
    cfg.name = "plot-demo".into();
    cfg.dataset = DatasetSource::Synthetic {
        records: 300,
        latent_dim: 20,
        features: 100,
        seed: 5,
    };
    cfg.epochs = 150;
    cfg.runs = 3;
    cfg.convergence_alpha = 50;
    std::fs::create_dir_all(&out)?;
    let config_path = out.join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&cfg)?)?;

    let bundle = cmd_run(&RunOptions::new(ConfigSource::File(config_path), &out))?;
    println!("wrote {}", bundle.runs.display());
    println!("wrote {}", bundle.plot.display());

    let test_plot = out.join("test_loss.svg");
    cmd_plot(&bundle.runs, &test_plot, LossKind::Test)?;
    println!("wrote {}", test_plot.display());

    let again = cmd_analyze(&bundle.runs, cfg.convergence_epsilon, cfg.convergence_alpha, LossKind::Train, None)?;
    let original = std::fs::read_to_string(&bundle.summary)?;
    println!("summary reproduced from runs file: {}", again == original);
    Ok(())
}
