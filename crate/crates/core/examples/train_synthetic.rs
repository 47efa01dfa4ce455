//! Trains the autoencoder on a small synthetic dataset with several
//! initialisers and prints the comparison table.
//!
//! ```text
//! cargo run --release --example train_synthetic -- [epochs] [runs]
//! ```

use straddled::analysis::{epoch_means, settling_epoch, summarise, LossKind};
use straddled::experiment::{builtin_config, run_experiment, DatasetSource, Preset};
use straddled::report::summary_table;
use straddled::{InitialiserKind, InitialiserSpec};

fn main() -> straddled::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("numeric argument"));
    let epochs = args.next().unwrap_or(300);
    let runs = args.next().unwrap_or(3);

    let mut cfg = builtin_config(Preset::Synthetic);
    cfg.name = "synthetic-small".into();
    cfg.dataset = DatasetSource::Synthetic {
        records: 500,
        latent_dim: 20,
        features: 100,
        seed: 0,
    };
    cfg.epochs = epochs;
    cfg.runs = runs;
    cfg.convergence_alpha = (epochs / 3).max(1);
    cfg.initialisers = [
        InitialiserKind::Straddled,
        InitialiserKind::GlorotUniform,
        InitialiserKind::GlorotNormal,
        InitialiserKind::Orthogonal,
    ]
    .into_iter()
    .map(InitialiserSpec::new)
    .collect();

    let start = std::time::Instant::now();
    let outcome = run_experiment(&cfg)?;
    println!("trained {} runs in {:.1?}\n", outcome.logs.len(), start.elapsed());

    let summary = summarise(&outcome.logs, cfg.convergence_epsilon, cfg.convergence_alpha, LossKind::Train)?;
    print!("{}", summary_table(&summary));

    println!("\nepoch after which the mean loss stays within 0.005 of its final value:");
    for series in epoch_means(&outcome.logs, LossKind::Train)? {
        let settled = settling_epoch(&series.mean, 0.005).map_or("-".to_string(), |e| e.to_string());
        println!("  {:<14} {settled}", series.initialiser);
    }
    Ok(())
}
