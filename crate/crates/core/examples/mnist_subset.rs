//! Mini-batch training on an MNIST image file (IDX format).
//!
//! ```text
//! cargo run --release --example mnist_subset -- [images.idx3-ubyte] [epochs]
//! ```
//!
//! Without arguments it uses the 2000-image subset bundled with the tests.

use std::path::PathBuf;

use straddled::analysis::{summarise, LossKind};
use straddled::experiment::{builtin_config, run_experiment, DatasetSource, Preset};
use straddled::report::summary_table;
use straddled::{InitialiserKind, InitialiserSpec};

fn main() -> straddled::Result<()> {
    let mut args = std::env::args().skip(1);
    let images = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/mnist-2k-images-idx3-ubyte")
    });
    let epochs = args.next().map_or(100, |e| e.parse().expect("numeric epochs"));

    let mut cfg = builtin_config(Preset::Mnist);
    cfg.dataset = DatasetSource::Mnist {
        images_paths: vec![images],
        limit: Some(2000),
        original_split: false,
    };
    cfg.epochs = epochs;
    cfg.runs = 3;
    cfg.convergence_alpha = (epochs / 4).max(1);
    cfg.initialisers = [InitialiserKind::Straddled, InitialiserKind::Identity, InitialiserKind::RandomNormal]
        .into_iter()
        .map(InitialiserSpec::new)
        .collect();

    let start = std::time::Instant::now();
    let outcome = run_experiment(&cfg)?;
    println!(
        "{} images of {} pixels, {} runs in {:.1?}\n",
        outcome.data.split.train.rows() + outcome.data.split.test.rows(),
        outcome.data.split.train.cols(),
        outcome.logs.len(),
        start.elapsed()
    );
    for loss in [LossKind::Train, LossKind::Test] {
        println!("{loss} loss");
        let summary = summarise(&outcome.logs, cfg.convergence_epsilon, cfg.convergence_alpha, loss)?;
        println!("{}", summary_table(&summary));
    }
    Ok(())
}
