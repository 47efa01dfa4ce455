//! Runs a built-in experiment preset end to end, like `straddled run
//! --preset`, optionally shortened.
//!
//! ```text
//! cargo run --release --example run_preset -- synthetic [out-dir] [epochs] [runs]
//! ```

use std::path::PathBuf;

use straddled::cli::{cmd_run, ConfigSource, RunOptions};
use straddled::experiment::Preset;
use straddled::report::summary_table;

fn main() -> straddled::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset: Preset = args.next().as_deref().unwrap_or("synthetic").parse()?;
    let out = args.next().map_or_else(|| PathBuf::from("results").join(preset.name()), PathBuf::from);
    let mut opts = RunOptions::new(ConfigSource::Preset(preset), &out);
    opts.epochs = args.next().map(|e| e.parse().expect("numeric epochs"));
    opts.runs = args.next().map(|r| r.parse().expect("numeric runs"));

    let start = std::time::Instant::now();
    let bundle = cmd_run(&opts)?;
    println!("finished in {:.1?}, outputs in {}\n", start.elapsed(), out.display());
    print!("{}", summary_table(&bundle.summary_value));
    Ok(())
}
