//! Generates the synthetic benchmark data and shows how it is built.
//!
//! ```text
//! cargo run --example synthetic_data -- [seed] [out.csv]
//! ```

use std::path::PathBuf;

use straddled::cli::cmd_gen_synthetic;
use straddled::data::{generate_synthetic_with_latent, minmax_scale, split, SyntheticParams};
use straddled::numerics::Rng;

fn main() -> straddled::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("numeric seed"));
    let out = args.next().map_or_else(|| std::env::temp_dir().join("synthetic.csv"), PathBuf::from);

    let params = SyntheticParams::default();
    let (linear, products, sines, squares) = params.block_sizes();
    println!(
        "{} records, {} latent factors -> {} features ({linear} linear, {products} products, {sines} sines, {squares} squares)",
        params.records, params.latent_dim, params.features
    );

    let sample = generate_synthetic_with_latent(&mut Rng::new(seed), params)?;
    println!("first product pairs: {:?}", &sample.product_pairs[..5.min(sample.product_pairs.len())]);
    let scaled = minmax_scale(&sample.dataset);
    let parts = split(&scaled, 0.8, 42)?;
    println!("train {} rows, test {} rows, split checksum {}", parts.train.rows(), parts.test.rows(), parts.checksum());

    let sidecar = cmd_gen_synthetic(seed, params, &out)?;
    println!("wrote {} and {}", out.display(), sidecar.display());
    Ok(())
}
