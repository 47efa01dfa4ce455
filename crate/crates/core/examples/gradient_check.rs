//! Checks backpropagation against central finite differences on a batch of
//! small random autoencoders.
//!
//! ```text
//! cargo run --release --example gradient_check -- [models]
//! ```

use straddled::gradcheck::check_gradients;
use straddled::network::build_autoencoder;
use straddled::numerics::{sample_uniform, Rng};
use straddled::InitialiserSpec;

fn main() -> straddled::Result<()> {
    let models: usize = std::env::args().nth(1).map_or(100, |a| a.parse().expect("numeric count"));
    let mut rng = Rng::new(11);
    let mut worst = 0.0f64;
    for i in 0..models {
        let input = 2 + (rng.next_f64() * 6.0) as usize;
        let hidden: Vec<usize> = (0..3).map(|_| 1 + (rng.next_f64() * 5.0) as usize).collect();
        let spec = InitialiserSpec::random_normal(0.5);
        let mut model = build_autoencoder(input, &hidden, &spec, &mut rng)?;
        for layer in model.layers_mut() {
            for b in &mut layer.bias {
                *b = rng.next_f64() * 0.2 - 0.1;
            }
        }
        let x = sample_uniform(&mut rng, 3 + i % 5, input, 0.0, 1.0)?;
        let check = check_gradients(&model, &x, 1e-5)?;
        worst = worst.max(check.max_relative_error);
        println!(
            "model {i:3}: {input}-{hidden:?}-{input} {:4} params  max rel err {:.2e}",
            check.parameters, check.max_relative_error
        );
    }
    println!("\nworst relative error over {models} models: {worst:.2e}");
    Ok(())
}
