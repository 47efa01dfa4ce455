//! Prints the structured initialisers for a few shapes and a sample of the
//! random ones.
//!
//! ```text
//! cargo run --example show_initialisers
//! ```

use straddled::cli::cmd_show_init;
use straddled::initialisers::straddled;
use straddled::numerics::{frobenius_norm, transpose};
use straddled::{InitialiserKind, InitialiserSpec};

fn main() -> straddled::Result<()> {
    for (m, n) in [(8, 3), (5, 3), (3, 5)] {
        for kind in [InitialiserKind::Straddled, InitialiserKind::Identity, InitialiserKind::RecurrentIdentity] {
            println!("{kind} {m}x{n}");
            print!("{}", cmd_show_init(&kind.into(), m, n, 0)?);
            println!();
        }
    }

    let wide = straddled(3, 5);
    let tall = straddled(5, 3);
    println!("|straddled 3x5| = {:.6}", frobenius_norm(&wide));
    println!("|straddled 5x3| = {:.6}", frobenius_norm(&tall));
    println!("3x5 is the transpose of 5x3: {}\n", transpose(&tall) == wide);

    for kind in [InitialiserKind::GlorotUniform, InitialiserKind::HeNormal, InitialiserKind::Orthogonal] {
        println!("{kind} 4x3, seed 1");
        print!("{}", cmd_show_init(&InitialiserSpec::new(kind), 4, 3, 1)?);
        println!();
    }
    Ok(())
}
