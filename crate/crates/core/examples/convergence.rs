//! Convergence detection and the one-tailed Welch test on hand-made loss
//! curves.
//!
//! ```text
//! cargo run --example convergence
//! ```

use straddled::analysis::{detect_convergence, settling_epoch, welch_test};

fn main() -> straddled::Result<()> {
    let curves: [(&str, Vec<f64>, f64, usize); 3] = [
        ("plateau", vec![1.0, 0.5, 0.3, 0.29, 0.295, 0.291, 0.292], 0.01, 3),
        ("still falling", vec![1.0, 0.9, 0.8, 0.7, 0.6], 0.01, 2),
        ("flat", vec![0.2; 4], 0.0, 3),
    ];
    for (name, series, eps, alpha) in &curves {
        let result = detect_convergence(series, *eps, *alpha)?;
        match result.epoch {
            Some(t) => println!("{name:<14} eps={eps} alpha={alpha}: converged at epoch {t} (loss {})", series[t]),
            None => println!("{name:<14} eps={eps} alpha={alpha}: not converged"),
        }
    }

    let decay: Vec<f64> = (0..200).map(|e| 0.1 + 0.5 * (-(e as f64) / 20.0).exp()).collect();
    println!(
        "\nexponential decay settles within 0.005 of its final loss at epoch {:?}",
        settling_epoch(&decay, 0.005)
    );

    let ours = [0.101, 0.098, 0.097, 0.1, 0.099];
    let theirs = [0.112, 0.104, 0.118, 0.109, 0.107];
    let w = welch_test(&ours, &theirs)?;
    println!("\nWelch t = {:.4}, df = {:.3}, one-tailed p = {:.3e}", w.t, w.df, w.p_value);
    println!("reverse direction p = {:.6}", welch_test(&theirs, &ours)?.p_value);
    Ok(())
}
