//! Central finite-difference checks of the analytic gradients.

use crate::error::Result;
use crate::network::{rmse, Autoencoder, Gradients};
use crate::numerics::Matrix;

/// Largest and mean relative error over every parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    pub mean_relative_error: f64,
    pub parameters: usize,
}

/// `|a − n| / max(|a| + |n|, floor)`; the floor keeps parameters whose
/// gradient is (numerically) zero from dividing by nothing.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-7)
}

fn loss(model: &Autoencoder, x: &Matrix) -> Result<f64> {
    rmse(model.forward(x)?.output(), x)
}

/// Gradients of the reconstruction RMSE by central differences with step `h`.
pub fn numerical_gradients(model: &Autoencoder, x: &Matrix, h: f64) -> Result<Gradients> {
    let mut probe = model.clone();
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for k in 0..model.layers().len() {
        let mut gw = model.layers()[k].weights.clone();
        for i in 0..gw.as_slice().len() {
            let orig = probe.layers()[k].weights.as_slice()[i];
            probe.layers_mut()[k].weights.as_mut_slice()[i] = orig + h;
            let up = loss(&probe, x)?;
            probe.layers_mut()[k].weights.as_mut_slice()[i] = orig - h;
            let down = loss(&probe, x)?;
            probe.layers_mut()[k].weights.as_mut_slice()[i] = orig;
            gw.as_mut_slice()[i] = (up - down) / (2.0 * h);
        }
        let mut gb = vec![0.0; model.layers()[k].bias.len()];
        for (j, g) in gb.iter_mut().enumerate() {
            let orig = probe.layers()[k].bias[j];
            probe.layers_mut()[k].bias[j] = orig + h;
            let up = loss(&probe, x)?;
            probe.layers_mut()[k].bias[j] = orig - h;
            let down = loss(&probe, x)?;
            probe.layers_mut()[k].bias[j] = orig;
            *g = (up - down) / (2.0 * h);
        }
        weights.push(gw);
        biases.push(gb);
    }
    Ok(Gradients { weights, biases })
}

/// Compares backprop against central differences on `x`.
pub fn check_gradients(model: &Autoencoder, x: &Matrix, h: f64) -> Result<GradCheck> {
    let analytic = model.backward(&model.forward(x)?, x)?;
    let numeric = numerical_gradients(model, x, h)?;
    let pairs = analytic
        .weights
        .iter()
        .zip(&numeric.weights)
        .flat_map(|(a, n)| a.as_slice().iter().copied().zip(n.as_slice().iter().copied()))
        .chain(
            analytic
                .biases
                .iter()
                .zip(&numeric.biases)
                .flat_map(|(a, n)| a.iter().copied().zip(n.iter().copied())),
        );
    let (mut max, mut sum, mut count) = (0.0f64, 0.0, 0usize);
    for (a, n) in pairs {
        let e = relative_error(a, n);
        max = max.max(e);
        sum += e;
        count += 1;
    }
    Ok(GradCheck {
        max_relative_error: max,
        mean_relative_error: sum / count as f64,
        parameters: count,
    })
}
