//! Dense autoencoder: ReLU hidden layers, sigmoid reconstruction, RMSE cost
//! and plain gradient descent.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::initialisers::{make_weights, InitialiserSpec};
use crate::numerics::{gemm, Matrix, Op, Rng};

/// Hidden layer widths of the benchmark autoencoder.
pub const DEFAULT_HIDDEN: [usize; 3] = [64, 33, 64];

/// Floor on the RMSE in the loss gradient, so exact reconstructions do not
/// divide by zero.
pub const GRADIENT_GUARD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Linear,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            // `f64::max` would turn NaN into 0 and hide divergence.
            Activation::Relu => {
                if z > 0.0 || z.is_nan() {
                    z
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => sigmoid(z),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    /// Layer with zero bias.
    pub fn new(weights: Matrix, activation: Activation) -> Self {
        let bias = vec![0.0; weights.cols()];
        DenseLayer {
            weights,
            bias,
            activation,
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }

    /// `x·W + b`.
    fn pre_activation(&self, x: &Matrix) -> Result<Matrix> {
        let mut z = gemm(x, Op::N, &self.weights, Op::N)?;
        let cols = z.cols();
        for row in z.as_mut_slice().chunks_exact_mut(cols) {
            for (v, b) in row.iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(z)
    }
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub input: Matrix,
    pub pre_activations: Vec<Matrix>,
    pub activations: Vec<Matrix>,
}

impl ForwardTrace {
    /// The reconstruction (output of the last layer).
    pub fn output(&self) -> &Matrix {
        self.activations.last().expect("trace of an empty network")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Training batch size: the whole set at once, or fixed-size mini-batches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchSize {
    Full,
    Rows(usize),
}

impl fmt::Display for BatchSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BatchSize::Full => f.write_str("full"),
            BatchSize::Rows(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for BatchSize {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BatchSize::Full => serializer.serialize_str("full"),
            BatchSize::Rows(n) => serializer.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for BatchSize {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Rows(u64),
            Word(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Rows(0) => Err(D::Error::custom("batch_size must be at least 1")),
            Repr::Rows(n) => Ok(BatchSize::Rows(n as usize)),
            Repr::Word(w) if w == "full" => Ok(BatchSize::Full),
            Repr::Word(w) => Err(D::Error::custom(format!(
                "batch_size must be a positive integer or \"full\", got \"{w}\""
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Autoencoder {
    layers: Vec<DenseLayer>,
}

impl Autoencoder {
    /// Checks that layer widths chain and that the output width equals the
    /// input width.
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        let (first, last) = match (layers.first(), layers.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::InvalidNetwork("no layers".into())),
        };
        for (k, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.fan_out() {
                return Err(Error::InvalidNetwork(format!(
                    "layer {k}: bias length {} != fan-out {}",
                    layer.bias.len(),
                    layer.fan_out()
                )));
            }
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(Error::InvalidNetwork(format!(
                    "layer {k} fan-out {} != layer {} fan-in {}",
                    pair[0].fan_out(),
                    k + 1,
                    pair[1].fan_in()
                )));
            }
        }
        if first.fan_in() != last.fan_out() {
            return Err(Error::InvalidNetwork(format!(
                "input width {} != output width {}",
                first.fan_in(),
                last.fan_out()
            )));
        }
        Ok(Autoencoder { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn forward(&self, x: &Matrix) -> Result<ForwardTrace> {
        self.forward_owned(x.clone())
    }

    pub fn forward_owned(&self, x: Matrix) -> Result<ForwardTrace> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                op: "forward",
                left: x.shape(),
                right: (self.input_dim(), self.layers[0].fan_out()),
            });
        }
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut activations: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let z = layer.pre_activation(activations.last().unwrap_or(&x))?;
            let a = z.map(|v| layer.activation.apply(v));
            pre_activations.push(z);
            activations.push(a);
        }
        Ok(ForwardTrace {
            input: x,
            pre_activations,
            activations,
        })
    }

    /// Exact gradient of the RMSE between the traced output and `target`.
    pub fn backward(&self, trace: &ForwardTrace, target: &Matrix) -> Result<Gradients> {
        let yhat = trace.output();
        let loss = rmse(yhat, target)?;
        let n = (yhat.rows() * yhat.cols()) as f64;
        let scale = 1.0 / (n * loss.max(GRADIENT_GUARD));
        let mut delta = Matrix::from_raw(
            yhat.rows(),
            yhat.cols(),
            yhat.as_slice()
                .iter()
                .zip(target.as_slice())
                .map(|(p, t)| (p - t) * scale)
                .collect(),
        );

        let depth = self.layers.len();
        let mut weights = Vec::with_capacity(depth);
        let mut biases = Vec::with_capacity(depth);
        for k in (0..depth).rev() {
            let layer = &self.layers[k];
            // dL/dz = dL/da ⊙ f'(z)
            let z = trace.pre_activations[k].as_slice();
            let a = trace.activations[k].as_slice();
            for (i, d) in delta.as_mut_slice().iter_mut().enumerate() {
                *d *= layer.activation.derivative(z[i], a[i]);
            }
            let prev = if k == 0 {
                &trace.input
            } else {
                &trace.activations[k - 1]
            };
            weights.push(gemm(prev, Op::T, &delta, Op::N)?);
            let mut bias_grad = vec![0.0; delta.cols()];
            for row in delta.as_slice().chunks_exact(delta.cols()) {
                for (g, v) in bias_grad.iter_mut().zip(row) {
                    *g += v;
                }
            }
            biases.push(bias_grad);
            if k > 0 {
                delta = gemm(&delta, Op::N, &layer.weights, Op::T)?;
            }
        }
        weights.reverse();
        biases.reverse();
        Ok(Gradients { weights, biases })
    }

    /// `θ ← θ − lr·∇θ` for every weight and bias.
    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        if !(lr.is_finite() && lr > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be > 0, got {lr}"
            )));
        }
        if grads.weights.len() != self.layers.len() || grads.biases.len() != self.layers.len() {
            return Err(Error::InvalidArgument("gradient depth does not match network".into()));
        }
        for ((layer, gw), gb) in self.layers.iter_mut().zip(&grads.weights).zip(&grads.biases) {
            if gw.shape() != layer.weights.shape() || gb.len() != layer.bias.len() {
                return Err(Error::DimensionMismatch {
                    op: "sgd_step",
                    left: layer.weights.shape(),
                    right: gw.shape(),
                });
            }
            for (w, g) in layer.weights.as_mut_slice().iter_mut().zip(gw.as_slice()) {
                *w -= lr * g;
            }
            for (b, g) in layer.bias.iter_mut().zip(gb) {
                *b -= lr * g;
            }
        }
        Ok(())
    }

    /// One pass over `train` with the input as target. Mini-batches are drawn
    /// from a fresh shuffle of the rows; the last batch may be short. Full
    /// batch mode does a single step on the rows in stored order.
    pub fn train_epoch(&mut self, train: &Matrix, batch: BatchSize, lr: f64, rng: &mut Rng) -> Result<()> {
        match batch {
            BatchSize::Full => {
                let trace = self.forward(train)?;
                let grads = self.backward(&trace, train)?;
                self.sgd_step(&grads, lr)
            }
            BatchSize::Rows(size) => {
                if size == 0 || size > train.rows() {
                    return Err(Error::InvalidArgument(format!(
                        "batch size {size} must be in 1..={}",
                        train.rows()
                    )));
                }
                let mut order: Vec<usize> = (0..train.rows()).collect();
                rng.shuffle(&mut order);
                for chunk in order.chunks(size) {
                    let batch = train.select_rows(chunk);
                    let trace = self.forward(&batch)?;
                    let grads = self.backward(&trace, &batch)?;
                    self.sgd_step(&grads, lr)?;
                }
                Ok(())
            }
        }
    }

    /// Reconstruction RMSE of `x`.
    pub fn evaluate(&self, x: &Matrix) -> Result<f64> {
        rmse(self.forward(x)?.output(), x)
    }
}

/// Number of gradient steps one epoch takes.
pub fn steps_per_epoch(rows: usize, batch: BatchSize) -> usize {
    match batch {
        BatchSize::Full => 1,
        BatchSize::Rows(size) => rows.div_ceil(size),
    }
}

/// Builds the benchmark autoencoder: ReLU hidden layers of the given widths
/// and a sigmoid output of width `input_dim`, weights from `spec`, zero
/// biases. Layers draw their weights from `rng` in order.
pub fn build_autoencoder(
    input_dim: usize,
    hidden: &[usize],
    spec: &InitialiserSpec,
    rng: &mut Rng,
) -> Result<Autoencoder> {
    if input_dim == 0 {
        return Err(Error::InvalidNetwork("input_dim must be at least 1".into()));
    }
    if hidden.contains(&0) {
        return Err(Error::InvalidNetwork(format!("zero-width hidden layer in {hidden:?}")));
    }
    let widths: Vec<usize> = std::iter::once(input_dim)
        .chain(hidden.iter().copied())
        .chain(std::iter::once(input_dim))
        .collect();
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(k, pair)| {
            let activation = if k + 2 == widths.len() {
                Activation::Sigmoid
            } else {
                Activation::Relu
            };
            Ok(DenseLayer::new(make_weights(spec, rng, pair[0], pair[1])?, activation))
        })
        .collect::<Result<Vec<_>>>()?;
    Autoencoder::new(layers)
}

/// Root mean squared error over all entries jointly.
pub fn rmse(yhat: &Matrix, y: &Matrix) -> Result<f64> {
    if yhat.shape() != y.shape() {
        return Err(Error::DimensionMismatch {
            op: "rmse",
            left: yhat.shape(),
            right: y.shape(),
        });
    }
    let n = yhat.as_slice().len() as f64;
    let sse: f64 = yhat
        .as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(p, t)| (p - t).powi(2))
        .sum();
    Ok((sse / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initialisers::InitialiserKind;
    use crate::numerics::sample_uniform;

    #[test]
    fn benchmark_shapes() {
        let spec = InitialiserSpec::new(InitialiserKind::Straddled);
        let shapes = |d, hidden: &[usize]| {
            build_autoencoder(d, hidden, &spec, &mut Rng::new(0))
                .unwrap()
                .layers()
                .iter()
                .map(|l| l.weights.shape())
                .collect::<Vec<_>>()
        };
        assert_eq!(shapes(100, &DEFAULT_HIDDEN), [(100, 64), (64, 33), (33, 64), (64, 100)]);
        assert_eq!(shapes(784, &DEFAULT_HIDDEN)[3], (64, 784));
        assert_eq!(shapes(4, &[4, 3, 4]), [(4, 4), (4, 3), (3, 4), (4, 4)]);

        let model = build_autoencoder(10, &DEFAULT_HIDDEN, &spec, &mut Rng::new(0)).unwrap();
        let acts: Vec<_> = model.layers().iter().map(|l| l.activation).collect();
        use Activation::*;
        assert_eq!(acts, [Relu, Relu, Relu, Sigmoid]);
        assert!(model.layers().iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn invalid_networks() {
        let l = |m, n| DenseLayer::new(Matrix::zeros(m, n), Activation::Relu);
        assert!(Autoencoder::new(vec![]).is_err());
        assert!(Autoencoder::new(vec![l(3, 2), l(3, 3)]).is_err());
        assert!(Autoencoder::new(vec![l(3, 2), l(2, 4)]).is_err());
        let mut bad = l(2, 2);
        bad.bias.pop();
        assert!(Autoencoder::new(vec![bad]).is_err());
        assert!(build_autoencoder(0, &[2], &InitialiserKind::Straddled.into(), &mut Rng::new(0)).is_err());
    }

    #[test]
    fn zero_weights_give_half() {
        let layers = vec![
            DenseLayer::new(Matrix::zeros(3, 2), Activation::Relu),
            DenseLayer::new(Matrix::zeros(2, 3), Activation::Sigmoid),
        ];
        let model = Autoencoder::new(layers).unwrap();
        let x = Matrix::from_rows(&[[0.1, 0.7, 1.0], [0.0, 0.3, 0.2]]).unwrap();
        let trace = model.forward(&x).unwrap();
        assert!(trace.output().as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let model = build_autoencoder(5, &[3], &InitialiserKind::Straddled.into(), &mut Rng::new(0)).unwrap();
        assert!(matches!(
            model.forward(&Matrix::zeros(2, 4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rmse_values() {
        let y = Matrix::from_rows(&[[0.2, 0.4], [0.6, 0.8]]).unwrap();
        assert_eq!(rmse(&y, &y).unwrap(), 0.0);
        let shifted = y.map(|v| v - 0.25);
        assert!((rmse(&shifted, &y).unwrap() - 0.25).abs() < 1e-15);
        let a = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!((rmse(&a, &b).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(rmse(&a, &y).is_err());
    }

    #[test]
    fn exact_reconstruction_has_zero_gradient() {
        let d = 4;
        let layers = (0..2)
            .map(|_| DenseLayer::new(Matrix::identity(d), Activation::Relu))
            .collect();
        let model = Autoencoder::new(layers).unwrap();
        let x = sample_uniform(&mut Rng::new(1), 5, d, 0.0, 1.0).unwrap();
        let trace = model.forward(&x).unwrap();
        let grads = model.backward(&trace, &x).unwrap();
        for g in &grads.weights {
            assert!(g.as_slice().iter().all(|&v| v == 0.0));
        }
        for g in &grads.biases {
            assert!(g.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn single_linear_unit_gradient_sign() {
        // Loss |w·x − y| for one entry: dL/dw = sign(w·x − y)·x.
        for (w, x, y) in [(0.5, 2.0, 0.3), (0.5, 2.0, 3.0), (-1.0, 0.5, 0.0), (2.0, -1.5, 1.0)] {
            let layer = DenseLayer::new(Matrix::new(1, 1, vec![w]).unwrap(), Activation::Linear);
            let model = Autoencoder::new(vec![layer]).unwrap();
            let input = Matrix::new(1, 1, vec![x]).unwrap();
            let target = Matrix::new(1, 1, vec![y]).unwrap();
            let trace = model.forward(&input).unwrap();
            let grads = model.backward(&trace, &target).unwrap();
            let expected = (w * x - y).signum() * x;
            assert!((grads.weights[0].get(0, 0) - expected).abs() < 1e-12);
            assert!((grads.biases[0][0] - (w * x - y).signum()).abs() < 1e-12);
        }
    }

    #[test]
    fn sgd_step_rules() {
        let layer = DenseLayer::new(Matrix::new(1, 1, vec![0.0]).unwrap(), Activation::Linear);
        let mut model = Autoencoder::new(vec![layer]).unwrap();
        // Gradient of ½(w − 3)² at w = 0 is −3.
        let grads = Gradients {
            weights: vec![Matrix::new(1, 1, vec![-3.0]).unwrap()],
            biases: vec![vec![0.0]],
        };
        model.sgd_step(&grads, 0.1).unwrap();
        assert!((model.layers()[0].weights.get(0, 0) - 0.3).abs() < 1e-15);

        let before = model.clone();
        let zero = Gradients {
            weights: vec![Matrix::zeros(1, 1)],
            biases: vec![vec![0.0]],
        };
        model.sgd_step(&zero, 0.5).unwrap();
        assert_eq!(model, before);
        assert!(model.sgd_step(&zero, 0.0).is_err());
        assert!(model.sgd_step(&zero, -0.1).is_err());
    }

    #[test]
    fn steps_per_epoch_counts() {
        assert_eq!(steps_per_epoch(5000, BatchSize::Rows(256)), 20);
        assert_eq!(5000 - 19 * 256, 136);
        assert_eq!(steps_per_epoch(5000, BatchSize::Full), 1);
        assert_eq!(steps_per_epoch(512, BatchSize::Rows(256)), 2);
    }

    #[test]
    fn full_batch_epoch_is_one_step() {
        let spec = InitialiserSpec::new(InitialiserKind::GlorotUniform);
        let x = sample_uniform(&mut Rng::new(2), 12, 6, 0.0, 1.0).unwrap();
        let mut a = build_autoencoder(6, &[4, 3, 4], &spec, &mut Rng::new(3)).unwrap();
        let mut b = a.clone();
        a.train_epoch(&x, BatchSize::Full, 0.1, &mut Rng::new(0)).unwrap();
        let grads = b.backward(&b.forward(&x).unwrap(), &x).unwrap();
        b.sgd_step(&grads, 0.1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_size_validation() {
        let spec = InitialiserSpec::new(InitialiserKind::Straddled);
        let x = sample_uniform(&mut Rng::new(2), 5, 3, 0.0, 1.0).unwrap();
        let mut m = build_autoencoder(3, &[2], &spec, &mut Rng::new(0)).unwrap();
        assert!(m.train_epoch(&x, BatchSize::Rows(6), 0.1, &mut Rng::new(0)).is_err());
        assert!(m.train_epoch(&x, BatchSize::Rows(5), 0.1, &mut Rng::new(0)).is_ok());
    }

    #[test]
    fn batch_size_serde() {
        assert_eq!(serde_json::from_str::<BatchSize>("\"full\"").unwrap(), BatchSize::Full);
        assert_eq!(serde_json::from_str::<BatchSize>("256").unwrap(), BatchSize::Rows(256));
        assert!(serde_json::from_str::<BatchSize>("0").is_err());
        assert!(serde_json::from_str::<BatchSize>("\"half\"").is_err());
        assert_eq!(serde_json::to_string(&BatchSize::Full).unwrap(), "\"full\"");
    }

    #[test]
    fn stable_sigmoid_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
        assert_eq!(sigmoid(800.0), 1.0);
    }
}
