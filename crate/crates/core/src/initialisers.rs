//! Weight initialisers.
//!
//! Weight matrices are fan-in × fan-out: a layer computes `y = x·W + b`, so
//! row `i` of `W` routes input feature `i` into the layer's units.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{qr_orthonormal, sample_normal, sample_uniform, Matrix, Rng};

/// Standard deviation used by [`InitialiserKind::RandomNormal`] unless configured.
pub const DEFAULT_RANDOM_STDDEV: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InitialiserKind {
    Straddled,
    Identity,
    RecurrentIdentity,
    GlorotUniform,
    GlorotNormal,
    HeNormal,
    HeUniform,
    Orthogonal,
    RandomNormal,
}

impl InitialiserKind {
    pub const ALL: [InitialiserKind; 9] = [
        InitialiserKind::Straddled,
        InitialiserKind::Identity,
        InitialiserKind::RecurrentIdentity,
        InitialiserKind::GlorotUniform,
        InitialiserKind::GlorotNormal,
        InitialiserKind::HeNormal,
        InitialiserKind::HeUniform,
        InitialiserKind::Orthogonal,
        InitialiserKind::RandomNormal,
    ];

    /// The eight initialisers benchmarked, in result-table order.
    pub const BENCHMARKED: [InitialiserKind; 8] = [
        InitialiserKind::Straddled,
        InitialiserKind::GlorotUniform,
        InitialiserKind::GlorotNormal,
        InitialiserKind::Identity,
        InitialiserKind::HeNormal,
        InitialiserKind::HeUniform,
        InitialiserKind::Orthogonal,
        InitialiserKind::RandomNormal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InitialiserKind::Straddled => "straddled",
            InitialiserKind::Identity => "identity",
            InitialiserKind::RecurrentIdentity => "recurrentidentity",
            InitialiserKind::GlorotUniform => "glorotuniform",
            InitialiserKind::GlorotNormal => "glorotnormal",
            InitialiserKind::HeNormal => "henormal",
            InitialiserKind::HeUniform => "heuniform",
            InitialiserKind::Orthogonal => "orthogonal",
            InitialiserKind::RandomNormal => "random",
        }
    }

    /// True when the weights do not depend on the generator.
    pub fn is_deterministic(self) -> bool {
        matches!(
            self,
            InitialiserKind::Straddled | InitialiserKind::Identity | InitialiserKind::RecurrentIdentity
        )
    }
}

impl fmt::Display for InitialiserKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitialiserKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InitialiserKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownInitialiser(s.to_string()))
    }
}

/// An initialiser together with its parameters.
///
/// In config files a spec is either a bare name (`"henormal"`) or an object
/// `{"kind": "random", "random_stddev": 1.0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialiserSpec {
    pub kind: InitialiserKind,
    pub random_stddev: f64,
}

impl InitialiserSpec {
    pub fn new(kind: InitialiserKind) -> Self {
        InitialiserSpec {
            kind,
            random_stddev: DEFAULT_RANDOM_STDDEV,
        }
    }

    pub fn random_normal(stddev: f64) -> Self {
        InitialiserSpec {
            kind: InitialiserKind::RandomNormal,
            random_stddev: stddev,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn benchmarked() -> Vec<InitialiserSpec> {
        InitialiserKind::BENCHMARKED.into_iter().map(Self::new).collect()
    }
}

impl From<InitialiserKind> for InitialiserSpec {
    fn from(kind: InitialiserKind) -> Self {
        InitialiserSpec::new(kind)
    }
}

impl FromStr for InitialiserSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse().map(InitialiserSpec::new)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SpecRepr {
    Name(String),
    Full {
        kind: String,
        #[serde(default)]
        random_stddev: Option<f64>,
    },
}

impl Serialize for InitialiserSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = if self.kind == InitialiserKind::RandomNormal
            && self.random_stddev != DEFAULT_RANDOM_STDDEV
        {
            SpecRepr::Full {
                kind: self.name().to_string(),
                random_stddev: Some(self.random_stddev),
            }
        } else {
            SpecRepr::Name(self.name().to_string())
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for InitialiserSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let (name, stddev) = match SpecRepr::deserialize(deserializer)? {
            SpecRepr::Name(name) => (name, None),
            SpecRepr::Full {
                kind,
                random_stddev,
            } => (kind, random_stddev),
        };
        let kind: InitialiserKind = name.parse().map_err(D::Error::custom)?;
        let random_stddev = stddev.unwrap_or(DEFAULT_RANDOM_STDDEV);
        if !(random_stddev.is_finite() && random_stddev > 0.0) {
            return Err(D::Error::custom(format!(
                "random_stddev must be > 0, got {random_stddev}"
            )));
        }
        Ok(InitialiserSpec {
            kind,
            random_stddev,
        })
    }
}

fn check_shape(m: usize, n: usize) {
    assert!(m >= 1 && n >= 1, "weight shape ({m}, {n}) has a zero dimension");
}

/// One 1 per row at column `row mod n`; the identity generalised to
/// rectangular shapes without zero rows.
pub fn straddled(m: usize, n: usize) -> Matrix {
    check_shape(m, n);
    let mut w = Matrix::zeros(m, n);
    for i in 0..m {
        w.set(i, i % n, 1.0);
    }
    w
}

/// Ones on the main diagonal up to `min(m, n)`, zeros elsewhere.
pub fn identity_padded(m: usize, n: usize) -> Matrix {
    check_shape(m, n);
    let mut w = Matrix::zeros(m, n);
    for i in 0..m.min(n) {
        w.set(i, i, 1.0);
    }
    w
}

/// The `n × n` identity tiled vertically as many whole times as fits,
/// remaining rows zero. With fewer rows than columns it fits no times and
/// the matrix is all zeros.
pub fn recurrent_identity(m: usize, n: usize) -> Matrix {
    check_shape(m, n);
    let mut w = Matrix::zeros(m, n);
    for i in 0..n * (m / n) {
        w.set(i, i % n, 1.0);
    }
    w
}

pub fn glorot_uniform(rng: &mut Rng, m: usize, n: usize) -> Result<Matrix> {
    let limit = (6.0 / (m + n) as f64).sqrt();
    sample_uniform(rng, m, n, -limit, limit)
}

pub fn glorot_normal(rng: &mut Rng, m: usize, n: usize) -> Result<Matrix> {
    sample_normal(rng, m, n, 0.0, (2.0 / (m + n) as f64).sqrt())
}

pub fn he_normal(rng: &mut Rng, m: usize, n: usize) -> Result<Matrix> {
    sample_normal(rng, m, n, 0.0, (2.0 / m as f64).sqrt())
}

pub fn he_uniform(rng: &mut Rng, m: usize, n: usize) -> Result<Matrix> {
    let limit = (6.0 / m as f64).sqrt();
    sample_uniform(rng, m, n, -limit, limit)
}

pub fn random_normal(rng: &mut Rng, m: usize, n: usize, stddev: f64) -> Result<Matrix> {
    sample_normal(rng, m, n, 0.0, stddev)
}

pub fn make_weights(spec: &InitialiserSpec, rng: &mut Rng, m: usize, n: usize) -> Result<Matrix> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "weight shape ({m}, {n}) has a zero dimension"
        )));
    }
    match spec.kind {
        InitialiserKind::Straddled => Ok(straddled(m, n)),
        InitialiserKind::Identity => Ok(identity_padded(m, n)),
        InitialiserKind::RecurrentIdentity => Ok(recurrent_identity(m, n)),
        InitialiserKind::GlorotUniform => glorot_uniform(rng, m, n),
        InitialiserKind::GlorotNormal => glorot_normal(rng, m, n),
        InitialiserKind::HeNormal => he_normal(rng, m, n),
        InitialiserKind::HeUniform => he_uniform(rng, m, n),
        InitialiserKind::Orthogonal => qr_orthonormal(rng, m, n),
        InitialiserKind::RandomNormal => random_normal(rng, m, n, spec.random_stddev),
    }
}

/// Column index of the single 1 in each row, or `None` for an all-zero row.
pub fn one_positions(w: &Matrix) -> Vec<Option<usize>> {
    (0..w.rows())
        .map(|r| w.row(r).iter().position(|&v| v == 1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{frobenius_norm, transpose};

    fn sample_stddev(m: &Matrix) -> f64 {
        let v = m.as_slice();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    #[test]
    fn straddled_figure_layouts() {
        let pos = |w: &Matrix| one_positions(w);
        assert_eq!(
            pos(&straddled(8, 3)),
            [0, 1, 2, 0, 1, 2, 0, 1].map(Some).to_vec()
        );
        assert_eq!(pos(&straddled(5, 3)), [0, 1, 2, 0, 1].map(Some).to_vec());

        let wide = straddled(3, 5);
        assert_eq!(pos(&wide), [0, 1, 2].map(Some).to_vec());
        for r in 0..3 {
            assert_eq!(wide.get(r, 3), 0.0);
            assert_eq!(wide.get(r, 4), 0.0);
        }
        for k in 1..8 {
            assert_eq!(straddled(k, k), Matrix::identity(k));
        }
    }

    #[test]
    fn identity_figure_layouts() {
        let tall = identity_padded(8, 3);
        assert_eq!(
            one_positions(&tall),
            vec![Some(0), Some(1), Some(2), None, None, None, None, None]
        );
        assert_eq!(identity_padded(3, 5), straddled(3, 5));
        assert_eq!(identity_padded(4, 4), Matrix::identity(4));
    }

    #[test]
    fn recurrent_identity_layouts() {
        assert_eq!(
            one_positions(&recurrent_identity(8, 3)),
            vec![Some(0), Some(1), Some(2), Some(0), Some(1), Some(2), None, None]
        );
        assert_eq!(recurrent_identity(6, 3), straddled(6, 3));
        let rec = recurrent_identity(5, 3);
        assert_eq!(one_positions(&rec)[3..], [None, None]);
        assert_eq!(one_positions(&straddled(5, 3))[3..], [Some(0), Some(1)]);
        assert_eq!(recurrent_identity(3, 5), Matrix::zeros(3, 5));
    }

    #[test]
    fn straddled_is_not_transpose_and_norms_differ() {
        let wide = straddled(3, 5);
        let tall = straddled(5, 3);
        assert_ne!(wide, transpose(&tall));
        assert_eq!(frobenius_norm(&wide), 3f64.sqrt());
        assert_eq!(frobenius_norm(&tall), 5f64.sqrt());
        let t = transpose(&tall);
        for (r, c) in [(0, 0), (1, 1), (2, 2), (0, 3), (1, 4)] {
            assert_eq!(t.get(r, c), 1.0);
        }
        assert_eq!(t.as_slice().iter().sum::<f64>(), 5.0);
    }

    #[test]
    fn glorot_uniform_limits() {
        let mut rng = Rng::new(1);
        let limit = (6.0f64 / 97.0).sqrt();
        assert!((limit - 0.248_708).abs() < 1e-6);
        let w = glorot_uniform(&mut rng, 64, 33).unwrap();
        assert!(w.as_slice().iter().all(|v| v.abs() < limit));
        let w = glorot_uniform(&mut rng, 1, 5).unwrap();
        assert!(w.as_slice().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn normal_initialiser_spreads() {
        let mut rng = Rng::new(2);
        // 64x33 has too few entries for a tight estimate, so stack draws.
        let target = (2.0f64 / 97.0).sqrt();
        assert!((target - 0.14359).abs() < 1e-5);
        let mut pooled = Vec::new();
        while pooled.len() < 100_000 {
            pooled.extend_from_slice(glorot_normal(&mut rng, 64, 33).unwrap().as_slice());
        }
        let pooled = Matrix::new(1, pooled.len(), pooled).unwrap();
        assert!((sample_stddev(&pooled) / target - 1.0).abs() < 0.05);

        let mut pooled = Vec::new();
        while pooled.len() < 100_000 {
            pooled.extend_from_slice(glorot_normal(&mut rng, 2, 2).unwrap().as_slice());
        }
        let pooled = Matrix::new(1, pooled.len(), pooled).unwrap();
        assert!((sample_stddev(&pooled) / 0.5f64.sqrt() - 1.0).abs() < 0.05);

        let w = he_normal(&mut rng, 100, 1000).unwrap();
        assert!((sample_stddev(&w) / 0.02f64.sqrt() - 1.0).abs() < 0.05);

        let w = random_normal(&mut rng, 400, 250, 0.05).unwrap();
        assert!((sample_stddev(&w) / 0.05 - 1.0).abs() < 0.1);
        assert!(random_normal(&mut rng, 3, 3, 0.0).is_err());
        assert!(random_normal(&mut rng, 3, 3, -0.05).is_err());
    }

    #[test]
    fn he_uniform_uses_fan_in_only() {
        let mut rng = Rng::new(3);
        for k in [1, 7, 100] {
            let w = he_uniform(&mut rng, 6, k).unwrap();
            assert!(w.as_slice().iter().all(|v| v.abs() < 1.0));
        }
        let w = he_uniform(&mut rng, 6, 10_000).unwrap();
        let max = w.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max > 0.99);
    }

    #[test]
    fn stochastic_initialisers_are_seeded() {
        for kind in InitialiserKind::ALL {
            let spec = InitialiserSpec::new(kind);
            let a = make_weights(&spec, &mut Rng::new(17), 9, 4).unwrap();
            let b = make_weights(&spec, &mut Rng::new(17), 9, 4).unwrap();
            assert_eq!(a, b, "{kind}");
            assert_eq!(a.shape(), (9, 4));
        }
    }

    #[test]
    fn names_round_trip() {
        for kind in InitialiserKind::ALL {
            assert_eq!(kind.name().parse::<InitialiserKind>().unwrap(), kind);
        }
        assert!(matches!(
            "xavier".parse::<InitialiserKind>(),
            Err(Error::UnknownInitialiser(_))
        ));
    }

    #[test]
    fn spec_serde_forms() {
        let specs: Vec<InitialiserSpec> =
            serde_json::from_str(r#"["straddled", {"kind": "random", "random_stddev": 1.0}, {"kind": "henormal"}]"#)
                .unwrap();
        assert_eq!(specs[0], InitialiserSpec::new(InitialiserKind::Straddled));
        assert_eq!(specs[1], InitialiserSpec::random_normal(1.0));
        assert_eq!(specs[2].kind, InitialiserKind::HeNormal);
        let back: Vec<InitialiserSpec> =
            serde_json::from_str(&serde_json::to_string(&specs).unwrap()).unwrap();
        assert_eq!(back, specs);
        assert!(serde_json::from_str::<InitialiserSpec>(r#""glorot""#).is_err());
        assert!(serde_json::from_str::<InitialiserSpec>(r#"{"kind":"random","random_stddev":0}"#).is_err());
    }

    #[test]
    fn zero_shape_is_an_error() {
        let spec = InitialiserSpec::new(InitialiserKind::HeNormal);
        assert!(make_weights(&spec, &mut Rng::new(0), 0, 3).is_err());
    }
}
