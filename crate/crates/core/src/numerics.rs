//! Dense row-major matrices and seeded sampling.
//!
//! Everything is `f64`. Matrix products go through `matrixmultiply`'s
//! strided `dgemm`, which lets the backward pass multiply by transposes
//! without materialising them.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the generator behind [`Rng`], recorded in experiment metadata.
pub const PRNG_NAME: &str = "ChaCha8 (rand_chacha 0.3, SeedableRng::seed_from_u64)";

/// Dense row-major matrix of 64-bit reals.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting empty shapes,
    /// length mismatches and non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "shape ({rows}, {cols}) has a zero dimension"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "expected {} values for shape ({rows}, {cols}), got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite value {} at ({}, {})",
                data[pos],
                pos / cols,
                pos % cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::InvalidMatrix(format!(
                    "ragged rows: row 0 has {cols} values, row {i} has {}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Matrix::new(rows.len(), cols, data)
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "zero-sized matrix ({rows}, {cols})");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Unchecked constructor for results of internal arithmetic.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// Gathers the given rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        assert!(!indices.is_empty(), "select_rows with no indices");
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix::from_raw(indices.len(), self.cols, data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix::from_raw(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// Whether an operand is used as stored or transposed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Op {
    N,
    T,
}

/// `op(a) · op(b)` through strided dgemm.
pub(crate) fn gemm(a: &Matrix, op_a: Op, b: &Matrix, op_b: Op) -> Result<Matrix> {
    let (m, k, rsa, csa) = match op_a {
        Op::N => (a.rows, a.cols, a.cols as isize, 1),
        Op::T => (a.cols, a.rows, 1, a.cols as isize),
    };
    let (k2, n, rsb, csb) = match op_b {
        Op::N => (b.rows, b.cols, b.cols as isize, 1),
        Op::T => (b.cols, b.rows, 1, b.cols as isize),
    };
    if k != k2 {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            left: (m, k),
            right: (k2, n),
        });
    }
    let mut out = vec![0.0; m * n];
    // SAFETY: the pointers cover `a.data`, `b.data` and `out`, whose lengths
    // match the (m, k), (k, n) and (m, n) extents described by the strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            0.0,
            out.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    Ok(Matrix::from_raw(m, n, out))
}

/// Standard matrix product `a · b`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    gemm(a, Op::N, b, Op::N)
}

pub fn transpose(a: &Matrix) -> Matrix {
    let mut data = Vec::with_capacity(a.data.len());
    for c in 0..a.cols {
        for r in 0..a.rows {
            data.push(a.data[r * a.cols + c]);
        }
    }
    Matrix::from_raw(a.cols, a.rows, data)
}

pub fn frobenius_norm(a: &Matrix) -> f64 {
    a.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Seeded pseudo-random generator used for every stochastic step.
///
/// Gaussian draws use the Box–Muller transform, so each pair of normals
/// consumes exactly two uniforms and sample counts stay reproducible.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
    seed: u64,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            inner: ChaCha8Rng::seed_from_u64(seed),
            seed,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw from `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u lies in (0, 1], keeping the log finite.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!(
            "shape ({rows}, {cols}) has a zero dimension"
        )));
    }
    Ok(())
}

/// I.i.d. entries uniform on `[lo, hi)`.
pub fn sample_uniform(rng: &mut Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Result<Matrix> {
    check_shape(rows, cols)?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "uniform bounds require lo < hi, got [{lo}, {hi})"
        )));
    }
    let data = (0..rows * cols)
        .map(|_| loop {
            let v = lo + (hi - lo) * rng.next_f64();
            // Rounding can land exactly on `hi`; redraw.
            if v < hi {
                break v;
            }
        })
        .collect();
    Ok(Matrix::from_raw(rows, cols, data))
}

/// I.i.d. Gaussian entries with the given mean and standard deviation.
pub fn sample_normal(rng: &mut Rng, rows: usize, cols: usize, mean: f64, stddev: f64) -> Result<Matrix> {
    check_shape(rows, cols)?;
    if !(stddev.is_finite() && stddev > 0.0 && mean.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "normal distribution requires finite mean and stddev > 0, got N({mean}, {stddev})"
        )));
    }
    let data = (0..rows * cols)
        .map(|_| mean + stddev * rng.standard_normal())
        .collect();
    Ok(Matrix::from_raw(rows, cols, data))
}

/// Householder QR of a tall matrix (`rows >= cols`).
///
/// Returns the thin orthogonal factor (rows × cols) and the diagonal of R,
/// or `None` when a column is numerically zero.
pub(crate) fn householder_qr(a: &Matrix) -> Option<(Matrix, Vec<f64>)> {
    let (m, n) = a.shape();
    assert!(m >= n, "householder_qr expects a tall matrix");
    let mut work = a.data.clone();
    let scale = frobenius_norm(a).max(f64::MIN_POSITIVE);
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);

    for k in 0..n {
        let norm = (k..m).map(|i| work[i * n + k].powi(2)).sum::<f64>().sqrt();
        if norm <= 1e-12 * scale {
            return None;
        }
        let x0 = work[k * n + k];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| work[i * n + k]).collect();
        v[0] -= alpha;
        let v_norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= v_norm;
        }
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * work[i * n + j]).sum();
            for i in k..m {
                work[i * n + j] -= 2.0 * v[i - k] * dot;
            }
        }
        diag.push(alpha);
        reflectors.push(v);
    }

    // Accumulate Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I.
    let mut q = vec![0.0; m * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    for (k, v) in reflectors.iter().enumerate().rev() {
        for j in 0..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * q[i * n + j]).sum();
            for i in k..m {
                q[i * n + j] -= 2.0 * v[i - k] * dot;
            }
        }
    }
    Some((Matrix::from_raw(m, n, q), diag))
}

/// Random matrix with orthonormal columns (rows ≥ cols) or rows (rows < cols),
/// from the sign-corrected QR factorisation of a Gaussian draw.
pub fn qr_orthonormal(rng: &mut Rng, rows: usize, cols: usize) -> Result<Matrix> {
    check_shape(rows, cols)?;
    let (tall, thin) = (rows.max(cols), rows.min(cols));
    loop {
        let draw = sample_normal(rng, tall, thin, 0.0, 1.0)?;
        let Some((mut q, diag)) = householder_qr(&draw) else {
            continue;
        };
        for (j, r) in diag.iter().enumerate() {
            if *r < 0.0 {
                for i in 0..tall {
                    q.data[i * thin + j] = -q.data[i * thin + j];
                }
            }
        }
        return Ok(if rows < cols { transpose(&q) } else { q });
    }
}
