//! Dataset loading, synthesis, scaling and splitting.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{matmul, sample_uniform, Matrix, Rng};

/// Magic number of an IDX file holding unsigned-byte 3-D data (images).
pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// Records × features.
    pub features: Matrix,
    /// Per-column minimum seen by [`minmax_scale`], when scaled.
    pub feature_mins: Option<Vec<f64>>,
    pub feature_maxs: Option<Vec<f64>>,
    /// Free-form provenance (generator parameters, source files, warnings).
    pub metadata: Value,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Matrix) -> Self {
        Dataset {
            name: name.into(),
            features,
            feature_mins: None,
            feature_maxs: None,
            metadata: Value::Null,
        }
    }

    pub fn records(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Keeps only the first `n` records.
    pub fn truncate(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("cannot truncate a dataset to zero records".into()));
        }
        if n < self.records() {
            let idx: Vec<usize> = (0..n).collect();
            self.features = self.features.select_rows(&idx);
        }
        Ok(self)
    }
}

/// SHA-256 of a matrix's shape and little-endian values, as lowercase hex.
pub fn matrix_checksum(m: &Matrix) -> String {
    let mut h = Sha256::new();
    h.update((m.rows() as u64).to_le_bytes());
    h.update((m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub records: usize,
    pub latent_dim: usize,
    pub features: usize,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            records: 5000,
            latent_dim: 20,
            features: 100,
        }
    }
}

impl SyntheticParams {
    /// Column counts of the (linear, product, sine, square) blocks.
    ///
    /// Half the features are linear; of the rest, three fifths are pairwise
    /// products and the remainder is split between sines and squares. The
    /// default 100 features give 50/30/10/10.
    pub fn block_sizes(&self) -> (usize, usize, usize, usize) {
        let linear = self.features / 2;
        let rest = self.features - linear;
        let products = rest * 3 / 5;
        let sines = (rest - products) / 2;
        (linear, products, sines, rest - products - sines)
    }
}

/// A synthetic dataset together with the hidden quantities that produced it.
#[derive(Clone, Debug)]
pub struct SyntheticSample {
    pub dataset: Dataset,
    /// Records × latent_dim draws from U[0, 1).
    pub latent: Matrix,
    /// latent_dim × linear-block mixing matrix, entries from U[−1, 1).
    pub mixing: Matrix,
    pub product_pairs: Vec<(usize, usize)>,
    pub sine_indices: Vec<usize>,
    pub square_indices: Vec<usize>,
}

/// Synthetic records mixing linear and non-linear functions of a uniform
/// latent vector.
///
/// Generator layout (default sizes in brackets):
/// - linear block [50]: `z·A` with `A` fixed per seed;
/// - product block [30]: `z_i·z_j` over fixed distinct index pairs;
/// - sine block [10]: `sin(2π z_i)`;
/// - square block [10]: `z_i²`.
///
/// Draw order from `rng`: mixing matrix, pairs, sine indices, square
/// indices, then the latent matrix row by row.
pub fn generate_synthetic(rng: &mut Rng, params: SyntheticParams) -> Result<Dataset> {
    generate_synthetic_with_latent(rng, params).map(|s| s.dataset)
}

pub fn generate_synthetic_with_latent(rng: &mut Rng, params: SyntheticParams) -> Result<SyntheticSample> {
    let SyntheticParams {
        records,
        latent_dim,
        features,
    } = params;
    if records == 0 || latent_dim == 0 {
        return Err(Error::InvalidArgument("records and latent_dim must be positive".into()));
    }
    if features < latent_dim || features < 2 {
        return Err(Error::InvalidArgument(format!(
            "features ({features}) must be at least latent_dim ({latent_dim}) and at least 2"
        )));
    }
    let (n_lin, n_prod, n_sin, n_sq) = params.block_sizes();
    let seed = rng.seed();

    let mixing = sample_uniform(rng, latent_dim, n_lin, -1.0, 1.0)?;

    let all_pairs: Vec<(usize, usize)> = (0..latent_dim)
        .flat_map(|i| (i + 1..latent_dim).map(move |j| (i, j)))
        .collect();
    let product_pairs: Vec<(usize, usize)> = if all_pairs.is_empty() {
        (0..n_prod).map(|_| (0, 0)).collect()
    } else {
        let mut shuffled = all_pairs.clone();
        rng.shuffle(&mut shuffled);
        shuffled.into_iter().cycle().take(n_prod).collect()
    };
    let mut pick = |count: usize| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..latent_dim).collect();
        rng.shuffle(&mut idx);
        idx.into_iter().cycle().take(count).collect()
    };
    let sine_indices = pick(n_sin);
    let square_indices = pick(n_sq);

    let latent = sample_uniform(rng, records, latent_dim, 0.0, 1.0)?;
    let linear = matmul(&latent, &mixing)?;

    let mut data = Vec::with_capacity(records * features);
    for r in 0..records {
        let z = latent.row(r);
        data.extend_from_slice(linear.row(r));
        data.extend(product_pairs.iter().map(|&(i, j)| z[i] * z[j]));
        data.extend(sine_indices.iter().map(|&i| (2.0 * std::f64::consts::PI * z[i]).sin()));
        data.extend(square_indices.iter().map(|&i| z[i] * z[i]));
    }
    let mut dataset = Dataset::new("synthetic", Matrix::new(records, features, data)?);
    dataset.metadata = json!({
        "generator": "latent-mixture-v1",
        "seed": seed,
        "records": records,
        "latent_dim": latent_dim,
        "features": features,
        "blocks": {"linear": n_lin, "products": n_prod, "sines": n_sin, "squares": n_sq},
        "product_pairs": product_pairs,
        "sine_indices": sine_indices,
        "square_indices": square_indices,
    });
    Ok(SyntheticSample {
        dataset,
        latent,
        mixing,
        product_pairs,
        sine_indices,
        square_indices,
    })
}

/// Parses IDX image bytes (magic `0x00000803`, big-endian counts, unsigned
/// bytes), flattening each image to one row scaled by 1/255.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<Dataset> {
    let word = |k: usize| -> Result<u32> {
        bytes
            .get(4 * k..4 * k + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| Error::format(path, "truncated IDX header"))
    };
    let magic = word(0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::format(
            path,
            format!("bad IDX magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}"),
        ));
    }
    let (count, rows, cols) = (word(1)? as usize, word(2)? as usize, word(3)? as usize);
    let dim = rows * cols;
    if count == 0 || dim == 0 {
        return Err(Error::format(path, format!("empty IDX payload ({count} x {rows} x {cols})")));
    }
    let body = &bytes[16..];
    if body.len() < count * dim {
        return Err(Error::format(
            path,
            format!("truncated IDX data: expected {} bytes, found {}", count * dim, body.len()),
        ));
    }
    let data = body[..count * dim].iter().map(|&b| f64::from(b) / 255.0).collect();
    let mut dataset = Dataset::new("mnist", Matrix::new(count, dim, data)?);
    let mut meta = json!({"source": path.display().to_string(), "image_rows": rows, "image_cols": cols});
    if (rows, cols) != (28, 28) {
        let warning = format!("images are {rows}x{cols}, not 28x28; using actual dimensions");
        log::warn!("{}: {warning}", path.display());
        meta["warning"] = Value::String(warning);
    }
    dataset.metadata = meta;
    Ok(dataset)
}

pub fn load_mnist_idx(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_idx_images(&bytes, path)
}

/// Serialises rows of values in `[0, 1]` as IDX image bytes, rounding
/// `v·255` to the nearest byte.
pub fn write_idx_images(features: &Matrix, image_rows: usize, image_cols: usize) -> Result<Vec<u8>> {
    if image_rows * image_cols != features.cols() {
        return Err(Error::InvalidArgument(format!(
            "{image_rows}x{image_cols} images do not match {} columns",
            features.cols()
        )));
    }
    let mut out = Vec::with_capacity(16 + features.as_slice().len());
    for word in [
        IDX_IMAGES_MAGIC,
        features.rows() as u32,
        image_rows as u32,
        image_cols as u32,
    ] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    out.extend(
        features
            .as_slice()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    Ok(out)
}

/// Reads a headed, comma-separated numeric table, dropping the named columns.
pub fn load_csv(path: impl AsRef<Path>, drop_columns: &[String]) -> Result<Dataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    for name in drop_columns {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::format(path, format!("column `{name}` to drop is not in the header")));
        }
    }
    let keep: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !drop_columns.iter().any(|d| d == h))
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(Error::format(path, "no feature columns left after dropping"));
    }

    let mut data = Vec::new();
    let mut records = 0;
    for (r, record) in reader.records().enumerate() {
        // Data rows are numbered from 1; the header is row 0.
        let row = r + 1;
        let record = record.map_err(|e| Error::format(path, format!("row {row}: {e}")))?;
        for &c in &keep {
            let cell = record.get(c).unwrap_or("").trim();
            let value: f64 = cell.parse().map_err(|_| Error::Cell {
                path: path.to_path_buf(),
                row,
                column: headers[c].to_string(),
                message: if cell.is_empty() {
                    "missing value".into()
                } else {
                    format!("non-numeric value `{cell}`")
                },
            })?;
            if !value.is_finite() {
                return Err(Error::Cell {
                    path: path.to_path_buf(),
                    row,
                    column: headers[c].to_string(),
                    message: format!("non-finite value `{cell}`"),
                });
            }
            data.push(value);
        }
        records += 1;
    }
    if records == 0 {
        return Err(Error::format(path, "no data rows"));
    }
    let name = path
        .file_stem()
        .map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    let mut dataset = Dataset::new(name, Matrix::new(records, keep.len(), data)?);
    dataset.metadata = json!({"source": path.display().to_string(), "dropped": drop_columns});
    Ok(dataset)
}

/// Writes a dataset as headed CSV (`f0,f1,...`).
pub fn write_csv(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let m = &dataset.features;
    let header: Vec<String> = (0..m.cols()).map(|c| format!("f{c}")).collect();
    let csv_err = |e: csv::Error| Error::format(path, e.to_string());
    writer.write_record(&header).map_err(csv_err)?;
    for r in 0..m.rows() {
        writer
            .write_record(m.row(r).iter().map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Per-column `(x − min) / (max − min)`; constant columns become 0.
pub fn minmax_scale(dataset: &Dataset) -> Dataset {
    let m = &dataset.features;
    let (rows, cols) = m.shape();
    let mut mins = vec![f64::INFINITY; cols];
    let mut maxs = vec![f64::NEG_INFINITY; cols];
    for r in 0..rows {
        for (c, &v) in m.row(r).iter().enumerate() {
            mins[c] = mins[c].min(v);
            maxs[c] = maxs[c].max(v);
        }
    }
    let mut scaled = m.clone();
    for row in scaled.as_mut_slice().chunks_exact_mut(cols) {
        for (c, v) in row.iter_mut().enumerate() {
            let range = maxs[c] - mins[c];
            *v = if range > 0.0 {
                ((*v - mins[c]) / range).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }
    Dataset {
        name: dataset.name.clone(),
        features: scaled,
        feature_mins: Some(mins),
        feature_maxs: Some(maxs),
        metadata: dataset.metadata.clone(),
    }
}

/// Inverts [`minmax_scale`] using the recorded extremes.
pub fn descale(dataset: &Dataset) -> Result<Matrix> {
    let (Some(mins), Some(maxs)) = (&dataset.feature_mins, &dataset.feature_maxs) else {
        return Err(Error::InvalidArgument(format!("dataset `{}` was not scaled", dataset.name)));
    };
    let cols = dataset.dim();
    let mut out = dataset.features.clone();
    for row in out.as_mut_slice().chunks_exact_mut(cols) {
        for (c, v) in row.iter_mut().enumerate() {
            *v = mins[c] + *v * (maxs[c] - mins[c]);
        }
    }
    Ok(out)
}

/// Train/test partition of a dataset's rows.
#[derive(Clone, Debug)]
pub struct Split {
    pub train: Matrix,
    pub test: Matrix,
    pub seed: u64,
    pub fraction: f64,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl Split {
    /// Hash over both partitions, identifying the exact data every run sees.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update(matrix_checksum(&self.train));
        h.update(matrix_checksum(&self.test));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Seeded shuffle of rows; the first `⌊fraction·N⌋` go to train.
pub fn split(dataset: &Dataset, fraction: f64, seed: u64) -> Result<Split> {
    let n = dataset.records();
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("split fraction must be in (0, 1), got {fraction}")));
    }
    let n_train = (fraction * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidArgument(format!(
            "split of {n} records at {fraction} leaves an empty partition"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(seed).shuffle(&mut order);
    let (train_idx, test_idx) = order.split_at(n_train);
    Ok(Split {
        train: dataset.features.select_rows(train_idx),
        test: dataset.features.select_rows(test_idx),
        seed,
        fraction,
        train_indices: train_idx.to_vec(),
        test_indices: test_idx.to_vec(),
    })
}

/// Uses two datasets as given train and test partitions, unshuffled.
pub fn fixed_split(train: &Dataset, test: &Dataset) -> Result<Split> {
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch {
            op: "fixed_split",
            left: train.features.shape(),
            right: test.features.shape(),
        });
    }
    let n_train = train.records();
    let total = n_train + test.records();
    Ok(Split {
        train: train.features.clone(),
        test: test.features.clone(),
        seed: 0,
        fraction: n_train as f64 / total as f64,
        train_indices: (0..n_train).collect(),
        test_indices: (n_train..total).collect(),
    })
}
