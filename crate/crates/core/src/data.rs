//! Sparse dataset loading, generation, and dual row/column traversal.
//!
//! The design matrix is stored in both row-major and column-major form so
//! that "all features of row i" and "all rows containing feature j" are each
//! available in time proportional to the nonzeros involved.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::DataError;

/// Immutable sparse matrix with both row-wise and column-wise views.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
    nnz: usize,
}

impl SparseMatrix {
    /// Build both views from (row, col, value) triples. Zero values are
    /// dropped; duplicate (row, col) pairs and out-of-range indices are
    /// rejected.
    pub fn from_triples(
        triples: &[(usize, usize, f64)],
        n_rows: usize,
        n_cols: usize,
    ) -> Result<Self, DataError> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_cols];
        let mut nnz = 0usize;
        for &(i, j, v) in triples {
            if i >= n_rows || j >= n_cols {
                return Err(DataError::IndexOutOfRange {
                    row: i,
                    col: j,
                    n_rows,
                    n_cols,
                });
            }
            if !v.is_finite() {
                return Err(DataError::NonFiniteValue { row: i, col: j });
            }
            if v == 0.0 {
                continue;
            }
            rows[i].push((j, v));
            cols[j].push((i, v));
            nnz += 1;
        }
        for (i, r) in rows.iter_mut().enumerate() {
            r.sort_unstable_by_key(|&(j, _)| j);
            if r.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(DataError::DuplicateEntry { row: i });
            }
        }
        for c in cols.iter_mut() {
            c.sort_unstable_by_key(|&(i, _)| i);
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            rows,
            cols,
            nnz,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    /// Nonzeros of row `i` as sorted (column, value) pairs.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Nonzeros of column `j` as sorted (row, value) pairs.
    pub fn col(&self, j: usize) -> &[(usize, f64)] {
        &self.cols[j]
    }

    /// Largest absolute entry, 0.0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|&(_, v)| v.abs())
            .fold(0.0, f64::max)
    }
}

/// A labeled sparse dataset: design matrix plus {0, 1} labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: SparseMatrix,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: SparseMatrix, y: Vec<f64>) -> Result<Self, DataError> {
        if y.len() != x.n_rows() {
            return Err(DataError::LabelCount {
                labels: y.len(),
                rows: x.n_rows(),
            });
        }
        if let Some(&bad) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(DataError::BadLabel { label: bad, line: 0 });
        }
        Ok(Dataset { x, y })
    }

    pub fn n_rows(&self) -> usize {
        self.x.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.n_cols()
    }
}

fn open_maybe_gz(path: &Path) -> Result<Box<dyn Read>, DataError> {
    let file = File::open(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(flate2::read::GzDecoder::new(file)))
    } else {
        Ok(Box::new(file))
    }
}

/// Load an svmlight/libsvm text file. Labels in {-1, +1} are mapped to
/// {0, 1}; labels already in {0, 1} pass through. Indices in the file are
/// 1-based and must be strictly increasing within a line; internally they
/// become 0-based. `n_cols_override`, when given, must be at least the max
/// observed index and fixes the feature count (for train/test alignment).
pub fn load_svmlight(path: &Path, n_cols_override: Option<usize>) -> Result<Dataset, DataError> {
    let reader = BufReader::new(open_maybe_gz(path)?);
    let mut triples: Vec<(usize, usize, f64)> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    let mut max_col = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| DataError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_ascii_whitespace();
        let label_tok = parts.next().ok_or(DataError::Malformed { line: lineno })?;
        let label: f64 = label_tok
            .parse()
            .map_err(|_| DataError::Malformed { line: lineno })?;
        let label = match label {
            l if l == 1.0 => 1.0,
            l if l == 0.0 => 0.0,
            l if l == -1.0 => 0.0,
            l => return Err(DataError::BadLabel { label: l, line: lineno }),
        };
        let row = y.len();
        y.push(label);
        let mut prev_idx: Option<usize> = None;
        for tok in parts {
            let (idx_s, val_s) = tok
                .split_once(':')
                .ok_or(DataError::Malformed { line: lineno })?;
            let idx: usize = idx_s
                .parse()
                .map_err(|_| DataError::Malformed { line: lineno })?;
            let val: f64 = val_s
                .parse()
                .map_err(|_| DataError::Malformed { line: lineno })?;
            if idx == 0 {
                return Err(DataError::Malformed { line: lineno });
            }
            if prev_idx.is_some_and(|p| idx <= p) {
                return Err(DataError::NonIncreasingIndex { line: lineno, index: idx });
            }
            prev_idx = Some(idx);
            max_col = max_col.max(idx);
            if val != 0.0 {
                triples.push((row, idx - 1, val));
            }
        }
    }
    let n_cols = match n_cols_override {
        Some(d) if d >= max_col => d,
        Some(d) => {
            return Err(DataError::ColsOverrideTooSmall {
                requested: d,
                observed: max_col,
            })
        }
        None => max_col,
    };
    let x = SparseMatrix::from_triples(&triples, y.len(), n_cols)?;
    Dataset::new(x, y)
}

/// Write a dataset in svmlight format (1-based indices, {0, 1} labels kept
/// as-is). Paths ending in `.gz` are gzip-compressed.
pub fn save_svmlight(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut out: Box<dyn Write> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(flate2::write::GzEncoder::new(
            file,
            flate2::Compression::default(),
        ))
    } else {
        Box::new(std::io::BufWriter::new(file))
    };
    let mut write = |s: String| -> Result<(), DataError> {
        out.write_all(s.as_bytes()).map_err(|e| DataError::Io {
            path: path.display().to_string(),
            source: e,
        })
    };
    for i in 0..dataset.n_rows() {
        let mut line = format!("{}", dataset.y[i] as i64);
        for &(j, v) in dataset.x.row(i) {
            line.push_str(&format!(" {}:{}", j + 1, v));
        }
        line.push('\n');
        write(line)?;
    }
    Ok(())
}

/// Deterministically generate a sparse binary-classification dataset.
///
/// Each row draws ~`density * d` distinct features with values in [-1, 1];
/// labels come from the sign of a hidden `n_informative`-sparse linear model
/// plus small Gaussian noise.
pub fn generate_synthetic(
    n: usize,
    d: usize,
    density: f64,
    n_informative: usize,
    seed: u64,
) -> Result<Dataset, DataError> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(DataError::BadDensity { density });
    }
    if n_informative > d {
        return Err(DataError::TooManyInformative { n_informative, d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Hidden sparse model on the first n_informative features after a seeded
    // shuffle of column identities.
    let mut perm: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        let k = rng.random_range(0..=i);
        perm.swap(i, k);
    }
    let mut w_star = vec![0.0f64; d];
    for &j in perm.iter().take(n_informative) {
        w_star[j] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }

    let mut triples: Vec<(usize, usize, f64)> = Vec::new();
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let mut margin = 0.0f64;
        if density == 1.0 {
            for j in 0..d {
                let v = rng.random_range(-1.0..1.0);
                let v = if v == 0.0 { 0.5 } else { v };
                triples.push((i, j, v));
                margin += v * w_star[j];
            }
        } else {
            // Binomial-ish nonzero count via per-column Bernoulli would be
            // O(d) per row; sample the count then distinct columns instead.
            let mut k = 0usize;
            let mean = density * d as f64;
            // Normal approximation to Binomial(d, density), clamped.
            let z: f64 = {
                let u1: f64 = rng.random::<f64>().max(1e-12);
                let u2: f64 = rng.random();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            };
            let sd = (d as f64 * density * (1.0 - density)).sqrt();
            let kf = (mean + z * sd).round();
            if kf >= 1.0 {
                k = (kf as usize).min(d);
            }
            let mut chosen = std::collections::BTreeSet::new();
            while chosen.len() < k {
                chosen.insert(rng.random_range(0..d));
            }
            for &j in &chosen {
                let v = rng.random_range(-1.0..1.0);
                let v = if v == 0.0 { 0.5 } else { v };
                triples.push((i, j, v));
                margin += v * w_star[j];
            }
        }
        let noise: f64 = {
            let u1: f64 = rng.random::<f64>().max(1e-12);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        };
        y.push(if margin + 0.1 * noise >= 0.0 { 1.0 } else { 0.0 });
    }
    let x = SparseMatrix::from_triples(&triples, n, d)?;
    Dataset::new(x, y)
}
