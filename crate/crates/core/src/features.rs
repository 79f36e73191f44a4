//! Dense vertex feature matrices and layer weights.
//!
//! Features are f32 in row-major order: row = vertex, column = feature
//! channel. All aggregation kernels and layer transforms consume and produce
//! this layout.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec;
use crate::rng::Stream;

/// Magic prefix of the binary feature format.
const BINARY_MAGIC: &[u8; 8] = b"AGBFEAT1";

/// Row-major f32 matrix of per-vertex features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major data. Rejects length mismatches and
    /// non-finite payloads.
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::InvalidParameter {
                name: "rows * cols",
                reason: "matrix size overflows usize".into(),
            })?;
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                context: "FeatureMatrix::new",
                expected: format!("{rows}x{cols} = {expected} values"),
                actual: format!("{} values", data.len()),
            });
        }
        for (i, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: i.checked_div(cols).unwrap_or(0),
                    col: i.checked_rem(cols).unwrap_or(0),
                });
            }
        }
        Ok(FeatureMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        FeatureMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Convenience constructor for literal test fixtures.
    pub fn from_rows(rows: &[&[f32]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::ShapeMismatch {
                    context: "FeatureMatrix::from_rows",
                    expected: format!("{c} columns"),
                    actual: format!("{} columns", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        FeatureMatrix::new(r, c, data)
    }

    /// Deterministic uniform features in `[-1, 1)`. Each row draws from its
    /// own counter stream, so the result is independent of parallelism.
    pub fn random(rows: usize, cols: usize, seed: u64) -> Self {
        let mut m = FeatureMatrix::zeros(rows, cols);
        exec::for_each_chunk_mut(&mut m.data, cols.max(1), |r, row| {
            let mut s = Stream::new(seed, r as u64);
            for v in row.iter_mut() {
                *v = s.next_symmetric();
            }
        });
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f32] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Heap footprint of the payload in bytes.
    pub fn heap_bytes(&self) -> u64 {
        (self.data.len() * std::mem::size_of::<f32>()) as u64
    }

    /// Dense product `self * w`, parallel over output rows.
    pub fn matmul(&self, w: &DenseWeights) -> Result<FeatureMatrix> {
        if self.cols != w.in_dim {
            return Err(Error::ShapeMismatch {
                context: "matmul",
                expected: format!("feature width {}", w.in_dim),
                actual: format!("feature width {}", self.cols),
            });
        }
        let mut out = FeatureMatrix::zeros(self.rows, w.out_dim);
        let (rows, cols, out_dim) = (self.rows, self.cols, w.out_dim);
        if rows == 0 || out_dim == 0 {
            return Ok(out);
        }
        let x = &self.data;
        let wd = &w.data;
        exec::for_each_chunk_mut(&mut out.data, out_dim, |i, orow| {
            let xrow = &x[i * cols..(i + 1) * cols];
            for (k, &xv) in xrow.iter().enumerate() {
                let wrow = &wd[k * out_dim..(k + 1) * out_dim];
                for (o, &wv) in orow.iter_mut().zip(wrow.iter()) {
                    *o += xv * wv;
                }
            }
        });
        Ok(out)
    }

    /// Writes the binary format: magic, rows and cols as u64 little-endian,
    /// then row-major f32 little-endian values.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io_at(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.rows as u64).to_le_bytes())?;
        w.write_all(&(self.cols as u64).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)
            .map_err(|e| Error::io_at(path, e))?
            .read_to_end(&mut bytes)?;
        let fail = |reason: &str| Error::InvalidStructure {
            format: "binary features",
            reason: format!("{}: {reason}", path.display()),
        };
        if bytes.len() < 24 || &bytes[..8] != BINARY_MAGIC {
            return Err(fail("missing AGBFEAT1 header"));
        }
        let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| fail("dimension overflow"))?;
        let payload = &bytes[24..];
        if payload.len() != expected {
            return Err(fail(&format!(
                "expected {expected} payload bytes for {rows}x{cols}, found {}",
                payload.len()
            )));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        FeatureMatrix::new(rows, cols, data)
    }

    /// Reads either on-disk format, sniffing the binary magic.
    pub fn read_file(path: &Path) -> Result<Self> {
        let mut prefix = [0u8; 8];
        let n = fs::File::open(path)
            .map_err(|e| Error::io_at(path, e))?
            .read(&mut prefix)?;
        if n == 8 && &prefix == BINARY_MAGIC {
            Self::read_binary(path)
        } else {
            Self::read_text(path)
        }
    }

    /// Writes the text alternative: a `rows cols` header line, then one
    /// whitespace-separated row per line.
    pub fn write_text(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io_at(path, e))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{} {}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_text(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        let parse_err = |line: usize, reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut lines = text.lines().enumerate();
        let (hline, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty feature file".into()))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(parse_err(hline + 1, "header must be `rows cols`".into()));
        }
        let rows: usize = dims[0]
            .parse()
            .map_err(|e| parse_err(hline + 1, format!("bad row count: {e}")))?;
        let cols: usize = dims[1]
            .parse()
            .map_err(|e| parse_err(hline + 1, format!("bad column count: {e}")))?;
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen_rows = 0usize;
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut count = 0usize;
            for tok in line.split_whitespace() {
                let v: f32 = tok
                    .parse()
                    .map_err(|e| parse_err(idx + 1, format!("bad value `{tok}`: {e}")))?;
                data.push(v);
                count += 1;
            }
            if count != cols {
                return Err(parse_err(
                    idx + 1,
                    format!("expected {cols} values, found {count}"),
                ));
            }
            seen_rows += 1;
        }
        if seen_rows != rows {
            return Err(parse_err(
                text.lines().count(),
                format!("expected {rows} rows, found {seen_rows}"),
            ));
        }
        FeatureMatrix::new(rows, cols, data)
    }
}

/// Dense layer weights, row-major `[in_dim][out_dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseWeights {
    in_dim: usize,
    out_dim: usize,
    data: Vec<f32>,
}

impl DenseWeights {
    pub fn new(in_dim: usize, out_dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != in_dim * out_dim {
            return Err(Error::ShapeMismatch {
                context: "DenseWeights::new",
                expected: format!("{in_dim}x{out_dim} = {} values", in_dim * out_dim),
                actual: format!("{} values", data.len()),
            });
        }
        for (i, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: i.checked_div(out_dim).unwrap_or(0),
                    col: i.checked_rem(out_dim).unwrap_or(0),
                });
            }
        }
        Ok(DenseWeights {
            in_dim,
            out_dim,
            data,
        })
    }

    /// Square identity transform, used when a layer should pass features
    /// through unchanged.
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        DenseWeights {
            in_dim: dim,
            out_dim: dim,
            data,
        }
    }

    /// Deterministic uniform weights in `[-1, 1)`, one stream per input row.
    pub fn random(in_dim: usize, out_dim: usize, seed: u64) -> Self {
        let mut data = vec![0.0f32; in_dim * out_dim];
        exec::for_each_chunk_mut(&mut data, out_dim.max(1), |r, row| {
            let mut s = Stream::new(seed, r as u64);
            for v in row.iter_mut() {
                *v = s.next_symmetric();
            }
        });
        DenseWeights {
            in_dim,
            out_dim,
            data,
        }
    }

    pub fn from_matrix(m: &FeatureMatrix) -> Result<Self> {
        DenseWeights::new(m.rows(), m.cols(), m.data().to_vec())
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}
