//! Dense 64-bit numeric substrate: row-major matrices and 4-axis tensors.
//!
//! Everything downstream (transforms, attention operators, the router and the
//! layer) is built on these two containers. All arithmetic is `f64` with a
//! fixed left-to-right accumulation order, so identical inputs produce
//! bitwise-identical outputs.

use crate::{Error, Result};

/// Axis sizes of a [`Tensor4`]: (frames, rows, cols, channels).
pub type Shape4 = (usize, usize, usize, usize);

/// Row-major dense matrix of 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    /// Borrow row `r` as a slice.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Standard matrix product with the accumulation over the inner index
    /// running left to right, so the result is bitwise reproducible.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "matmul: {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0.0;
                for k in 0..self.cols {
                    acc += self.data[i * self.cols + k] * other.data[k * other.cols + j];
                }
                out.data[i * other.cols + j] = acc;
            }
        }
        Ok(out)
    }

    /// `self * other^T` without materializing the transpose.
    pub fn matmul_transpose_b(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::Shape(format!(
                "matmul_transpose_b: {}x{} by ({}x{})^T",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                let mut acc = 0.0;
                for k in 0..self.cols {
                    acc += self.data[i * self.cols + k] * other.data[j * other.cols + k];
                }
                out.data[i * other.rows + j] = acc;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "add: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Copy of columns `[start, start + len)`.
    pub fn columns(&self, start: usize, len: usize) -> Matrix {
        assert!(start + len <= self.cols, "column slice out of range");
        Matrix::from_fn(self.rows, len, |r, c| self.get(r, start + c))
    }

    /// Overwrite columns `[start, start + m.cols)` with `m`.
    pub fn set_columns(&mut self, start: usize, m: &Matrix) {
        assert_eq!(self.rows, m.rows, "set_columns row mismatch");
        assert!(start + m.cols <= self.cols, "set_columns out of range");
        for r in 0..self.rows {
            for c in 0..m.cols {
                self.set(r, start + c, m.get(r, c));
            }
        }
    }

    /// Stack matrices vertically. All parts must share a column count.
    pub fn vstack(parts: &[&Matrix]) -> Result<Matrix> {
        let cols = parts.first().map(|m| m.cols).unwrap_or(0);
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            if p.cols != cols {
                return Err(Error::Shape(format!(
                    "vstack: column count {} vs {}",
                    p.cols, cols
                )));
            }
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Row softmax with the scores multiplied by `scale` and the per-row maximum
/// subtracted before exponentiation.
pub fn softmax_rows(m: &Matrix, scale: f64) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for r in 0..m.rows() {
        let row = m.row(r);
        let mut mx = f64::NEG_INFINITY;
        for &v in row {
            let z = v * scale;
            if z > mx {
                mx = z;
            }
        }
        let mut sum = 0.0;
        for (c, &v) in row.iter().enumerate() {
            let e = (v * scale - mx).exp();
            out.set(r, c, e);
            sum += e;
        }
        for c in 0..m.cols() {
            out.set(r, c, out.get(r, c) / sum);
        }
    }
    out
}

/// Mean-pool consecutive groups of `group` rows. The final group may be
/// shorter and is averaged over its actual size.
pub fn mean_pool_groups(tokens: &Matrix, group: usize) -> Result<Matrix> {
    if group == 0 {
        return Err(Error::Argument("mean_pool_groups: group must be >= 1".into()));
    }
    let n = tokens.rows();
    let c = tokens.cols();
    let out_rows = n.div_ceil(group);
    let mut out = Matrix::zeros(out_rows, c);
    for g in 0..out_rows {
        let start = g * group;
        let end = ((g + 1) * group).min(n);
        let size = (end - start) as f64;
        for col in 0..c {
            let mut acc = 0.0;
            for r in start..end {
                acc += tokens.get(r, col);
            }
            out.set(g, col, acc / size);
        }
    }
    Ok(out)
}

/// 4-axis tensor (frames, rows, cols, channels) stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    shape: Shape4,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(shape: Shape4) -> Self {
        let (t, h, w, c) = shape;
        Self {
            shape,
            data: vec![0.0; t * h * w * c],
        }
    }

    pub fn from_vec(shape: Shape4, data: Vec<f64>) -> Result<Self> {
        let (t, h, w, c) = shape;
        if data.len() != t * h * w * c {
            return Err(Error::Shape(format!(
                "tensor data length {} does not match {shape:?}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> Shape4 {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn num_tokens(&self) -> usize {
        self.shape.0 * self.shape.1 * self.shape.2
    }

    pub fn channels(&self) -> usize {
        self.shape.3
    }

    #[inline]
    fn index(&self, t: usize, h: usize, w: usize, c: usize) -> usize {
        let (_, hh, ww, cc) = self.shape;
        ((t * hh + h) * ww + w) * cc + c
    }

    #[inline]
    pub fn get(&self, t: usize, h: usize, w: usize, c: usize) -> f64 {
        self.data[self.index(t, h, w, c)]
    }

    #[inline]
    pub fn set(&mut self, t: usize, h: usize, w: usize, c: usize, value: f64) {
        let i = self.index(t, h, w, c);
        self.data[i] = value;
    }

    /// View the token axes flattened into rows: an `(T*H*W) x C` matrix in
    /// the tensor's native row-major token order.
    pub fn as_token_matrix(&self) -> Matrix {
        Matrix::from_vec(self.num_tokens(), self.channels(), self.data.clone())
            .expect("token matrix shape is consistent by construction")
    }

    /// Inverse of [`Tensor4::as_token_matrix`] for the given token axes.
    pub fn from_token_matrix(t: usize, h: usize, w: usize, m: &Matrix) -> Result<Self> {
        if m.rows() != t * h * w {
            return Err(Error::Shape(format!(
                "token matrix has {} rows, expected {}",
                m.rows(),
                t * h * w
            )));
        }
        Tensor4::from_vec((t, h, w, m.cols()), m.data().to_vec())
    }

    pub fn sub(&self, other: &Tensor4) -> Result<Tensor4> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "sub: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Tensor4::from_vec(self.shape, data)
    }

    pub fn scale(&self, factor: f64) -> Tensor4 {
        Tensor4 {
            shape: self.shape,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn add(&self, other: &Tensor4) -> Result<Tensor4> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "add: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Tensor4::from_vec(self.shape, data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Tensor4) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}
