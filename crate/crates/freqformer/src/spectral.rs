//! Separable spectral transform over the three token axes.
//!
//! Each axis carries an orthonormal DCT-II matrix; the full transform is the
//! Kronecker product of the per-axis matrices, applied axis by axis.
//! Channels are never mixed. The transform is realized as explicit matrix
//! products per axis, which keeps orthonormality exact by construction at
//! desk-scale sizes.

use crate::tensor::{Matrix, Tensor4};
use crate::{Error, Result};

/// Orthonormal DCT-II matrix: entry `(k, i)` is
/// `c_k * cos(pi * (2i + 1) * k / (2n))` with `c_0 = sqrt(1/n)` and
/// `c_k = sqrt(2/n)` for `k >= 1`.
pub fn dct_matrix(n: usize) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::Argument("dct_matrix: n must be >= 1".into()));
    }
    let nf = n as f64;
    let c0 = (1.0 / nf).sqrt();
    let ck = (2.0 / nf).sqrt();
    Ok(Matrix::from_fn(n, n, |k, i| {
        let coeff = if k == 0 { c0 } else { ck };
        coeff * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf)).cos()
    }))
}

/// Per-axis orthonormal transform matrices for a (T, H, W, C) tensor.
#[derive(Debug, Clone)]
pub struct SpectralPlan {
    f_t: Matrix,
    f_h: Matrix,
    f_w: Matrix,
}

impl SpectralPlan {
    pub fn new(t: usize, h: usize, w: usize) -> Result<Self> {
        Ok(Self {
            f_t: dct_matrix(t)?,
            f_h: dct_matrix(h)?,
            f_w: dct_matrix(w)?,
        })
    }

    pub fn axis_sizes(&self) -> (usize, usize, usize) {
        (self.f_t.rows(), self.f_h.rows(), self.f_w.rows())
    }

    pub fn f_t(&self) -> &Matrix {
        &self.f_t
    }

    pub fn f_h(&self) -> &Matrix {
        &self.f_h
    }

    pub fn f_w(&self) -> &Matrix {
        &self.f_w
    }

    fn check_shape(&self, x: &Tensor4) -> Result<()> {
        let (t, h, w, _) = x.shape();
        if (t, h, w) != self.axis_sizes() {
            return Err(Error::Shape(format!(
                "plan axes {:?} do not match tensor {:?}",
                self.axis_sizes(),
                x.shape()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Axis {
    T,
    H,
    W,
}

/// Contract `matrix` along one token axis. With `transposed` the matrix is
/// applied as its transpose, which is the inverse of an orthonormal map.
fn apply_axis(x: &Tensor4, matrix: &Matrix, axis: Axis, transposed: bool) -> Tensor4 {
    let (t, h, w, c) = x.shape();
    let n = match axis {
        Axis::T => t,
        Axis::H => h,
        Axis::W => w,
    };
    debug_assert_eq!(matrix.rows(), n);
    let mut out = Tensor4::zeros(x.shape());
    for ti in 0..t {
        for hi in 0..h {
            for wi in 0..w {
                for ci in 0..c {
                    let k = match axis {
                        Axis::T => ti,
                        Axis::H => hi,
                        Axis::W => wi,
                    };
                    let mut acc = 0.0;
                    for j in 0..n {
                        let m = if transposed {
                            matrix.get(j, k)
                        } else {
                            matrix.get(k, j)
                        };
                        let v = match axis {
                            Axis::T => x.get(j, hi, wi, ci),
                            Axis::H => x.get(ti, j, wi, ci),
                            Axis::W => x.get(ti, hi, j, ci),
                        };
                        acc += m * v;
                    }
                    out.set(ti, hi, wi, ci, acc);
                }
            }
        }
    }
    out
}

/// Forward transform: apply the T, H and W axis matrices in turn.
pub fn forward(plan: &SpectralPlan, x: &Tensor4) -> Result<Tensor4> {
    plan.check_shape(x)?;
    let y = apply_axis(x, &plan.f_t, Axis::T, false);
    let y = apply_axis(&y, &plan.f_h, Axis::H, false);
    Ok(apply_axis(&y, &plan.f_w, Axis::W, false))
}

/// Inverse transform: apply the transposed axis matrices in reverse order.
pub fn inverse(plan: &SpectralPlan, y: &Tensor4) -> Result<Tensor4> {
    plan.check_shape(y)?;
    let x = apply_axis(y, &plan.f_w, Axis::W, true);
    let x = apply_axis(&x, &plan.f_h, Axis::H, true);
    Ok(apply_axis(&x, &plan.f_t, Axis::T, true))
}

/// Max-abs deviation of `F^T F` from the identity; used by orthonormality
/// checks.
pub fn orthonormality_defect(m: &Matrix) -> f64 {
    let gram = m
        .transpose()
        .matmul(m)
        .expect("square matrix gram product");
    let mut worst = 0.0f64;
    for r in 0..gram.rows() {
        for c in 0..gram.cols() {
            let want = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((gram.get(r, c) - want).abs());
        }
    }
    worst
}
