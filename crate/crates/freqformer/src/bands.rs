//! Partition of the spectral coefficient grid into low/mid/high bands.
//!
//! Coefficients are ranked by the normalized frequency sum
//! `kappa = k_t/T + k_h/H + k_w/W` (computed with an exact integer
//! numerator so ordering is platform independent), then cut by the band
//! fractions: the first `floor(rho_low * N)` coefficients form the low band,
//! the next `floor(rho_mid * N)` the mid band, and the remainder the high
//! band. Ties in `kappa` break lexicographically by `(k_t, k_h, k_w)`.

use crate::tensor::{mean_pool_groups, Matrix, Tensor4};
use crate::{Error, Result};

/// Band fractions and the low-band compression factor.
#[derive(Debug, Clone, Copy)]
pub struct BandSpec {
    pub rho_low: f64,
    pub rho_mid: f64,
    pub rho_high: f64,
    pub compression: usize,
}

impl Default for BandSpec {
    fn default() -> Self {
        Self {
            rho_low: 0.125,
            rho_mid: 0.375,
            rho_high: 0.5,
            compression: 4,
        }
    }
}

impl BandSpec {
    pub fn validate(&self) -> Result<()> {
        let sum = self.rho_low + self.rho_mid + self.rho_high;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "band fractions sum to {sum}, expected 1"
            )));
        }
        if self.rho_low < 0.0 || self.rho_mid < 0.0 || self.rho_high < 0.0 {
            return Err(Error::Config("band fractions must be nonnegative".into()));
        }
        if self.compression == 0 {
            return Err(Error::Config("compression factor must be >= 1".into()));
        }
        Ok(())
    }
}

/// One of the three spectral bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Low,
    Mid,
    High,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Low, Band::Mid, Band::High];

    pub fn index(self) -> usize {
        match self {
            Band::Low => 0,
            Band::Mid => 1,
            Band::High => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::Low => "low",
            Band::Mid => "mid",
            Band::High => "high",
        }
    }
}

/// Disjoint low/mid/high index sets over the flattened coefficient grid,
/// plus the compressed low-band token count.
#[derive(Debug, Clone)]
pub struct BandPartition {
    n_total: usize,
    axes: (usize, usize, usize),
    idx: [Vec<usize>; 3],
    compression: usize,
}

impl BandPartition {
    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn axes(&self) -> (usize, usize, usize) {
        self.axes
    }

    pub fn indices(&self, band: Band) -> &[usize] {
        &self.idx[band.index()]
    }

    pub fn band_len(&self, band: Band) -> usize {
        self.idx[band.index()].len()
    }

    pub fn n_low(&self) -> usize {
        self.band_len(Band::Low)
    }

    pub fn n_mid(&self) -> usize {
        self.band_len(Band::Mid)
    }

    pub fn n_high(&self) -> usize {
        self.band_len(Band::High)
    }

    pub fn compression(&self) -> usize {
        self.compression
    }

    /// `ceil(n_low / compression)`: token count after low-band compression.
    pub fn n_low_compressed(&self) -> usize {
        self.n_low().div_ceil(self.compression)
    }
}

/// Exact integer numerator of `kappa = k_t/T + k_h/H + k_w/W` over the
/// common denominator `T*H*W`.
fn kappa_numerator(k: (usize, usize, usize), axes: (usize, usize, usize)) -> u64 {
    let (kt, kh, kw) = k;
    let (t, h, w) = axes;
    (kt * h * w + kh * t * w + kw * t * h) as u64
}

/// Rank all coefficients by frequency and cut into bands by the spec's
/// fractions.
pub fn build_partition(t: usize, h: usize, w: usize, spec: &BandSpec) -> Result<BandPartition> {
    if t == 0 || h == 0 || w == 0 {
        return Err(Error::Argument("build_partition: axes must be >= 1".into()));
    }
    spec.validate()?;
    let n = t * h * w;
    let mut order: Vec<usize> = (0..n).collect();
    let coords = |flat: usize| -> (usize, usize, usize) {
        let kw = flat % w;
        let kh = (flat / w) % h;
        let kt = flat / (w * h);
        (kt, kh, kw)
    };
    order.sort_by_key(|&flat| {
        let k = coords(flat);
        (kappa_numerator(k, (t, h, w)), k.0, k.1, k.2)
    });

    let n_low = (spec.rho_low * n as f64).floor() as usize;
    let n_mid = (spec.rho_mid * n as f64).floor() as usize;
    let idx_low = order[..n_low].to_vec();
    let idx_mid = order[n_low..n_low + n_mid].to_vec();
    let idx_high = order[n_low + n_mid..].to_vec();

    Ok(BandPartition {
        n_total: n,
        axes: (t, h, w),
        idx: [idx_low, idx_mid, idx_high],
        compression: spec.compression,
    })
}

fn check_tensor(x: &Tensor4, part: &BandPartition) -> Result<()> {
    if x.num_tokens() != part.n_total {
        return Err(Error::Shape(format!(
            "tensor has {} coefficients, partition expects {}",
            x.num_tokens(),
            part.n_total
        )));
    }
    Ok(())
}

/// Collect one band's coefficients as an `N_band x C` matrix in band order.
pub fn gather_band(x: &Tensor4, part: &BandPartition, band: Band) -> Result<Matrix> {
    check_tensor(x, part)?;
    let tokens = x.as_token_matrix();
    let idx = part.indices(band);
    let mut out = Matrix::zeros(idx.len(), tokens.cols());
    for (r, &flat) in idx.iter().enumerate() {
        for c in 0..tokens.cols() {
            out.set(r, c, tokens.get(flat, c));
        }
    }
    Ok(out)
}

/// Reassemble a spectral tensor from its three band matrices; the exact
/// inverse of [`gather_band`] applied to all bands.
pub fn scatter_bands(
    low: &Matrix,
    mid: &Matrix,
    high: &Matrix,
    part: &BandPartition,
) -> Result<Tensor4> {
    let parts = [low, mid, high];
    let c = parts
        .iter()
        .map(|m| m.cols())
        .find(|&c| c > 0)
        .unwrap_or(low.cols());
    for (band, m) in Band::ALL.iter().zip(parts) {
        if m.rows() != part.band_len(*band) {
            return Err(Error::Shape(format!(
                "{} band has {} rows, partition expects {}",
                band.name(),
                m.rows(),
                part.band_len(*band)
            )));
        }
        if m.rows() > 0 && m.cols() != c {
            return Err(Error::Shape("band channel counts differ".into()));
        }
    }
    let (t, h, w) = part.axes;
    let mut tokens = Matrix::zeros(part.n_total, c);
    for (band, m) in Band::ALL.iter().zip(parts) {
        for (r, &flat) in part.indices(*band).iter().enumerate() {
            for col in 0..c {
                tokens.set(flat, col, m.get(r, col));
            }
        }
    }
    Tensor4::from_token_matrix(t, h, w, &tokens)
}

/// Low-band compression: mean-pool groups of `factor` band-ordered tokens,
/// then apply the channel map `d_map`.
pub fn compress_low(tokens: &Matrix, factor: usize, d_map: &Matrix) -> Result<Matrix> {
    if tokens.rows() == 0 {
        return Ok(Matrix::zeros(0, tokens.cols()));
    }
    mean_pool_groups(tokens, factor)?.matmul(d_map)
}

/// Expand compressed low-band tokens back to `n_low` positions by
/// replicating each compressed row to its source group, then applying
/// `u_map`.
pub fn expand_low(
    compressed: &Matrix,
    n_low: usize,
    factor: usize,
    u_map: &Matrix,
) -> Result<Matrix> {
    if factor == 0 {
        return Err(Error::Argument("expand_low: factor must be >= 1".into()));
    }
    let expected = n_low.div_ceil(factor);
    if compressed.rows() != expected {
        return Err(Error::Shape(format!(
            "expand_low: {} compressed rows, expected {expected} for n_low={n_low}",
            compressed.rows()
        )));
    }
    if n_low == 0 {
        return Ok(Matrix::zeros(0, compressed.cols()));
    }
    let mut replicated = Matrix::zeros(n_low, compressed.cols());
    for r in 0..n_low {
        let g = r / factor;
        for c in 0..compressed.cols() {
            replicated.set(r, c, compressed.get(g, c));
        }
    }
    replicated.matmul(u_map)
}
