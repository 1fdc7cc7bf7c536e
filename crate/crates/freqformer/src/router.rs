//! Timestep-conditioned band routing: pooled band statistics, sinusoidal
//! timestep embedding, a two-layer ReLU MLP producing band probabilities,
//! integer head apportionment and the load-balance regularizer.

use crate::rng::seeded_matrix;
use crate::tensor::Matrix;
use crate::{Error, Result};

/// Reference router parameter count: 256*128 + 128 + 128*3 + 3.
pub const REFERENCE_PARAM_COUNT: usize = 33_283;

/// Router multiply-add FLOPs per layer per sample:
/// `2*(256*128) + 2*(128*3)`.
pub const fn router_flops() -> u64 {
    2 * (256 * 128) + 2 * (128 * 3)
}

/// Two-layer MLP weights. Row-vector convention: `logits =
/// relu(x * w1 + b1) * w2 + b2` with `x = [g; e]` of width `3*d_r + d_t`.
#[derive(Debug, Clone)]
pub struct RouterParams {
    pub d_r: usize,
    pub d_t: usize,
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: [f64; 3],
}

impl RouterParams {
    /// Arbitrary-width constructor with seeded weights.
    pub fn with_widths(d_r: usize, d_t: usize, hidden: usize, seed: u64, scale: f64) -> Self {
        let input = 3 * d_r + d_t;
        let b1 = seeded_matrix(1, hidden, seed.wrapping_add(2), scale)
            .row(0)
            .to_vec();
        let b2_m = seeded_matrix(1, 3, seed.wrapping_add(4), scale);
        Self {
            d_r,
            d_t,
            w1: seeded_matrix(input, hidden, seed.wrapping_add(1), scale),
            b1,
            w2: seeded_matrix(hidden, 3, seed.wrapping_add(3), scale),
            b2: [b2_m.get(0, 0), b2_m.get(0, 1), b2_m.get(0, 2)],
        }
    }

    /// Reference configuration: `d_r = d_t = 64`, hidden width 128. Panics
    /// if the resulting parameter count is not exactly 33,283.
    pub fn reference(seed: u64) -> Self {
        let p = Self::with_widths(64, 64, 128, seed, 0.05);
        assert_eq!(
            p.param_count(),
            REFERENCE_PARAM_COUNT,
            "reference router must have {REFERENCE_PARAM_COUNT} parameters"
        );
        p
    }

    /// All-zero parameters (uniform routing); mainly for tests.
    pub fn zeros() -> Self {
        Self {
            d_r: 64,
            d_t: 64,
            w1: Matrix::zeros(256, 128),
            b1: vec![0.0; 128],
            w2: Matrix::zeros(128, 3),
            b2: [0.0; 3],
        }
    }

    pub fn input_width(&self) -> usize {
        3 * self.d_r + self.d_t
    }

    pub fn hidden_width(&self) -> usize {
        self.w1.cols()
    }

    pub fn param_count(&self) -> usize {
        self.w1.rows() * self.w1.cols() + self.b1.len() + self.w2.rows() * self.w2.cols() + 3
    }
}

/// Band probabilities and the integer head split they induce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutingDecision {
    pub pi: [f64; 3],
    pub heads: (usize, usize, usize),
}

/// Per-band mean of absolute coefficient values over tokens, concatenated
/// low‖mid‖high. Empty bands contribute zero segments.
pub fn pooled_stats(low: &Matrix, mid: &Matrix, high: &Matrix, d_r: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(3 * d_r);
    for m in [low, mid, high] {
        if m.cols() != d_r {
            return Err(Error::Shape(format!(
                "pooled_stats: band has {} channels, expected {d_r}",
                m.cols()
            )));
        }
        for c in 0..d_r {
            if m.rows() == 0 {
                out.push(0.0);
            } else {
                let mut acc = 0.0;
                for r in 0..m.rows() {
                    acc += m.get(r, c).abs();
                }
                out.push(acc / m.rows() as f64);
            }
        }
    }
    Ok(out)
}

/// Sinusoidal timestep embedding: interleaved `(sin, cos)` pairs of
/// `t / 10000^(2i/d_t)` for `i = 0 .. d_t/2`.
pub fn timestep_embedding(t: u64, d_t: usize) -> Vec<f64> {
    assert!(d_t.is_multiple_of(2), "timestep embedding width must be even");
    let mut out = Vec::with_capacity(d_t);
    for i in 0..d_t / 2 {
        let freq = 10_000f64.powf(-(2.0 * i as f64) / d_t as f64);
        let arg = t as f64 * freq;
        out.push(arg.sin());
        out.push(arg.cos());
    }
    out
}

fn softmax3(z: [f64; 3]) -> [f64; 3] {
    let mx = z[0].max(z[1]).max(z[2]);
    let e = [(z[0] - mx).exp(), (z[1] - mx).exp(), (z[2] - mx).exp()];
    let sum = e[0] + e[1] + e[2];
    [e[0] / sum, e[1] / sum, e[2] / sum]
}

/// Raw MLP logits for input `x = [g; e]`.
pub fn route_logits(params: &RouterParams, x: &[f64]) -> Result<[f64; 3]> {
    if x.len() != params.input_width() {
        return Err(Error::Shape(format!(
            "router input width {} != expected {}",
            x.len(),
            params.input_width()
        )));
    }
    let hidden = params.hidden_width();
    let mut h = vec![0.0f64; hidden];
    for (j, hj) in h.iter_mut().enumerate() {
        let mut acc = params.b1[j];
        for (i, &xi) in x.iter().enumerate() {
            acc += xi * params.w1.get(i, j);
        }
        *hj = acc.max(0.0);
    }
    let mut z = params.b2;
    for (j, &hj) in h.iter().enumerate() {
        for (k, zk) in z.iter_mut().enumerate() {
            *zk += hj * params.w2.get(j, k);
        }
    }
    Ok(z)
}

/// Band probabilities: `softmax(route_logits([g; e]))`.
pub fn route(params: &RouterParams, g: &[f64], e: &[f64]) -> Result<[f64; 3]> {
    let mut x = Vec::with_capacity(g.len() + e.len());
    x.extend_from_slice(g);
    x.extend_from_slice(e);
    Ok(softmax3(route_logits(params, &x)?))
}

/// Largest-remainder apportionment of `n_h * pi` with a floor of one head
/// per band. Ties break in band order low, mid, high.
pub fn allocate_heads(pi: [f64; 3], n_h: usize) -> Result<(usize, usize, usize)> {
    if n_h < 3 {
        return Err(Error::Argument(format!(
            "allocate_heads requires n_h >= 3, got {n_h}"
        )));
    }
    let h = apportion(pi, n_h, true);
    Ok((h[0], h[1], h[2]))
}

/// Largest-remainder apportionment; with `floor_one` every band keeps at
/// least one head (heads move from the largest band to empty ones).
pub(crate) fn apportion(pi: [f64; 3], n_h: usize, floor_one: bool) -> [usize; 3] {
    let quotas: Vec<f64> = pi.iter().map(|p| p * n_h as f64).collect();
    let mut heads: [usize; 3] = [
        quotas[0].floor() as usize,
        quotas[1].floor() as usize,
        quotas[2].floor() as usize,
    ];
    let assigned: usize = heads.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    // descending remainder, band order on ties
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for i in 0..n_h.saturating_sub(assigned) {
        heads[order[i % 3]] += 1;
    }
    if floor_one {
        while let Some(empty) = (0..3).find(|&b| heads[b] == 0) {
            let donor = (0..3)
                .max_by(|&a, &b| heads[a].cmp(&heads[b]).then(b.cmp(&a)))
                .expect("three bands");
            heads[donor] -= 1;
            heads[empty] += 1;
        }
    }
    heads
}

/// Load-balance regularizer:
/// `lambda * sum_l (mean_h pi[h][l] - 1/3)^2`. Rows must lie on the simplex
/// within 1e-9.
pub fn load_balance_loss(pi_per_head: &Matrix, lambda: f64) -> Result<f64> {
    if pi_per_head.cols() != 3 {
        return Err(Error::Shape(format!(
            "load_balance_loss expects 3 columns, got {}",
            pi_per_head.cols()
        )));
    }
    let n_h = pi_per_head.rows();
    for r in 0..n_h {
        let row = pi_per_head.row(r);
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&p| p < -1e-12) {
            return Err(Error::Argument(format!(
                "load_balance_loss: row {r} is off the simplex (sum {sum})"
            )));
        }
    }
    if n_h == 0 {
        return Ok(0.0);
    }
    let mut loss = 0.0;
    for l in 0..3 {
        let mean: f64 = (0..n_h).map(|r| pi_per_head.get(r, l)).sum::<f64>() / n_h as f64;
        loss += (mean - 1.0 / 3.0).powi(2);
    }
    Ok(lambda * loss)
}

/// Gradient of `sum(route_logits(x))` with respect to every parameter.
#[derive(Debug, Clone)]
pub struct RouterGradient {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: [f64; 3],
}

/// Analytic backpropagation of `f(params) = sum_k logits_k` through the two
/// layers and the ReLU (derivative 0 at the kink).
pub fn router_gradient(params: &RouterParams, x: &[f64]) -> Result<RouterGradient> {
    if x.len() != params.input_width() {
        return Err(Error::Shape(format!(
            "router input width {} != expected {}",
            x.len(),
            params.input_width()
        )));
    }
    let hidden = params.hidden_width();
    let mut pre = vec![0.0f64; hidden];
    for (j, aj) in pre.iter_mut().enumerate() {
        let mut acc = params.b1[j];
        for (i, &xi) in x.iter().enumerate() {
            acc += xi * params.w1.get(i, j);
        }
        *aj = acc;
    }
    let h: Vec<f64> = pre.iter().map(|&a| a.max(0.0)).collect();

    // s_j = 1[a_j > 0] * sum_k w2[j][k]
    let s: Vec<f64> = (0..hidden)
        .map(|j| {
            if pre[j] > 0.0 {
                (0..3).map(|k| params.w2.get(j, k)).sum()
            } else {
                0.0
            }
        })
        .collect();

    let mut gw1 = Matrix::zeros(params.w1.rows(), hidden);
    for (i, &xi) in x.iter().enumerate() {
        for (j, &sj) in s.iter().enumerate() {
            gw1.set(i, j, xi * sj);
        }
    }
    let gw2 = Matrix::from_fn(hidden, 3, |j, _| h[j]);
    Ok(RouterGradient {
        w1: gw1,
        b1: s,
        w2: gw2,
        b2: [1.0, 1.0, 1.0],
    })
}
