//! The assembled layer: QKV projection, spectral transform, band split,
//! routed per-band attention, summary-token cross-band exchange, spectral
//! reassembly, inverse transform and output projection — plus a dense
//! reference forward and the band-resolved approximation report.

use crate::attention::{
    block_sparse_attention, dense_attention, make_pattern, sliding_window_attention,
    SparsePattern, DEFAULT_BLOCK,
};
use crate::bands::{
    build_partition, compress_low, expand_low, gather_band, scatter_bands, Band, BandPartition,
    BandSpec,
};
use crate::rng::{seeded_matrix, seeded_near_identity};
use crate::router::{
    apportion, load_balance_loss, pooled_stats, route, timestep_embedding, RouterParams,
    RoutingDecision,
};
use crate::spectral::{self, SpectralPlan};
use crate::tensor::{mean_pool_groups, Matrix, Tensor4};
use crate::{Error, Result};

/// Layer hyperparameters.
#[derive(Debug, Clone)]
pub struct LayerConfig {
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_k: usize,
    pub band: BandSpec,
    pub k_mid: usize,
    pub window: usize,
    pub summary_tokens: usize,
    pub exchange: bool,
    pub seed: u64,
}

impl LayerConfig {
    /// Config with the reference defaults (`d_k = 64`, `k_mid = 256`,
    /// `w = 64`, `m = 8`, exchange on).
    pub fn new(t: usize, h: usize, w: usize, d_model: usize, n_heads: usize, seed: u64) -> Self {
        Self {
            t,
            h,
            w,
            d_model,
            n_heads,
            d_k: 64,
            band: BandSpec::default(),
            k_mid: 256,
            window: 64,
            summary_tokens: 8,
            exchange: true,
            seed,
        }
    }

    /// Saturation variant: window and sparse degree cover the whole band,
    /// compression off, exchange off. Every band operator then reduces to
    /// dense attention within its band.
    pub fn saturated(mut self) -> Self {
        let n = self.num_tokens();
        self.window = 2 * n.max(1);
        self.k_mid = n.max(1);
        self.band.compression = 1;
        self.exchange = false;
        self
    }

    pub fn num_tokens(&self) -> usize {
        self.t * self.h * self.w
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 || self.h == 0 || self.w == 0 {
            return Err(Error::Config("token axes must be >= 1".into()));
        }
        if self.n_heads == 0 {
            return Err(Error::Config("need at least one head".into()));
        }
        if self.n_heads * self.d_k != self.d_model {
            return Err(Error::Config(format!(
                "n_heads * d_k = {} does not match d_model = {}",
                self.n_heads * self.d_k,
                self.d_model
            )));
        }
        if self.summary_tokens == 0 || self.window == 0 || self.k_mid == 0 {
            return Err(Error::Config(
                "summary_tokens, window and k_mid must be >= 1".into(),
            ));
        }
        self.band.validate()
    }

    fn scale(&self) -> f64 {
        1.0 / (self.d_k as f64).sqrt()
    }
}

/// All layer weights; deterministic from the config seed.
#[derive(Debug, Clone)]
pub struct LayerWeights {
    pub wq: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
    pub wo: Matrix,
    /// Per-head channel maps applied after low-band pooling.
    pub compress_q: Vec<Matrix>,
    pub compress_k: Vec<Matrix>,
    pub compress_v: Vec<Matrix>,
    pub summary_low: Matrix,
    pub summary_mid: Matrix,
    pub summary_high: Matrix,
    /// Channel map applied after low-band replication.
    pub expand_map: Matrix,
    pub router: RouterParams,
}

impl LayerWeights {
    pub fn seeded(cfg: &LayerConfig) -> Self {
        let d = cfg.d_model;
        let dk = cfg.d_k;
        let s = cfg.seed;
        let proj_scale = 1.0 / (d as f64).sqrt();
        let head_maps = |base: u64| -> Vec<Matrix> {
            (0..cfg.n_heads)
                .map(|h| seeded_near_identity(dk, base + h as u64, 0.02))
                .collect()
        };
        Self {
            wq: seeded_matrix(d, d, s.wrapping_add(1), proj_scale),
            wk: seeded_matrix(d, d, s.wrapping_add(2), proj_scale),
            wv: seeded_matrix(d, d, s.wrapping_add(3), proj_scale),
            wo: seeded_matrix(d, d, s.wrapping_add(4), proj_scale),
            compress_q: head_maps(s.wrapping_add(100)),
            compress_k: head_maps(s.wrapping_add(200)),
            compress_v: head_maps(s.wrapping_add(300)),
            summary_low: seeded_matrix(dk, dk, s.wrapping_add(5), 1.0 / (dk as f64).sqrt()),
            summary_mid: seeded_matrix(dk, dk, s.wrapping_add(6), 1.0 / (dk as f64).sqrt()),
            summary_high: seeded_matrix(dk, dk, s.wrapping_add(7), 1.0 / (dk as f64).sqrt()),
            expand_map: seeded_near_identity(dk, s.wrapping_add(8), 0.02),
            router: RouterParams::reference(s.wrapping_add(9)),
        }
    }

    fn validate(&self, cfg: &LayerConfig) -> Result<()> {
        let d = cfg.d_model;
        for (name, m) in [
            ("wq", &self.wq),
            ("wk", &self.wk),
            ("wv", &self.wv),
            ("wo", &self.wo),
        ] {
            if m.rows() != d || m.cols() != d {
                return Err(Error::Config(format!(
                    "{name} is {}x{}, expected {d}x{d}",
                    m.rows(),
                    m.cols()
                )));
            }
            if !m.is_finite() {
                return Err(Error::Config(format!("{name} has non-finite entries")));
            }
        }
        for maps in [&self.compress_q, &self.compress_k, &self.compress_v] {
            if maps.len() != cfg.n_heads {
                return Err(Error::Config(format!(
                    "compression maps cover {} heads, expected {}",
                    maps.len(),
                    cfg.n_heads
                )));
            }
        }
        if self.router.d_r != cfg.d_k {
            return Err(Error::Config(format!(
                "router statistic width {} does not match d_k = {}",
                self.router.d_r, cfg.d_k
            )));
        }
        Ok(())
    }
}

/// Band-resolved output approximation error. Norms are Frobenius;
/// orthonormality of the transform makes the band energies sum to the
/// squared total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxReport {
    pub total_error: f64,
    pub eps_low: f64,
    pub eps_mid: f64,
    pub eps_high: f64,
}

/// Head assignment used by the layer: floored apportionment (at least one
/// head per band) when `n_heads >= 3`; plain largest-remainder otherwise,
/// in which case starved bands fall back to identity pass-through
/// everywhere.
pub fn head_allocation(pi: [f64; 3], n_heads: usize) -> (usize, usize, usize) {
    let h = apportion(pi, n_heads, n_heads >= 3);
    (h[0], h[1], h[2])
}

/// Exchange (query, key) pair count for one full set of band branches:
/// every processed band token attends to the `2m` foreign summaries.
pub fn exchange_pair_count(part: &BandPartition, summary_tokens: usize) -> u128 {
    let tokens = part.n_low_compressed() + part.n_mid() + part.n_high();
    tokens as u128 * (2 * summary_tokens) as u128
}

struct Prepared {
    plan: SpectralPlan,
    part: BandPartition,
    pattern: Option<SparsePattern>,
    scale: f64,
}

fn prepare(cfg: &LayerConfig) -> Result<Prepared> {
    cfg.validate()?;
    let plan = SpectralPlan::new(cfg.t, cfg.h, cfg.w)?;
    let part = build_partition(cfg.t, cfg.h, cfg.w, &cfg.band)?;
    let pattern = if part.n_mid() > 0 {
        Some(make_pattern(part.n_mid(), DEFAULT_BLOCK, cfg.k_mid))
    } else {
        None
    };
    Ok(Prepared {
        plan,
        part,
        pattern,
        scale: cfg.scale(),
    })
}

fn check_input(cfg: &LayerConfig, x: &Tensor4) -> Result<()> {
    if x.shape() != (cfg.t, cfg.h, cfg.w, cfg.d_model) {
        return Err(Error::Shape(format!(
            "input shape {:?} does not match config ({}, {}, {}, {})",
            x.shape(),
            cfg.t,
            cfg.h,
            cfg.w,
            cfg.d_model
        )));
    }
    Ok(())
}

/// Transformed per-head Q/K/V tensors.
struct HeadSpectra {
    q: Vec<Tensor4>,
    k: Vec<Tensor4>,
    v: Vec<Tensor4>,
}

fn project_and_transform(
    cfg: &LayerConfig,
    weights: &LayerWeights,
    plan: &SpectralPlan,
    x: &Tensor4,
) -> Result<HeadSpectra> {
    let xm = x.as_token_matrix();
    let q_full = xm.matmul(&weights.wq)?;
    let k_full = xm.matmul(&weights.wk)?;
    let v_full = xm.matmul(&weights.wv)?;
    let mut spectra = HeadSpectra {
        q: Vec::with_capacity(cfg.n_heads),
        k: Vec::with_capacity(cfg.n_heads),
        v: Vec::with_capacity(cfg.n_heads),
    };
    for head in 0..cfg.n_heads {
        let start = head * cfg.d_k;
        for (full, out) in [
            (&q_full, &mut spectra.q),
            (&k_full, &mut spectra.k),
            (&v_full, &mut spectra.v),
        ] {
            let slice = full.columns(start, cfg.d_k);
            let tensor = Tensor4::from_token_matrix(cfg.t, cfg.h, cfg.w, &slice)?;
            out.push(spectral::forward(plan, &tensor)?);
        }
    }
    Ok(spectra)
}

fn pooled_layer_stats(
    spectra: &HeadSpectra,
    part: &BandPartition,
    d_r: usize,
) -> Result<Vec<f64>> {
    let mut per_band: Vec<Matrix> = Vec::with_capacity(3);
    for band in Band::ALL {
        let gathered: Vec<Matrix> = spectra
            .q
            .iter()
            .map(|t| gather_band(t, part, band))
            .collect::<Result<_>>()?;
        let refs: Vec<&Matrix> = gathered.iter().collect();
        per_band.push(Matrix::vstack(&refs)?);
    }
    pooled_stats(&per_band[0], &per_band[1], &per_band[2], d_r)
}

fn routing_decision(
    cfg: &LayerConfig,
    weights: &LayerWeights,
    spectra: &HeadSpectra,
    part: &BandPartition,
    timestep: u64,
) -> Result<RoutingDecision> {
    let g = pooled_layer_stats(spectra, part, weights.router.d_r)?;
    let e = timestep_embedding(timestep, weights.router.d_t);
    let pi = route(&weights.router, &g, &e)?;
    Ok(RoutingDecision {
        pi,
        heads: head_allocation(pi, cfg.n_heads),
    })
}

/// Layer-level routing decision for the given input and timestep.
pub fn routing(
    cfg: &LayerConfig,
    weights: &LayerWeights,
    x: &Tensor4,
    timestep: u64,
) -> Result<RoutingDecision> {
    weights.validate(cfg)?;
    let prep = prepare(cfg)?;
    check_input(cfg, x)?;
    let spectra = project_and_transform(cfg, weights, &prep.plan, x)?;
    routing_decision(cfg, weights, &spectra, &prep.part, timestep)
}

/// Per-head band probabilities (router evaluated on each head's own pooled
/// statistics); feeds the load-balance regularizer.
pub fn per_head_band_probs(
    cfg: &LayerConfig,
    weights: &LayerWeights,
    x: &Tensor4,
    timestep: u64,
) -> Result<Matrix> {
    weights.validate(cfg)?;
    let prep = prepare(cfg)?;
    check_input(cfg, x)?;
    let spectra = project_and_transform(cfg, weights, &prep.plan, x)?;
    let e = timestep_embedding(timestep, weights.router.d_t);
    let mut out = Matrix::zeros(cfg.n_heads, 3);
    for head in 0..cfg.n_heads {
        let low = gather_band(&spectra.q[head], &prep.part, Band::Low)?;
        let mid = gather_band(&spectra.q[head], &prep.part, Band::Mid)?;
        let high = gather_band(&spectra.q[head], &prep.part, Band::High)?;
        let g = pooled_stats(&low, &mid, &high, weights.router.d_r)?;
        let pi = route(&weights.router, &g, &e)?;
        for (c, &p) in pi.iter().enumerate() {
            out.set(head, c, p);
        }
    }
    Ok(out)
}

/// Load-balance loss of the per-head routing probabilities.
pub fn layer_load_balance_loss(
    cfg: &LayerConfig,
    weights: &LayerWeights,
    x: &Tensor4,
    timestep: u64,
    lambda: f64,
) -> Result<f64> {
    let per_head = per_head_band_probs(cfg, weights, x, timestep)?;
    load_balance_loss(&per_head, lambda)
}

fn band_for_head(head: usize, heads: (usize, usize, usize)) -> Band {
    if head < heads.0 {
        Band::Low
    } else if head < heads.0 + heads.1 {
        Band::Mid
    } else {
        Band::High
    }
}

/// Pool a band output into at most `m` summary tokens and project them.
fn band_summaries(tokens: &Matrix, m: usize, projection: &Matrix) -> Result<Matrix> {
    if tokens.rows() == 0 {
        return Ok(Matrix::zeros(0, tokens.cols()));
    }
    let group = tokens.rows().div_ceil(m);
    mean_pool_groups(tokens, group)?.matmul(projection)
}

/// One head's band outputs prior to reconstruction. The low band is held in
/// compressed form when the head ran the low branch.
struct HeadBands {
    low: Matrix,
    low_compressed: bool,
    mid: Matrix,
    high: Matrix,
}

fn run_head(
    cfg: &LayerConfig,
    weights: &LayerWeights,
    prep: &Prepared,
    spectra: &HeadSpectra,
    head: usize,
    assigned: Band,
) -> Result<HeadBands> {
    let part = &prep.part;
    let scale = prep.scale;
    let gather3 = |t: &Tensor4| -> Result<[Matrix; 3]> {
        Ok([
            gather_band(t, part, Band::Low)?,
            gather_band(t, part, Band::Mid)?,
            gather_band(t, part, Band::High)?,
        ])
    };
    let q = gather3(&spectra.q[head])?;
    let k = gather3(&spectra.k[head])?;
    let v = gather3(&spectra.v[head])?;

    // Unassigned bands pass their value coefficients through untouched.
    let mut bands = HeadBands {
        low: v[0].clone(),
        low_compressed: false,
        mid: v[1].clone(),
        high: v[2].clone(),
    };

    let factor = cfg.band.compression;
    match assigned {
        Band::Low => {
            let qc = compress_low(&q[0], factor, &weights.compress_q[head])?;
            let kc = compress_low(&k[0], factor, &weights.compress_k[head])?;
            let vc = compress_low(&v[0], factor, &weights.compress_v[head])?;
            bands.low = if qc.rows() == 0 {
                qc
            } else {
                dense_attention(&qc, &kc, &vc, scale)?
            };
            bands.low_compressed = true;
        }
        Band::Mid => {
            if let Some(pattern) = &prep.pattern {
                bands.mid = block_sparse_attention(&q[1], &k[1], &v[1], pattern, scale)?;
            }
        }
        Band::High => {
            if part.n_high() > 0 {
                bands.high = sliding_window_attention(&q[2], &k[2], &v[2], cfg.window, scale)?;
            }
        }
    }

    if cfg.exchange {
        apply_exchange(cfg, weights, &mut bands, assigned, scale)?;
    }

    if bands.low_compressed {
        bands.low = expand_low(&bands.low, part.n_low(), factor, &weights.expand_map)?;
        bands.low_compressed = false;
    }
    Ok(bands)
}

/// Residual summary-token exchange for the head's assigned band: the band's
/// tokens attend to the `2m` summaries pooled from the other two bands.
fn apply_exchange(
    cfg: &LayerConfig,
    weights: &LayerWeights,
    bands: &mut HeadBands,
    assigned: Band,
    scale: f64,
) -> Result<()> {
    let m = cfg.summary_tokens;
    let summaries = |band: Band, tokens: &Matrix| -> Result<Matrix> {
        let projection = match band {
            Band::Low => &weights.summary_low,
            Band::Mid => &weights.summary_mid,
            Band::High => &weights.summary_high,
        };
        band_summaries(tokens, m, projection)
    };
    let foreign = match assigned {
        Band::Low => Matrix::vstack(&[
            &summaries(Band::Mid, &bands.mid)?,
            &summaries(Band::High, &bands.high)?,
        ])?,
        Band::Mid => Matrix::vstack(&[
            &summaries(Band::Low, &bands.low)?,
            &summaries(Band::High, &bands.high)?,
        ])?,
        Band::High => Matrix::vstack(&[
            &summaries(Band::Low, &bands.low)?,
            &summaries(Band::Mid, &bands.mid)?,
        ])?,
    };
    let target = match assigned {
        Band::Low => &mut bands.low,
        Band::Mid => &mut bands.mid,
        Band::High => &mut bands.high,
    };
    if foreign.rows() == 0 || target.rows() == 0 {
        return Ok(());
    }
    let delta = dense_attention(target, &foreign, &foreign, scale)?;
    *target = target.add(&delta)?;
    Ok(())
}

/// Full layer forward pass for one timestep.
pub fn forward(
    cfg: &LayerConfig,
    weights: &LayerWeights,
    x: &Tensor4,
    timestep: u64,
) -> Result<Tensor4> {
    weights.validate(cfg)?;
    let prep = prepare(cfg)?;
    check_input(cfg, x)?;
    let spectra = project_and_transform(cfg, weights, &prep.plan, x)?;
    let decision = routing_decision(cfg, weights, &spectra, &prep.part, timestep)?;

    let n = cfg.num_tokens();
    let mut merged = Matrix::zeros(n, cfg.d_model);
    for head in 0..cfg.n_heads {
        let assigned = band_for_head(head, decision.heads);
        let bands = run_head(cfg, weights, &prep, &spectra, head, assigned)?;
        let spectral_out = scatter_bands(&bands.low, &bands.mid, &bands.high, &prep.part)?;
        let token_out = spectral::inverse(&prep.plan, &spectral_out)?;
        merged.set_columns(head * cfg.d_k, &token_out.as_token_matrix());
    }
    let projected = merged.matmul(&weights.wo)?;
    Tensor4::from_token_matrix(cfg.t, cfg.h, cfg.w, &projected)
}

/// Standard multi-head dense attention over the flattened tokens with the
/// same projections — no transform, no bands.
pub fn dense_reference_forward(
    cfg: &LayerConfig,
    weights: &LayerWeights,
    x: &Tensor4,
) -> Result<Tensor4> {
    weights.validate(cfg)?;
    cfg.validate()?;
    check_input(cfg, x)?;
    let xm = x.as_token_matrix();
    let q_full = xm.matmul(&weights.wq)?;
    let k_full = xm.matmul(&weights.wk)?;
    let v_full = xm.matmul(&weights.wv)?;
    let mut merged = Matrix::zeros(cfg.num_tokens(), cfg.d_model);
    for head in 0..cfg.n_heads {
        let start = head * cfg.d_k;
        let out = dense_attention(
            &q_full.columns(start, cfg.d_k),
            &k_full.columns(start, cfg.d_k),
            &v_full.columns(start, cfg.d_k),
            cfg.scale(),
        )?;
        merged.set_columns(start, &out);
    }
    let projected = merged.matmul(&weights.wo)?;
    Tensor4::from_token_matrix(cfg.t, cfg.h, cfg.w, &projected)
}

/// Band-resolved error between a reference output and an approximate one:
/// the difference is transformed, gathered per band, and each band's
/// Frobenius norm reported alongside the direct total.
pub fn approximation_report(
    y_full: &Tensor4,
    y_freq: &Tensor4,
    plan: &SpectralPlan,
    part: &BandPartition,
) -> Result<ApproxReport> {
    let delta = y_full.sub(y_freq)?;
    let total_error = delta.frobenius_norm();
    let spectral_delta = spectral::forward(plan, &delta)?;
    let eps = |band: Band| -> Result<f64> {
        Ok(gather_band(&spectral_delta, part, band)?.frobenius_norm())
    };
    Ok(ApproxReport {
        total_error,
        eps_low: eps(Band::Low)?,
        eps_mid: eps(Band::Mid)?,
        eps_high: eps(Band::High)?,
    })
}

/// Executable per-branch interaction counts for the config's band sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchInteractions {
    pub low: u128,
    pub mid: u128,
    pub high: u128,
}

impl BranchInteractions {
    pub fn total(&self) -> u128 {
        self.low + self.mid + self.high
    }
}

/// Count the (query, key) pairs each executable branch evaluates under the
/// config: dense over compressed low tokens, the generated block-sparse
/// pattern over the mid band, and the clipped sliding window over the high
/// band.
pub fn branch_interactions(cfg: &LayerConfig) -> Result<BranchInteractions> {
    use crate::attention::{count_interactions, AttentionKind};
    cfg.validate()?;
    let part = build_partition(cfg.t, cfg.h, cfg.w, &cfg.band)?;
    let low = count_interactions(&AttentionKind::Dense {
        n: part.n_low_compressed(),
    });
    let mid = if part.n_mid() > 0 {
        let pattern = make_pattern(part.n_mid(), DEFAULT_BLOCK, cfg.k_mid);
        count_interactions(&AttentionKind::BlockSparse(&pattern))
    } else {
        0
    };
    let high = count_interactions(&AttentionKind::Window {
        n: part.n_high(),
        w: cfg.window,
    });
    Ok(BranchInteractions { low, mid, high })
}

/// Saturation-mode forward composed directly from the module operations:
/// per head, dense attention inside the assigned band (through the same
/// compression maps), identity pass-through elsewhere. Used by the demo's
/// self-consistency check; meaningful when the config is saturated.
pub fn composed_saturation_forward(
    cfg: &LayerConfig,
    weights: &LayerWeights,
    x: &Tensor4,
    timestep: u64,
) -> Result<Tensor4> {
    weights.validate(cfg)?;
    let prep = prepare(cfg)?;
    check_input(cfg, x)?;
    let spectra = project_and_transform(cfg, weights, &prep.plan, x)?;
    let decision = routing_decision(cfg, weights, &spectra, &prep.part, timestep)?;
    let factor = cfg.band.compression;

    let mut merged = Matrix::zeros(cfg.num_tokens(), cfg.d_model);
    for head in 0..cfg.n_heads {
        let assigned = band_for_head(head, decision.heads);
        let mut outs: Vec<Matrix> = Band::ALL
            .iter()
            .map(|&b| gather_band(&spectra.v[head], &prep.part, b))
            .collect::<Result<_>>()?;
        let q = gather_band(&spectra.q[head], &prep.part, assigned)?;
        let k = gather_band(&spectra.k[head], &prep.part, assigned)?;
        let v = gather_band(&spectra.v[head], &prep.part, assigned)?;
        let slot = assigned.index();
        outs[slot] = match assigned {
            Band::Low => {
                let qc = compress_low(&q, factor, &weights.compress_q[head])?;
                let kc = compress_low(&k, factor, &weights.compress_k[head])?;
                let vc = compress_low(&v, factor, &weights.compress_v[head])?;
                let y = if qc.rows() == 0 {
                    qc
                } else {
                    dense_attention(&qc, &kc, &vc, prep.scale)?
                };
                expand_low(&y, prep.part.n_low(), factor, &weights.expand_map)?
            }
            _ => {
                if q.rows() == 0 {
                    q
                } else {
                    dense_attention(&q, &k, &v, prep.scale)?
                }
            }
        };
        let spectral_out = scatter_bands(&outs[0], &outs[1], &outs[2], &prep.part)?;
        let token_out = spectral::inverse(&prep.plan, &spectral_out)?;
        merged.set_columns(head * cfg.d_k, &token_out.as_token_matrix());
    }
    let projected = merged.matmul(&weights.wo)?;
    Tensor4::from_token_matrix(cfg.t, cfg.h, cfg.w, &projected)
}
