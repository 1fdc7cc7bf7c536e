//! Seeded pseudo-random initialization.
//!
//! The generator is fixed so that golden values stay portable:
//!
//! * integer stream: SplitMix64 — `state += 0x9E3779B97F4A7C15`, then the
//!   output is mixed with the standard two xor-multiply rounds
//!   (`0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`) and a final `>> 31` xor;
//! * uniforms: the top 53 bits mapped into `(0, 1]`;
//! * normals: Box–Muller on two uniforms, with the second value of each
//!   pair cached for the next draw.
//!
//! Identical seeds therefore give bitwise-identical tensors across runs.

use crate::tensor::{Matrix, Shape4, Tensor4};

/// Deterministic SplitMix64-based generator with Box–Muller normals.
#[derive(Debug, Clone)]
pub struct SeededRng {
    state: u64,
    cached_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed,
            cached_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `(0, 1]`; never zero, so `ln` below is safe.
    pub fn next_uniform(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) / (1u64 << 53) as f64
    }

    /// Standard normal draw via Box–Muller.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Matrix of seeded normal draws scaled by `scale`.
pub fn seeded_matrix(rows: usize, cols: usize, seed: u64, scale: f64) -> Matrix {
    let mut rng = SeededRng::new(seed);
    let mut m = Matrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m.set(r, c, rng.next_normal() * scale);
        }
    }
    m
}

/// Tensor of seeded normal draws scaled by `scale`.
pub fn seeded_tensor(shape: Shape4, seed: u64, scale: f64) -> Tensor4 {
    let mut rng = SeededRng::new(seed);
    let (t, h, w, c) = shape;
    let data = (0..t * h * w * c)
        .map(|_| rng.next_normal() * scale)
        .collect();
    Tensor4::from_vec(shape, data).expect("seeded tensor shape is consistent")
}

/// Identity plus seeded normal noise, used for near-identity linear maps.
pub fn seeded_near_identity(n: usize, seed: u64, noise: f64) -> Matrix {
    let mut m = seeded_matrix(n, n, seed, noise);
    for i in 0..n {
        m.set(i, i, m.get(i, i) + 1.0);
    }
    m
}
