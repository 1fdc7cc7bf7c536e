//! Band-specific attention operators: dense, block-sparse (block-local plus
//! strided) and sliding-window, with exact interaction counting.
//!
//! The sparse operators restrict the softmax to their allowed key sets and
//! iterate keys in ascending index order, so a full pattern or a full window
//! reduces to dense attention bitwise.

use crate::tensor::{softmax_rows, Matrix};
use crate::{Error, Result};

/// Default key/query block size for the block-sparse pattern.
pub const DEFAULT_BLOCK: usize = 16;

fn check_qkv(q: &Matrix, k: &Matrix, v: &Matrix) -> Result<()> {
    if q.cols() != k.cols() {
        return Err(Error::Shape(format!(
            "query width {} != key width {}",
            q.cols(),
            k.cols()
        )));
    }
    if k.rows() != v.rows() {
        return Err(Error::Shape(format!(
            "key count {} != value count {}",
            k.rows(),
            v.rows()
        )));
    }
    if k.rows() == 0 {
        return Err(Error::Shape("attention requires at least one key".into()));
    }
    Ok(())
}

/// `softmax(q k^T * scale) v`.
pub fn dense_attention(q: &Matrix, k: &Matrix, v: &Matrix, scale: f64) -> Result<Matrix> {
    check_qkv(q, k, v)?;
    let scores = q.matmul_transpose_b(k)?;
    softmax_rows(&scores, scale).matmul(v)
}

/// Block-local plus strided sparse pattern over `n` tokens.
#[derive(Debug, Clone)]
pub struct SparsePattern {
    n: usize,
    block: usize,
    /// Per query block: sorted, deduplicated key-block indices. Always
    /// contains the query block itself.
    allowed: Vec<Vec<usize>>,
    target_degree: usize,
    stride: usize,
}

impl SparsePattern {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn target_degree(&self) -> usize {
        self.target_degree
    }

    pub fn allowed(&self, query_block: usize) -> &[usize] {
        &self.allowed[query_block]
    }

    pub fn num_blocks(&self) -> usize {
        self.allowed.len()
    }

    fn block_len(&self, kb: usize) -> usize {
        self.block.min(self.n - kb * self.block)
    }

    /// Exact number of (query, key) pairs the pattern evaluates.
    pub fn interaction_count(&self) -> u128 {
        let mut total: u128 = 0;
        for qb in 0..self.num_blocks() {
            let q_rows = self.block_len(qb) as u128;
            let keys: u128 = self.allowed[qb]
                .iter()
                .map(|&kb| self.block_len(kb) as u128)
                .sum();
            total += q_rows * keys;
        }
        total
    }

    /// Average keys per query.
    pub fn average_degree(&self) -> f64 {
        self.interaction_count() as f64 / self.n as f64
    }
}

/// Build the block-local plus strided pattern. Every query block attends to
/// itself and its two neighbors plus every `s`-th key block starting at
/// block 0, with `s` the smallest stride whose average degree stays within
/// `target_degree`. A target at or above `n` yields the full pattern.
pub fn make_pattern(n: usize, block: usize, target_degree: usize) -> SparsePattern {
    assert!(n >= 1 && block >= 1, "make_pattern requires n, block >= 1");
    let nb = n.div_ceil(block);

    let build = |stride: usize| -> Vec<Vec<usize>> {
        (0..nb)
            .map(|qb| {
                let mut set: Vec<usize> = Vec::new();
                if qb > 0 {
                    set.push(qb - 1);
                }
                set.push(qb);
                if qb + 1 < nb {
                    set.push(qb + 1);
                }
                let mut kb = 0;
                while kb < nb {
                    set.push(kb);
                    kb += stride;
                }
                set.sort_unstable();
                set.dedup();
                set
            })
            .collect()
    };

    let pattern_with = |stride: usize| SparsePattern {
        n,
        block,
        allowed: build(stride),
        target_degree,
        stride,
    };

    if target_degree >= n {
        return pattern_with(1); // stride 1 saturates to the full pattern
    }
    for stride in 1..=nb {
        let p = pattern_with(stride);
        if p.average_degree() <= target_degree as f64 {
            return p;
        }
    }
    pattern_with(nb)
}

/// Block-sparse attention: each query's softmax runs over the keys of its
/// allowed blocks only; disallowed keys contribute exactly zero weight.
pub fn block_sparse_attention(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    pattern: &SparsePattern,
    scale: f64,
) -> Result<Matrix> {
    check_qkv(q, k, v)?;
    if q.rows() != pattern.n() || k.rows() != pattern.n() {
        return Err(Error::Shape(format!(
            "pattern over {} tokens applied to {} queries / {} keys",
            pattern.n(),
            q.rows(),
            k.rows()
        )));
    }
    let n = pattern.n();
    let block = pattern.block();
    let mut out = Matrix::zeros(n, v.cols());
    let mut keys: Vec<usize> = Vec::new();
    let mut scores: Vec<f64> = Vec::new();
    for i in 0..n {
        let qb = i / block;
        keys.clear();
        for &kb in pattern.allowed(qb) {
            let start = kb * block;
            let end = ((kb + 1) * block).min(n);
            keys.extend(start..end);
        }
        scores.clear();
        let mut mx = f64::NEG_INFINITY;
        for &j in &keys {
            let mut dot = 0.0;
            for d in 0..q.cols() {
                dot += q.get(i, d) * k.get(j, d);
            }
            let z = dot * scale;
            scores.push(z);
            if z > mx {
                mx = z;
            }
        }
        let mut sum = 0.0;
        for z in scores.iter_mut() {
            *z = (*z - mx).exp();
            sum += *z;
        }
        for (&j, &e) in keys.iter().zip(scores.iter()) {
            let weight = e / sum;
            for c in 0..v.cols() {
                out.set(i, c, out.get(i, c) + weight * v.get(j, c));
            }
        }
    }
    Ok(out)
}

/// Key range `[lo, hi)` for query `i` under a width-`w` window: at most `w`
/// keys, asymmetric clipping at the edges, self always included.
pub fn window_bounds(i: usize, n: usize, w: usize) -> (usize, usize) {
    let lo = i.saturating_sub(w / 2);
    let hi = (i + w.div_ceil(2)).min(n);
    (lo, hi)
}

/// Sliding-window attention: query `i` attends to keys in
/// `[i - floor(w/2), i + ceil(w/2) - 1]`, clipped to the sequence.
pub fn sliding_window_attention(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    w: usize,
    scale: f64,
) -> Result<Matrix> {
    check_qkv(q, k, v)?;
    if w == 0 {
        return Err(Error::Argument("window width must be >= 1".into()));
    }
    if q.rows() != k.rows() {
        return Err(Error::Shape(format!(
            "window attention expects matching query/key counts, got {} / {}",
            q.rows(),
            k.rows()
        )));
    }
    let n = q.rows();
    let mut out = Matrix::zeros(n, v.cols());
    let mut scores: Vec<f64> = Vec::new();
    for i in 0..n {
        let (lo, hi) = window_bounds(i, n, w);
        scores.clear();
        let mut mx = f64::NEG_INFINITY;
        for j in lo..hi {
            let mut dot = 0.0;
            for d in 0..q.cols() {
                dot += q.get(i, d) * k.get(j, d);
            }
            let z = dot * scale;
            scores.push(z);
            if z > mx {
                mx = z;
            }
        }
        let mut sum = 0.0;
        for z in scores.iter_mut() {
            *z = (*z - mx).exp();
            sum += *z;
        }
        for (offset, j) in (lo..hi).enumerate() {
            let weight = scores[offset] / sum;
            for c in 0..v.cols() {
                out.set(i, c, out.get(i, c) + weight * v.get(j, c));
            }
        }
    }
    Ok(out)
}

/// Executable attention shape for exact pair counting.
#[derive(Debug, Clone)]
pub enum AttentionKind<'a> {
    Dense { n: usize },
    Window { n: usize, w: usize },
    BlockSparse(&'a SparsePattern),
}

/// Exact number of (query, key) pairs the given operator evaluates.
pub fn count_interactions(kind: &AttentionKind<'_>) -> u128 {
    match kind {
        AttentionKind::Dense { n } => (*n as u128) * (*n as u128),
        AttentionKind::Window { n, w } => {
            let mut total: u128 = 0;
            for i in 0..*n {
                let (lo, hi) = window_bounds(i, *n, *w);
                total += (hi - lo) as u128;
            }
            total
        }
        AttentionKind::BlockSparse(p) => p.interaction_count(),
    }
}

#[cfg(test)]
mod tests {
    // oracle code below indexes with explicit loops on purpose
    #![allow(clippy::needless_range_loop)]

    use super::*;
    use crate::rng::{seeded_matrix, SeededRng};

    /// Brute-force oracle: explicit loops, explicit exp/sums, optional
    /// 0 / -inf mask.
    fn masked_dense_oracle(
        q: &Matrix,
        k: &Matrix,
        v: &Matrix,
        scale: f64,
        mask: Option<&Matrix>,
    ) -> Matrix {
        let n = q.rows();
        let m = k.rows();
        let mut out = Matrix::zeros(n, v.cols());
        for i in 0..n {
            let mut z = vec![0.0f64; m];
            for (j, zj) in z.iter_mut().enumerate() {
                let mut dot = 0.0;
                for d in 0..q.cols() {
                    dot += q.get(i, d) * k.get(j, d);
                }
                *zj = dot * scale
                    + mask.map(|mk| mk.get(i, j)).unwrap_or(0.0);
            }
            let mx = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = z.iter().map(|&x| (x - mx).exp()).collect();
            let sum: f64 = e.iter().sum();
            for c in 0..v.cols() {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += e[j] / sum * v.get(j, c);
                }
                out.set(i, c, acc);
            }
        }
        out
    }

    fn window_mask(n: usize, w: usize) -> Matrix {
        Matrix::from_fn(n, n, |i, j| {
            let (lo, hi) = window_bounds(i, n, w);
            if j >= lo && j < hi {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        })
    }

    fn pattern_mask(p: &SparsePattern) -> Matrix {
        Matrix::from_fn(p.n(), p.n(), |i, j| {
            if p.allowed(i / p.block()).contains(&(j / p.block())) {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        })
    }

    #[test]
    fn dense_single_key_returns_value_row() {
        let q = seeded_matrix(4, 3, 1, 1.0);
        let k = seeded_matrix(1, 3, 2, 1.0);
        let v = seeded_matrix(1, 3, 3, 1.0);
        let out = dense_attention(&q, &k, &v, 1.0).unwrap();
        for i in 0..4 {
            for c in 0..3 {
                assert!((out.get(i, c) - v.get(0, c)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dense_identical_keys_average_values() {
        let q = seeded_matrix(2, 3, 4, 1.0);
        let key_row = seeded_matrix(1, 3, 5, 1.0);
        let k = Matrix::from_fn(5, 3, |_, c| key_row.get(0, c));
        let v = seeded_matrix(5, 2, 6, 1.0);
        let out = dense_attention(&q, &k, &v, 1.0).unwrap();
        for i in 0..2 {
            for c in 0..2 {
                let mean: f64 = (0..5).map(|j| v.get(j, c)).sum::<f64>() / 5.0;
                assert!((out.get(i, c) - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_matches_brute_force_oracle() {
        let q = seeded_matrix(6, 4, 7, 1.0);
        let k = seeded_matrix(6, 4, 8, 1.0);
        let v = seeded_matrix(6, 4, 9, 1.0);
        let scale = 0.5;
        let got = dense_attention(&q, &k, &v, scale).unwrap();
        let want = masked_dense_oracle(&q, &k, &v, scale, None);
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn dense_width_mismatch_errors() {
        let q = Matrix::zeros(2, 3);
        let k = Matrix::zeros(2, 4);
        let v = Matrix::zeros(2, 4);
        assert!(dense_attention(&q, &k, &v, 1.0).is_err());
    }

    #[test]
    fn pattern_saturates_when_target_covers_n() {
        let p = make_pattern(64, 16, 64);
        assert_eq!(p.num_blocks(), 4);
        for qb in 0..4 {
            assert_eq!(p.allowed(qb), &[0, 1, 2, 3]);
        }
        assert_eq!(p.interaction_count(), 64 * 64);
    }

    #[test]
    fn pattern_single_block_is_full() {
        let p = make_pattern(16, 16, 4);
        assert_eq!(p.num_blocks(), 1);
        assert_eq!(p.allowed(0), &[0]);
        assert_eq!(p.interaction_count(), 256);
    }

    #[test]
    fn pattern_degree_budget_at_4096() {
        let p = make_pattern(4096, 16, 256);
        let avg = p.average_degree();
        assert!(avg <= 320.0, "average degree {avg}");
        assert!(avg >= 128.0, "average degree {avg}");
        for qb in 0..p.num_blocks() {
            assert!(p.allowed(qb).contains(&qb), "self block missing at {qb}");
        }
    }

    #[test]
    fn pattern_self_and_neighbors_present() {
        let p = make_pattern(200, 16, 80);
        for qb in 0..p.num_blocks() {
            assert!(p.allowed(qb).contains(&qb));
            if qb > 0 {
                assert!(p.allowed(qb).contains(&(qb - 1)));
            }
            if qb + 1 < p.num_blocks() {
                assert!(p.allowed(qb).contains(&(qb + 1)));
            }
            assert!(p.allowed(qb).contains(&0), "strided anchor block missing");
        }
    }

    #[test]
    fn block_sparse_full_pattern_equals_dense() {
        let n = 48;
        let q = seeded_matrix(n, 4, 11, 1.0);
        let k = seeded_matrix(n, 4, 12, 1.0);
        let v = seeded_matrix(n, 4, 13, 1.0);
        let p = make_pattern(n, 16, n);
        let sparse = block_sparse_attention(&q, &k, &v, &p, 0.5).unwrap();
        let dense = dense_attention(&q, &k, &v, 0.5).unwrap();
        assert!(sparse.max_abs_diff(&dense) < 1e-12);
    }

    #[test]
    fn block_sparse_self_block_equals_dense_when_block_is_n() {
        let n = 20;
        let q = seeded_matrix(n, 3, 14, 1.0);
        let k = seeded_matrix(n, 3, 15, 1.0);
        let v = seeded_matrix(n, 3, 16, 1.0);
        let p = make_pattern(n, n, 1); // single block => self-only => full
        let sparse = block_sparse_attention(&q, &k, &v, &p, 1.0).unwrap();
        let dense = dense_attention(&q, &k, &v, 1.0).unwrap();
        assert!(sparse.max_abs_diff(&dense) < 1e-12);
    }

    #[test]
    fn block_sparse_matches_masked_oracle() {
        let n = 64;
        let q = seeded_matrix(n, 4, 17, 1.0);
        let k = seeded_matrix(n, 4, 18, 1.0);
        let v = seeded_matrix(n, 4, 19, 1.0);
        let p = make_pattern(n, 16, 48);
        assert!(p.stride() > 1, "want a genuinely sparse pattern");
        let got = block_sparse_attention(&q, &k, &v, &p, 0.7).unwrap();
        let want = masked_dense_oracle(&q, &k, &v, 0.7, Some(&pattern_mask(&p)));
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn window_covering_sequence_equals_dense() {
        let n = 32;
        let q = seeded_matrix(n, 4, 20, 1.0);
        let k = seeded_matrix(n, 4, 21, 1.0);
        let v = seeded_matrix(n, 4, 22, 1.0);
        let windowed = sliding_window_attention(&q, &k, &v, 2 * n, 0.5).unwrap();
        let dense = dense_attention(&q, &k, &v, 0.5).unwrap();
        assert!(windowed.max_abs_diff(&dense) < 1e-12);
    }

    #[test]
    fn window_of_one_returns_own_value_row() {
        let n = 10;
        let q = seeded_matrix(n, 4, 23, 1.0);
        let k = seeded_matrix(n, 4, 24, 1.0);
        let v = seeded_matrix(n, 4, 25, 1.0);
        let out = sliding_window_attention(&q, &k, &v, 1, 1.0).unwrap();
        for i in 0..n {
            for c in 0..4 {
                assert!((out.get(i, c) - v.get(i, c)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn window_matches_masked_oracle() {
        let n = 32;
        let w = 8;
        let q = seeded_matrix(n, 4, 26, 1.0);
        let k = seeded_matrix(n, 4, 27, 1.0);
        let v = seeded_matrix(n, 4, 28, 1.0);
        let got = sliding_window_attention(&q, &k, &v, w, 0.5).unwrap();
        let want = masked_dense_oracle(&q, &k, &v, 0.5, Some(&window_mask(n, w)));
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn randomized_oracle_equivalence_50_instances_each() {
        let mut rng = SeededRng::new(999);
        for trial in 0..50 {
            let n = 16 + (rng.next_u64() % 113) as usize; // up to 128
            let d = 2 + (rng.next_u64() % 6) as usize;
            let q = seeded_matrix(n, d, 1000 + trial, 1.0);
            let k = seeded_matrix(n, d, 2000 + trial, 1.0);
            let v = seeded_matrix(n, d, 3000 + trial, 1.0);
            let scale = 1.0 / (d as f64).sqrt();

            let w = 1 + (rng.next_u64() % (2 * n as u64)) as usize;
            let got = sliding_window_attention(&q, &k, &v, w, scale).unwrap();
            let want = masked_dense_oracle(&q, &k, &v, scale, Some(&window_mask(n, w)));
            assert!(
                got.max_abs_diff(&want) < 1e-12,
                "window trial {trial}: n={n} w={w}"
            );

            let target = 8 + (rng.next_u64() % (n as u64)) as usize;
            let p = make_pattern(n, 16, target);
            let got = block_sparse_attention(&q, &k, &v, &p, scale).unwrap();
            let want = masked_dense_oracle(&q, &k, &v, scale, Some(&pattern_mask(&p)));
            assert!(
                got.max_abs_diff(&want) < 1e-12,
                "sparse trial {trial}: n={n} target={target}"
            );
        }
    }

    #[test]
    fn outputs_are_convex_combinations_of_values() {
        let n = 24;
        let q = seeded_matrix(n, 3, 31, 1.0);
        let k = seeded_matrix(n, 3, 32, 1.0);
        let v = seeded_matrix(n, 3, 33, 1.0);
        let p = make_pattern(n, 8, 16);
        for out in [
            dense_attention(&q, &k, &v, 1.0).unwrap(),
            block_sparse_attention(&q, &k, &v, &p, 1.0).unwrap(),
            sliding_window_attention(&q, &k, &v, 5, 1.0).unwrap(),
        ] {
            for c in 0..3 {
                let lo = (0..n).map(|j| v.get(j, c)).fold(f64::INFINITY, f64::min);
                let hi = (0..n)
                    .map(|j| v.get(j, c))
                    .fold(f64::NEG_INFINITY, f64::max);
                for i in 0..n {
                    let x = out.get(i, c);
                    assert!(x >= lo - 1e-12 && x <= hi + 1e-12);
                }
            }
        }
    }

    #[test]
    fn interaction_counts_basic() {
        assert_eq!(count_interactions(&AttentionKind::Dense { n: 10 }), 100);
        assert_eq!(count_interactions(&AttentionKind::Window { n: 10, w: 1 }), 10);
        let p = make_pattern(64, 16, 64);
        assert_eq!(count_interactions(&AttentionKind::BlockSparse(&p)), 4096);
    }

    #[test]
    fn window_count_edge_correction_bound() {
        let (n, w) = (256, 64);
        let exact = count_interactions(&AttentionKind::Window { n, w });
        let model = (n * w) as u128;
        assert!(exact <= model);
        assert!(model - exact <= (w * w / 2) as u128);
    }

    #[test]
    fn pattern_average_degree_within_budget_headroom() {
        for (n, target) in [(512, 96), (1024, 128), (4096, 256)] {
            let p = make_pattern(n, 16, target);
            let cap = (target as f64 * 1.25).min(n as f64);
            assert!(
                p.average_degree() <= cap,
                "n={n} target={target} degree={}",
                p.average_degree()
            );
        }
    }
}
