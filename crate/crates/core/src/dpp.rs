//! Fixed-rank determinantal point process sampling.
//!
//! A draw has two stages. The eigen-indicator set `S` (`|S| = n`) follows the
//! conditional Bernoulli law `P(S) ∝ prod_{k in S} lambda_k`, sampled
//! sequentially with the `P(j, r)` ratios of suffix elementary symmetric
//! polynomials. The point locations then follow the projection DPP spanned by
//! the eigenvectors in `S`.

use rand::Rng;

use crate::design::{Design, Provenance};
use crate::error::{DesignError, Result};
use crate::kernel::{eigendecompose, CandidateSet, EigenSystem, KernelMatrix};
use crate::linalg::{log_det_psd, submatrix, LogDet};

/// Weights below this are rounding noise; a step with no weight above it is degenerate.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// Suffix elementary-symmetric-polynomial tables for the conditional Bernoulli sampler.
///
/// `R(j, S_k^c)` with `S_k^c = {k+1, ..., N}` (1-based) is stored as its natural
/// logarithm for `0 <= k <= N`, `0 <= j <= n`. Entries are built with the
/// subtraction-free recurrence `e_j(C ∪ {i}) = e_j(C) + lambda_i e_{j-1}(C)`,
/// which stays exact in log space.
#[derive(Debug, Clone)]
pub struct CBTables {
    lambdas: Vec<f64>,
    n: usize,
    log_r: Vec<f64>,
}

impl CBTables {
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn idx(&self, k: usize, j: usize) -> usize {
        k * (self.n + 1) + j
    }

    /// `ln R(j, S_k^c)`; `None` when `j` exceeds the tabulated cardinality.
    pub fn log_r(&self, j: usize, k: usize) -> Option<f64> {
        let big_n = self.lambdas.len();
        assert!(k <= big_n, "suffix start {k} beyond N = {big_n}");
        if j > big_n - k {
            return Some(f64::NEG_INFINITY);
        }
        if j > self.n {
            return None;
        }
        Some(self.log_r[self.idx(k, j)])
    }

    /// `R(j, S_k^c)`, the elementary symmetric polynomial `e_j` of
    /// `lambda_{k+1}, ..., lambda_N`.
    pub fn r_value(&self, j: usize, k: usize) -> Option<f64> {
        self.log_r(j, k).map(f64::exp)
    }

    /// Inclusion probability `P(j, r)` of eigen-index `j` (1-based) given `r`
    /// earlier inclusions.
    pub fn inclusion_probability(&self, j: usize, r: usize) -> f64 {
        assert!(j >= 1 && j <= self.lambdas.len());
        if r >= self.n {
            return 0.0;
        }
        let need = self.n - r;
        let denom = self.log_r[self.idx(j - 1, need)];
        if denom == f64::NEG_INFINITY {
            return 0.0;
        }
        let lam = self.lambdas[j - 1];
        if lam == 0.0 {
            return 0.0;
        }
        let num = lam.ln() + self.log_r[self.idx(j, need - 1)];
        (num - denom).exp().clamp(0.0, 1.0)
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Tabulates the suffix sums needed by [`sample_conditional_bernoulli`].
///
/// Fails when `n > N`, when any eigenvalue is negative, or when fewer than `n`
/// eigenvalues are positive (no size-`n` set has positive probability).
pub fn build_cb_tables(lambdas: &[f64], n: usize) -> Result<CBTables> {
    let big_n = lambdas.len();
    if n > big_n {
        return Err(DesignError::Cardinality {
            n,
            available: big_n,
        });
    }
    if let Some(&bad) = lambdas.iter().find(|&&l| !(l >= 0.0) || !l.is_finite()) {
        return Err(DesignError::NegativeWeight(bad));
    }
    let width = n + 1;
    let mut log_r = vec![f64::NEG_INFINITY; (big_n + 1) * width];
    log_r[big_n * width] = 0.0;
    for k in (0..big_n).rev() {
        let ln_lam = lambdas[k].ln();
        log_r[k * width] = 0.0;
        for j in 1..=n.min(big_n - k) {
            let without = log_r[(k + 1) * width + j];
            let with = ln_lam + log_r[(k + 1) * width + j - 1];
            log_r[k * width + j] = log_add_exp(without, with);
        }
    }
    if log_r[n] == f64::NEG_INFINITY {
        let positive = lambdas.iter().filter(|&&l| l > 0.0).count();
        return Err(DesignError::Cardinality {
            n,
            available: positive,
        });
    }
    Ok(CBTables {
        lambdas: lambdas.to_vec(),
        n,
        log_r,
    })
}

/// Draws `S` with `|S| = n` and `P(S) ∝ prod_{k in S} lambda_k`.
///
/// Returned indices are 0-based eigen-indices in ascending order.
pub fn sample_conditional_bernoulli<R: Rng + ?Sized>(tables: &CBTables, rng: &mut R) -> Vec<usize> {
    let big_n = tables.lambdas.len();
    let n = tables.n;
    let mut selected = Vec::with_capacity(n);
    for j in 1..=big_n {
        let r = selected.len();
        if r == n {
            break;
        }
        // Once the remaining indices are exactly the remaining quota, all are taken.
        if big_n - j + 1 == n - r {
            selected.extend((j - 1)..big_n);
            break;
        }
        let p = tables.inclusion_probability(j, r);
        if rng.random::<f64>() < p {
            selected.push(j - 1);
        }
    }
    selected
}

/// Greedy/sampling state of the projection DPP spanned by chosen eigenvectors.
///
/// Each candidate `xi` carries `v(xi)`, its row in the selected eigenvector
/// columns. The unnormalized step weight is the squared norm of `v(xi)` after
/// projecting out the orthonormalized rows of the points already chosen, so a
/// chosen point has weight 0 afterwards and the weights sum to the number of
/// points still to draw.
#[derive(Debug, Clone)]
pub struct ProjectionWalk {
    rank: usize,
    rows: Vec<f64>,
    basis: Vec<Vec<f64>>,
    residual: Vec<f64>,
    chosen: Vec<bool>,
}

impl ProjectionWalk {
    /// `columns` are 0-based eigen-indices into `eig`.
    pub fn new(eig: &EigenSystem, columns: &[usize]) -> Result<Self> {
        let big_n = eig.size();
        let rank = columns.len();
        let vectors = eig.eigenvectors();
        let mut seen = vec![false; big_n];
        for &c in columns {
            if c >= big_n {
                return Err(DesignError::IndexOutOfRange {
                    index: c,
                    size: big_n,
                });
            }
            if seen[c] {
                return Err(DesignError::RepeatedIndex(c));
            }
            seen[c] = true;
        }
        let mut rows = vec![0.0; big_n * rank];
        let mut residual = vec![0.0; big_n];
        for i in 0..big_n {
            let mut norm2 = 0.0;
            for (t, &c) in columns.iter().enumerate() {
                let v = vectors[(i, c)];
                rows[i * rank + t] = v;
                norm2 += v * v;
            }
            residual[i] = norm2;
        }
        Ok(ProjectionWalk {
            rank,
            rows,
            basis: Vec::with_capacity(rank),
            residual,
            chosen: vec![false; big_n],
        })
    }

    /// Points still to be drawn.
    pub fn remaining(&self) -> usize {
        self.rank - self.basis.len()
    }

    /// Unnormalized residual weights (sum equals [`remaining`](Self::remaining)).
    pub fn raw_weights(&self) -> &[f64] {
        &self.residual
    }

    /// Normalized step distribution; chosen points get exactly 0.
    pub fn step_weights(&self) -> Result<Vec<f64>> {
        let step = self.basis.len();
        let mut w = Vec::with_capacity(self.residual.len());
        for (i, &r) in self.residual.iter().enumerate() {
            if self.chosen[i] {
                w.push(0.0);
            } else if r < 0.0 {
                if r < -WEIGHT_FLOOR {
                    return Err(DesignError::NegativeWeight(r));
                }
                w.push(0.0);
            } else {
                w.push(r);
            }
        }
        let max = w.iter().cloned().fold(0.0_f64, f64::max);
        if max < WEIGHT_FLOOR {
            return Err(DesignError::DegenerateSampler { step });
        }
        let total: f64 = w.iter().sum();
        for x in &mut w {
            *x /= total;
        }
        Ok(w)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.rank..(i + 1) * self.rank]
    }

    /// Adds candidate row `pos` to the pattern and projects its direction out.
    pub fn select(&mut self, pos: usize) {
        assert!(self.remaining() > 0, "projection walk already complete");
        assert!(!self.chosen[pos], "candidate {pos} already chosen");
        let mut e = self.row(pos).to_vec();
        // Two Gram-Schmidt passes keep the basis orthonormal to rounding.
        for _ in 0..2 {
            for b in &self.basis {
                let c: f64 = b.iter().zip(&e).map(|(x, y)| x * y).sum();
                for (x, y) in e.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        // A row with no residual direction leaves the projection unchanged.
        if norm * norm < WEIGHT_FLOOR {
            e.iter_mut().for_each(|x| *x = 0.0);
        } else {
            for x in &mut e {
                *x /= norm;
            }
            for i in 0..self.residual.len() {
                if self.chosen[i] {
                    continue;
                }
                let c: f64 = self.row(i).iter().zip(&e).map(|(x, y)| x * y).sum();
                self.residual[i] -= c * c;
            }
        }
        self.basis.push(e);
        self.chosen[pos] = true;
        self.residual[pos] = 0.0;
    }
}

fn draw_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Row positions (into the eigen-system) of a projection-DPP draw.
pub(crate) fn projection_positions<R: Rng + ?Sized>(
    eig: &EigenSystem,
    columns: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut walk = ProjectionWalk::new(eig, columns)?;
    let mut picked = Vec::with_capacity(columns.len());
    while walk.remaining() > 0 {
        let w = walk.step_weights()?;
        let pos = draw_index(&w, rng);
        walk.select(pos);
        picked.push(pos);
    }
    Ok(picked)
}

/// Draws point locations from the projection DPP spanned by eigenvectors `s`.
pub fn sample_projection_dpp<R: Rng + ?Sized>(
    eig: &EigenSystem,
    s: &[usize],
    candidates: &CandidateSet,
    rng: &mut R,
) -> Result<Design> {
    if s.is_empty() {
        return Err(DesignError::Cardinality {
            n: 0,
            available: eig.size(),
        });
    }
    let positions = projection_positions(eig, s, rng)?;
    let ids = positions.iter().map(|&p| eig.candidate_ids()[p]).collect();
    Design::from_indices(candidates, ids, Provenance::Sampled)
}

/// One fixed-rank DPP realization of size `n` from kernel `k`.
///
/// `k` may be a conditioned kernel over a subset of `candidates`; the returned
/// design carries candidate ids and the log-determinant of `k` on the drawn rows.
pub fn sample_fixed_rank_dpp<R: Rng + ?Sized>(
    k: &KernelMatrix,
    candidates: &CandidateSet,
    n: usize,
    rng: &mut R,
) -> Result<Design> {
    if n == 0 || n > k.size() {
        return Err(DesignError::Cardinality {
            n,
            available: k.size(),
        });
    }
    let eig = eigendecompose(k)?;
    let tables = build_cb_tables(eig.eigenvalues(), n)?;
    let s = sample_conditional_bernoulli(&tables, rng);
    let positions = projection_positions(&eig, &s, rng)?;
    let log_det = dpp_log_pmf(k, &positions)?;
    let ids = positions.iter().map(|&p| k.candidate_ids()[p]).collect();
    Ok(Design::from_indices(candidates, ids, Provenance::Sampled)?.with_log_det(log_det.value))
}

/// Unnormalized log-probability of a pattern: `ln det K[indices, indices]`.
///
/// `indices` are row positions of `k`.
pub fn dpp_log_pmf(k: &KernelMatrix, indices: &[usize]) -> Result<LogDet> {
    let n = k.size();
    let mut seen = vec![false; n];
    for &i in indices {
        if i >= n {
            return Err(DesignError::IndexOutOfRange { index: i, size: n });
        }
        if seen[i] {
            return Err(DesignError::RepeatedIndex(i));
        }
        seen[i] = true;
    }
    Ok(log_det_psd(&submatrix(k.entries(), indices, indices)))
}
