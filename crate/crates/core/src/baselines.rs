//! Classical comparators: Latin hypercube samples, the one-at-a-time exchange
//! algorithm on the entropy criterion, and uniform / clustered random patterns.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::design::{Design, Provenance};
use crate::error::{DesignError, Result};
use crate::kernel::{CandidateSet, KernelMatrix};
use crate::linalg::{log_det_psd, submatrix};

/// Where a Latin hypercube point sits inside its bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Centroid,
    Uniform,
}

impl std::str::FromStr for Placement {
    type Err = DesignError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centroid" => Ok(Placement::Centroid),
            "uniform" => Ok(Placement::Uniform),
            other => Err(DesignError::InvalidArgument(format!(
                "unknown placement `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LhsDesign {
    /// `n x d` bin labels in `1..=n`; each column is a permutation.
    pub bins: Vec<Vec<usize>>,
    pub points: Vec<Vec<f64>>,
}

pub fn lhs_design<R: Rng + ?Sized>(n: usize, d: usize, placement: Placement, rng: &mut R) -> Result<LhsDesign> {
    if n == 0 || d == 0 {
        return Err(DesignError::InvalidArgument(
            "LHS needs n >= 1 and d >= 1".into(),
        ));
    }
    let mut bins = vec![vec![0usize; d]; n];
    for j in 0..d {
        let mut perm: Vec<usize> = (1..=n).collect();
        perm.shuffle(rng);
        for (row, b) in bins.iter_mut().zip(perm) {
            row[j] = b;
        }
    }
    let width = 1.0 / n as f64;
    let points = bins
        .iter()
        .map(|row| {
            row.iter()
                .map(|&b| {
                    let offset = match placement {
                        Placement::Centroid => 0.5,
                        Placement::Uniform => rng.random::<f64>(),
                    };
                    (b as f64 - 1.0 + offset) * width
                })
                .collect()
        })
        .collect();
    Ok(LhsDesign { bins, points })
}

/// Exchange run: best design found and the log-det after every iteration.
#[derive(Debug, Clone)]
pub struct ExchangeResult {
    pub design: Design,
    /// `trace[0]` is the initial design, `trace[t]` the value after iteration `t`.
    pub trace: Vec<f64>,
}

fn log_det_of(k: &KernelMatrix, rows: &[usize]) -> f64 {
    log_det_psd(&submatrix(k.entries(), rows, rows)).value
}

/// One-at-a-time exchange maximizing `ln det` of the design correlation matrix.
///
/// Starts from a uniform random `n`-subset of the rows of `k`. Each iteration
/// draws a design slot and an out-of-design row uniformly and keeps the swap
/// only if the log-determinant strictly increases.
pub fn fedorov_exchange<R: Rng + ?Sized>(
    k: &KernelMatrix,
    candidates: &CandidateSet,
    n: usize,
    iters: usize,
    rng: &mut R,
) -> Result<ExchangeResult> {
    let big_n = k.size();
    if n == 0 || n > big_n {
        return Err(DesignError::Cardinality {
            n,
            available: big_n,
        });
    }
    let mut rows: Vec<usize> = rand::seq::index::sample(rng, big_n, n).into_vec();
    let mut in_design = vec![false; big_n];
    for &r in &rows {
        in_design[r] = true;
    }
    let mut current = log_det_of(k, &rows);
    let mut trace = Vec::with_capacity(iters + 1);
    trace.push(current);
    for _ in 0..iters {
        if n < big_n {
            let slot = rng.random_range(0..n);
            let incoming = loop {
                let c = rng.random_range(0..big_n);
                if !in_design[c] {
                    break c;
                }
            };
            let outgoing = rows[slot];
            rows[slot] = incoming;
            let proposal = log_det_of(k, &rows);
            if proposal > current {
                current = proposal;
                in_design[outgoing] = false;
                in_design[incoming] = true;
            } else {
                rows[slot] = outgoing;
            }
        }
        trace.push(current);
    }
    let ids = rows.iter().map(|&r| k.candidate_ids()[r]).collect();
    let design = Design::from_indices(candidates, ids, Provenance::Exchange)?.with_log_det(current);
    Ok(ExchangeResult { design, trace })
}

/// Uniform sample of `n` distinct candidates.
pub fn random_design<R: Rng + ?Sized>(candidates: &CandidateSet, n: usize, rng: &mut R) -> Result<Design> {
    if n > candidates.len() {
        return Err(DesignError::Cardinality {
            n,
            available: candidates.len(),
        });
    }
    let idx = rand::seq::index::sample(rng, candidates.len(), n).into_vec();
    Design::from_indices(candidates, idx, Provenance::Random)
}

/// `n` points with i.i.d. normal coordinates, redrawn until inside `[0,1]^d`.
pub fn clustered_design<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    mean: f64,
    sd: f64,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if n == 0 || d == 0 {
        return Err(DesignError::InvalidArgument(
            "clustered design needs n >= 1 and d >= 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&mean) {
        return Err(DesignError::InvalidArgument(format!(
            "cluster mean {mean} outside [0, 1]"
        )));
    }
    let normal = Normal::new(mean, sd)
        .map_err(|e| DesignError::InvalidArgument(format!("bad cluster sd {sd}: {e}")))?;
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let p: Vec<f64> = (0..d).map(|_| normal.sample(rng)).collect();
        if p.iter().all(|v| (0.0..=1.0).contains(v)) {
            points.push(p);
        }
    }
    Ok(points)
}
