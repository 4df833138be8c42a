//! Point-pattern summaries used to classify designs as regular, random or
//! clustered, plus the entropy criterion and the LHS intensity arithmetic.

use std::f64::consts::PI;

use crate::dpp::dpp_log_pmf;
use crate::error::{DesignError, Result};
use crate::kernel::KernelMatrix;
use crate::linalg::LogDet;

/// Edge handling for Ripley's K on the unit hypercube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeCorrection {
    #[default]
    None,
    /// Pair weights `1 / prod_k (1 - |x_ik - x_jk|)`.
    Translation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointPatternSummary {
    pub h_grid: Vec<f64>,
    pub f_hat: Vec<f64>,
    pub g_hat: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub k_hat: Vec<f64>,
    pub n: usize,
    pub d: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `side^d` lattice of cell centres in the unit hypercube.
pub fn reference_grid(side: usize, d: usize) -> Vec<Vec<f64>> {
    let total = side.pow(d as u32);
    (0..total)
        .map(|mut flat| {
            (0..d)
                .map(|_| {
                    let i = flat % side;
                    flat /= side;
                    (i as f64 + 0.5) / side as f64
                })
                .collect()
        })
        .collect()
}

/// Default reference-grid side for a candidate set of `n_candidates` points.
pub fn default_reference_side(n_candidates: usize) -> usize {
    ((n_candidates as f64).sqrt().ceil() as usize).max(1)
}

/// Evenly spaced abscissae `0, step, ..., max`.
pub fn linspace(max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|i| max * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Empirical CDF of `dist2` (squared distances) evaluated at each `h`.
fn ecdf_sq(mut dist2: Vec<f64>, h_grid: &[f64]) -> Vec<f64> {
    dist2.sort_by(f64::total_cmp);
    let total = dist2.len() as f64;
    h_grid
        .iter()
        .map(|&h| {
            let h2 = h * h;
            dist2.partition_point(|&d| d <= h2) as f64 / total
        })
        .collect()
}

/// Empty-space function: fraction of reference points whose nearest design
/// point lies within `h`.
pub fn f_function(design: &[Vec<f64>], reference: &[Vec<f64>], h_grid: &[f64]) -> Result<Vec<f64>> {
    if design.is_empty() {
        return Err(DesignError::UndefinedStatistic(
            "F needs a nonempty design".into(),
        ));
    }
    if reference.is_empty() {
        return Err(DesignError::UndefinedStatistic(
            "F needs a nonempty reference grid".into(),
        ));
    }
    let nearest: Vec<f64> = reference
        .iter()
        .map(|r| {
            design
                .iter()
                .map(|p| sq_dist(r, p))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(ecdf_sq(nearest, h_grid))
}

/// Nearest-neighbour function: fraction of design points whose nearest other
/// design point lies within `h`.
pub fn g_function(design: &[Vec<f64>], h_grid: &[f64]) -> Result<Vec<f64>> {
    if design.len() < 2 {
        return Err(DesignError::UndefinedStatistic(format!(
            "G needs at least 2 points, got {}",
            design.len()
        )));
    }
    let nearest: Vec<f64> = design
        .iter()
        .enumerate()
        .map(|(i, p)| {
            design
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| sq_dist(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(ecdf_sq(nearest, h_grid))
}

/// Ripley's K estimate `area / (n (n-1)) * sum_{i != j} w_ij 1(d_ij <= r)`.
pub fn ripley_k(
    design: &[Vec<f64>],
    area: f64,
    r_grid: &[f64],
    edge: EdgeCorrection,
) -> Result<Vec<f64>> {
    let n = design.len();
    if n < 2 {
        return Err(DesignError::UndefinedStatistic(format!(
            "K needs at least 2 points, got {n}"
        )));
    }
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = match edge {
                EdgeCorrection::None => 1.0,
                EdgeCorrection::Translation => {
                    let overlap: f64 = design[i]
                        .iter()
                        .zip(&design[j])
                        .map(|(a, b)| 1.0 - (a - b).abs())
                        .product();
                    1.0 / overlap
                }
            };
            pairs.push((sq_dist(&design[i], &design[j]), w));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cumulative = Vec::with_capacity(pairs.len());
    let mut acc = 0.0;
    for &(_, w) in &pairs {
        acc += w;
        cumulative.push(acc);
    }
    // Each unordered pair counts twice in the ordered sum.
    let scale = 2.0 * area / (n * (n - 1)) as f64;
    Ok(r_grid
        .iter()
        .map(|&r| {
            let r2 = r * r;
            match pairs.partition_point(|p| p.0 <= r2) {
                0 => 0.0,
                m => scale * cumulative[m - 1],
            }
        })
        .collect())
}

/// K under complete spatial randomness: the volume of the radius-`r` ball in `d` dimensions.
pub fn k_csr(r: f64, d: usize) -> f64 {
    // V_d(r) = pi^(d/2) r^d / Gamma(d/2 + 1), via the two-step recurrence.
    let unit = match d {
        0 => 1.0,
        _ => {
            let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
            let mut k = if d % 2 == 0 { 0 } else { 1 };
            while k < d {
                k += 2;
                v *= 2.0 * PI / k as f64;
            }
            v
        }
    };
    unit * r.powi(d as i32)
}

pub fn summarize(
    design: &[Vec<f64>],
    reference: &[Vec<f64>],
    h_grid: &[f64],
    r_grid: &[f64],
    edge: EdgeCorrection,
) -> Result<PointPatternSummary> {
    let d = design.first().map(|p| p.len()).unwrap_or(0);
    Ok(PointPatternSummary {
        h_grid: h_grid.to_vec(),
        f_hat: f_function(design, reference, h_grid)?,
        g_hat: g_function(design, h_grid)?,
        r_grid: r_grid.to_vec(),
        k_hat: ripley_k(design, 1.0, r_grid, edge)?,
        n: design.len(),
        d,
    })
}

/// Entropy criterion: `ln det` of the design's correlation matrix (larger is better).
pub fn entropy_criterion(k: &KernelMatrix, rows: &[usize]) -> Result<LogDet> {
    dpp_log_pmf(k, rows)
}

/// First- and second-order occupation probabilities of an `n`-run LHS on the
/// `n^d` lattice of bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhsIntensity {
    /// `P(cell occupied) = n / n^d`
    pub ez: f64,
    /// `P(two distinct cells both occupied) = n (n-1) / (n^d (n^d - 1))`, averaged over cell pairs.
    pub ezz: f64,
    /// `ezz - ez^2`
    pub cov: f64,
    /// Sign of `cov` (-1, 0 or 1).
    pub cov_sign: i8,
}

pub fn lhs_intensity_check(n: usize, d: usize) -> Result<LhsIntensity> {
    if n < 2 {
        return Err(DesignError::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    if d < 2 {
        return Err(DesignError::InvalidArgument(format!(
            "need d >= 2, got {d}: with one dimension every cell is occupied"
        )));
    }
    let cells = (n as f64).powi(d as i32);
    let nf = n as f64;
    let ez = nf / cells;
    let ezz = nf * (nf - 1.0) / (cells * (cells - 1.0));
    // ez * ((n-1)/(n^d-1) - n/n^d) avoids cancelling two nearly equal squares.
    let cov = ez * ((nf - 1.0) / (cells - 1.0) - nf / cells);
    let cov_sign = if cov < 0.0 {
        -1
    } else if cov > 0.0 {
        1
    } else {
        0
    };
    Ok(LhsIntensity {
        ez,
        ezz,
        cov,
        cov_sign,
    })
}
