//! Candidate sets, correlation kernels over them, symmetric eigendecomposition
//! and Schur-complement conditioning.

use std::fmt;
use std::str::FromStr;

use faer::{Mat, Side};

use crate::error::{DesignError, Result};
use crate::linalg::{cholesky, forward_substitute, max_asymmetry, submatrix};

/// Eigenvalues in `[-PSD_TOLERANCE, 0)` are treated as rounding noise and clamped.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Jitter ladder tried when factorizing the conditioning block.
pub const CONDITIONING_JITTER: [f64; 3] = [0.0, 1e-12, 1e-10];

/// A finite set of distinct points in `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    points: Vec<Vec<f64>>,
    dim: usize,
    lattice: bool,
}

impl CandidateSet {
    /// Validates dimensions, finiteness and distinctness.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(points, false)
    }

    fn build(points: Vec<Vec<f64>>, lattice: bool) -> Result<Self> {
        let dim = points.first().ok_or(DesignError::EmptyCandidates)?.len();
        if dim == 0 {
            return Err(DesignError::InvalidArgument(
                "candidate dimension must be at least 1".into(),
            ));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(DesignError::DimensionMismatch {
                    index: i,
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(DesignError::NonFiniteCoordinate { index: i });
            }
        }
        // Sorting by coordinates makes duplicate detection O(N log N).
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            points[a]
                .iter()
                .zip(&points[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for w in order.windows(2) {
            if points[w[0]] == points[w[1]] {
                return Err(DesignError::DuplicateCandidates {
                    first: w[0].min(w[1]),
                    second: w[0].max(w[1]),
                });
            }
        }
        Ok(CandidateSet {
            points,
            dim,
            lattice,
        })
    }

    /// The `m^d` lattice of cell centres `(i - 0.5) / m`, `i = 1..=m`.
    ///
    /// Points are ordered with the first coordinate varying fastest.
    pub fn grid(m: usize, d: usize) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(DesignError::InvalidArgument(
                "grid size and dimension must be positive".into(),
            ));
        }
        let total = m
            .checked_pow(d as u32)
            .ok_or_else(|| DesignError::InvalidArgument("grid too large".into()))?;
        let mut points = Vec::with_capacity(total);
        for mut flat in 0..total {
            let mut p = Vec::with_capacity(d);
            for _ in 0..d {
                let i = flat % m;
                flat /= m;
                p.push((i as f64 + 0.5) / m as f64);
            }
            points.push(p);
        }
        Self::build(points, true)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when the points were generated on an exact lattice.
    pub fn is_lattice(&self) -> bool {
        self.lattice
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}

/// Correlation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `rho^(||x - x'||_2^2)`
    GaussianIso,
    /// `rho^(||x - x'||_1)`
    ExponentialL1,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::GaussianIso => f.write_str("gaussian_iso"),
            KernelFamily::ExponentialL1 => f.write_str("exponential_l1"),
        }
    }
}

impl FromStr for KernelFamily {
    type Err = DesignError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "gaussian_iso" => Ok(KernelFamily::GaussianIso),
            "exponential" | "exponential_l1" => Ok(KernelFamily::ExponentialL1),
            other => Err(DesignError::InvalidKernel(format!(
                "unknown kernel family `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub rho: f64,
    pub nugget: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, rho: f64) -> Result<Self> {
        Self::with_nugget(family, rho, 0.0)
    }

    pub fn with_nugget(family: KernelFamily, rho: f64, nugget: f64) -> Result<Self> {
        let spec = KernelSpec {
            family,
            rho,
            nugget,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(DesignError::InvalidKernel(format!(
                "rho must lie in (0, 1), got {}",
                self.rho
            )));
        }
        if !(self.nugget >= 0.0 && self.nugget.is_finite()) {
            return Err(DesignError::InvalidKernel(format!(
                "nugget must be finite and nonnegative, got {}",
                self.nugget
            )));
        }
        Ok(())
    }

    /// Correlation between two points (without the nugget).
    pub fn correlation(&self, a: &[f64], b: &[f64]) -> f64 {
        let dist = match self.family {
            KernelFamily::GaussianIso => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            KernelFamily::ExponentialL1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>(),
        };
        // rho^dist = exp(dist * ln rho)
        (dist * self.rho.ln()).exp()
    }
}

/// Symmetric PSD kernel matrix over (a subset of) a candidate set.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    entries: Mat<f64>,
    spec: Option<KernelSpec>,
    candidate_ids: Vec<usize>,
}

impl KernelMatrix {
    /// Wraps an arbitrary symmetric matrix; rows map to candidates `0..N`.
    pub fn from_entries(entries: Mat<f64>) -> Result<Self> {
        let n = entries.nrows();
        Self::from_parts(entries, None, (0..n).collect())
    }

    pub fn from_parts(
        entries: Mat<f64>,
        spec: Option<KernelSpec>,
        candidate_ids: Vec<usize>,
    ) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(DesignError::InvalidArgument(format!(
                "kernel must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if candidate_ids.len() != entries.nrows() {
            return Err(DesignError::InvalidArgument(
                "candidate id list length does not match kernel size".into(),
            ));
        }
        let asym = max_asymmetry(&entries);
        if asym > 1e-12 {
            return Err(DesignError::NotSymmetric(asym));
        }
        Ok(KernelMatrix {
            entries,
            spec,
            candidate_ids,
        })
    }

    pub fn entries(&self) -> &Mat<f64> {
        &self.entries
    }

    pub fn spec(&self) -> Option<&KernelSpec> {
        self.spec.as_ref()
    }

    /// Row `i` of this matrix corresponds to candidate `candidate_ids()[i]`.
    pub fn candidate_ids(&self) -> &[usize] {
        &self.candidate_ids
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Row position of a candidate id, if present.
    pub fn position_of(&self, candidate: usize) -> Option<usize> {
        self.candidate_ids.iter().position(|&c| c == candidate)
    }
}

/// Descending eigenvalues with paired orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct EigenSystem {
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
    candidate_ids: Vec<usize>,
}

impl EigenSystem {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column `k` pairs with `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> &Mat<f64> {
        &self.eigenvectors
    }

    pub fn candidate_ids(&self) -> &[usize] {
        &self.candidate_ids
    }

    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `sum_k lambda_k phi_k phi_k^T`
    pub fn reconstruct(&self) -> Mat<f64> {
        let n = self.size();
        let mut scaled = self.eigenvectors.clone();
        for k in 0..n {
            let lam = self.eigenvalues[k];
            for i in 0..n {
                scaled[(i, k)] *= lam;
            }
        }
        &scaled * self.eigenvectors.transpose()
    }
}

/// Builds the correlation matrix of `candidates` under `spec`.
pub fn build_kernel_matrix(candidates: &CandidateSet, spec: &KernelSpec) -> Result<KernelMatrix> {
    spec.validate()?;
    let n = candidates.len();
    let mut k = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0 + spec.nugget;
        for j in 0..i {
            let c = spec.correlation(candidates.point(i), candidates.point(j));
            k[(i, j)] = c;
            k[(j, i)] = c;
        }
    }
    Ok(KernelMatrix {
        entries: k,
        spec: Some(*spec),
        candidate_ids: (0..n).collect(),
    })
}

/// Symmetric eigendecomposition, eigenvalues sorted descending.
///
/// Ties keep the solver's order, eigenvector signs are fixed so the entry of
/// largest magnitude is positive, and eigenvalues in `[-1e-8, 0)` clamp to 0.
pub fn eigendecompose(k: &KernelMatrix) -> Result<EigenSystem> {
    let n = k.size();
    if n == 0 {
        return Ok(EigenSystem {
            eigenvalues: Vec::new(),
            eigenvectors: Mat::zeros(0, 0),
            candidate_ids: Vec::new(),
        });
    }
    let evd = k
        .entries
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| DesignError::InvalidArgument(format!("eigen solver failed: {e:?}")))?;
    let raw: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    let u = evd.U();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Mat::<f64>::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut lam = raw[src];
        if lam < 0.0 {
            if lam < -PSD_TOLERANCE {
                return Err(DesignError::NotPsd { value: lam });
            }
            lam = 0.0;
        }
        eigenvalues.push(lam);
        let mut pivot = 0;
        for i in 1..n {
            if u[(i, src)].abs() > u[(pivot, src)].abs() {
                pivot = i;
            }
        }
        let sign = if u[(pivot, src)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            eigenvectors[(i, col)] = sign * u[(i, src)];
        }
    }
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
        candidate_ids: k.candidate_ids.clone(),
    })
}

/// Schur complement of `k` on the rows named by `selected` (row positions).
///
/// Returns the conditioned kernel over the remaining rows, in original order,
/// carrying their candidate ids.
pub fn condition_kernel(k: &KernelMatrix, selected: &[usize]) -> Result<KernelMatrix> {
    let n = k.size();
    let mut is_selected = vec![false; n];
    for &s in selected {
        if s >= n {
            return Err(DesignError::IndexOutOfRange { index: s, size: n });
        }
        if is_selected[s] {
            return Err(DesignError::RepeatedIndex(s));
        }
        is_selected[s] = true;
    }
    let remaining: Vec<usize> = (0..n).filter(|&i| !is_selected[i]).collect();
    let ids: Vec<usize> = remaining.iter().map(|&i| k.candidate_ids[i]).collect();
    let base = submatrix(&k.entries, &remaining, &remaining);
    if selected.is_empty() || remaining.is_empty() {
        return Ok(KernelMatrix {
            entries: base,
            spec: k.spec,
            candidate_ids: ids,
        });
    }

    let block = submatrix(&k.entries, selected, selected);
    let l = CONDITIONING_JITTER
        .iter()
        .find_map(|&jitter| cholesky(&block, jitter))
        .ok_or(DesignError::ConditioningFailed)?;
    let mut w = submatrix(&k.entries, selected, &remaining);
    forward_substitute(&l, &mut w);
    let correction = w.transpose() * &w;
    let r = remaining.len();
    let entries = Mat::from_fn(r, r, |i, j| {
        // Average the two triangles so the result is exactly symmetric.
        let a = base[(i, j)] - correction[(i, j)];
        let b = base[(j, i)] - correction[(j, i)];
        0.5 * (a + b)
    });
    Ok(KernelMatrix {
        entries,
        spec: k.spec,
        candidate_ids: ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;

    fn line(points: &[f64]) -> CandidateSet {
        CandidateSet::new(points.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn gaussian_unit_distance_gives_rho() {
        let c = line(&[0.0, 1.0]);
        let k = build_kernel_matrix(&c, &KernelSpec::new(KernelFamily::GaussianIso, 0.01).unwrap())
            .unwrap();
        assert!((k.get(0, 1) - 0.01).abs() < 1e-15);
        assert_eq!(k.get(0, 0), 1.0);
        assert_eq!(k.get(1, 1), 1.0);
    }

    #[test]
    fn exponential_l1_uses_manhattan_distance() {
        let c = CandidateSet::new(vec![vec![0.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let k = build_kernel_matrix(
            &c,
            &KernelSpec::new(KernelFamily::ExponentialL1, 0.45).unwrap(),
        )
        .unwrap();
        assert!((k.get(0, 1) - 0.45).abs() < 1e-15);
    }

    #[test]
    fn nugget_on_diagonal() {
        let c = line(&[0.0, 0.5]);
        let spec = KernelSpec::with_nugget(KernelFamily::GaussianIso, 0.3, 0.25).unwrap();
        let k = build_kernel_matrix(&c, &spec).unwrap();
        assert_eq!(k.get(0, 0), 1.25);
    }

    #[test]
    fn duplicates_rejected_with_pair() {
        let err = CandidateSet::new(vec![vec![0.1, 0.2], vec![0.3, 0.4], vec![0.1, 0.2]]).unwrap_err();
        assert_eq!(err, DesignError::DuplicateCandidates { first: 0, second: 2 });
    }

    #[test]
    fn invalid_rho_rejected() {
        assert!(KernelSpec::new(KernelFamily::GaussianIso, 0.0).is_err());
        assert!(KernelSpec::new(KernelFamily::GaussianIso, 1.0).is_err());
        assert!(KernelSpec::with_nugget(KernelFamily::GaussianIso, 0.5, -1.0).is_err());
    }

    #[test]
    fn grid_uses_cell_centres() {
        let g = CandidateSet::grid(4, 2).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.point(0), &[0.125, 0.125]);
        assert_eq!(g.point(1), &[0.375, 0.125]);
        assert_eq!(g.point(15), &[0.875, 0.875]);
        assert!(g.is_lattice());
    }

    #[test]
    fn identity_eigenvalues() {
        let k = KernelMatrix::from_entries(Mat::identity(3, 3)).unwrap();
        let e = eigendecompose(&k).unwrap();
        for &l in e.eigenvalues() {
            assert!((l - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        let rho = 0.37;
        let k = KernelMatrix::from_entries(Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { rho }))
            .unwrap();
        let e = eigendecompose(&k).unwrap();
        assert!((e.eigenvalues()[0] - (1.0 + rho)).abs() < 1e-14);
        assert!((e.eigenvalues()[1] - (1.0 - rho)).abs() < 1e-14);
    }

    #[test]
    fn reconstruction_on_gaussian_kernel() {
        let c = line(&[0.0, 0.13, 0.31, 0.52, 0.77, 0.95]);
        let k = build_kernel_matrix(&c, &KernelSpec::new(KernelFamily::GaussianIso, 0.2).unwrap())
            .unwrap();
        let e = eigendecompose(&k).unwrap();
        let diff = e.reconstruct() - k.entries();
        assert!(frobenius(&diff) < 1e-8 * 6.0);
        for w in e.eigenvalues().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn non_psd_rejected() {
        let k = KernelMatrix::from_entries(Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 2.0 }))
            .unwrap();
        match eigendecompose(&k) {
            Err(DesignError::NotPsd { value }) => assert!((value + 1.0).abs() < 1e-12),
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn tiny_negative_eigenvalue_clamped() {
        let k = KernelMatrix::from_entries(Mat::from_fn(2, 2, |i, j| {
            if i == j {
                1.0 - 5e-10
            } else {
                1.0
            }
        }))
        .unwrap();
        let e = eigendecompose(&k).unwrap();
        assert_eq!(e.eigenvalues()[1], 0.0);
    }

    #[test]
    fn conditioning_two_by_two() {
        let k = KernelMatrix::from_entries(Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.5 }))
            .unwrap();
        let c = condition_kernel(&k, &[0]).unwrap();
        assert_eq!(c.size(), 1);
        assert!((c.get(0, 0) - 0.75).abs() < 1e-15);
        assert_eq!(c.candidate_ids(), &[1]);
    }

    #[test]
    fn conditioning_on_nothing_is_identity() {
        let c = line(&[0.0, 0.4, 0.9]);
        let k = build_kernel_matrix(&c, &KernelSpec::new(KernelFamily::GaussianIso, 0.3).unwrap())
            .unwrap();
        let same = condition_kernel(&k, &[]).unwrap();
        assert_eq!(same.entries(), k.entries());
        assert_eq!(same.candidate_ids(), k.candidate_ids());
    }

    #[test]
    fn conditioning_fails_on_hopeless_block() {
        // Indefinite selected block: no jitter on the ladder rescues it.
        let k = KernelMatrix::from_entries(Mat::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) | (1, 1) | (2, 2) => 1.0,
            (0, 1) | (1, 0) => 1.5,
            _ => 0.1,
        }))
        .unwrap();
        assert_eq!(
            condition_kernel(&k, &[0, 1]).unwrap_err(),
            DesignError::ConditioningFailed
        );
    }
}
