//! Optimal design emulation: the mode of the fixed-rank DPP approximated by
//! keeping the `n` leading eigenvectors and extracting points greedily, plus
//! the batch-sequential extension with an optional non-collapsing projection
//! constraint.

use rand::{Rng, RngCore};

use crate::design::{Design, Provenance};
use crate::dpp::{dpp_log_pmf, ProjectionWalk};
use crate::error::{DesignError, Result};
use crate::kernel::{
    build_kernel_matrix, condition_kernel, eigendecompose, CandidateSet, EigenSystem,
    KernelMatrix, KernelSpec,
};

/// Two step weights closer than this are considered tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Coordinate-equality tolerance for non-lattice candidate sets.
pub const COORD_TOLERANCE: f64 = 1e-9;

/// The most probable eigen-index set of size `n`: the `n` leading eigenvalues.
///
/// Because the eigen-system is sorted descending (ties in a fixed order), this
/// is `{0, ..., n-1}` in 0-based indexing.
pub fn select_mode_subset(eig: &EigenSystem, n: usize) -> Result<Vec<usize>> {
    if n == 0 || n > eig.size() {
        return Err(DesignError::Cardinality {
            n,
            available: eig.size(),
        });
    }
    Ok((0..n).collect())
}

fn argmax_with_ties(weights: &[f64], tie_rng: &mut Option<&mut (dyn RngCore + '_)>) -> Option<usize> {
    let max = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let threshold = max - TIE_TOLERANCE;
    match tie_rng {
        None => weights.iter().position(|&w| w >= threshold),
        Some(rng) => {
            let tied: Vec<usize> = weights
                .iter()
                .enumerate()
                .filter(|(_, &w)| w >= threshold)
                .map(|(i, _)| i)
                .collect();
            Some(tied[rng.random_range(0..tied.len())])
        }
    }
}

/// Row positions chosen by the greedy mode extraction over `eig`.
///
/// Each step takes the argmax of `P_j(xi) = w(xi) / j`, where `w` is the
/// residual projection weight and `j` the number of points still to place.
pub fn emulate_positions(
    eig: &EigenSystem,
    n: usize,
    tie_rng: Option<&mut dyn RngCore>,
) -> Result<Vec<usize>> {
    emulate_positions_masked(eig, n, tie_rng, |_, _| false)
}

/// Greedy extraction where `conflicts(row, picked_row)` bars `row` from being
/// chosen once `picked_row` is in the design.
pub(crate) fn emulate_positions_masked<F>(
    eig: &EigenSystem,
    n: usize,
    mut tie_rng: Option<&mut (dyn RngCore + '_)>,
    mut conflicts: F,
) -> Result<Vec<usize>>
where
    F: FnMut(usize, usize) -> bool,
{
    let columns = select_mode_subset(eig, n)?;
    let mut walk = ProjectionWalk::new(eig, &columns)?;
    let size = eig.size();
    let mut barred = vec![false; size];
    let mut picked = Vec::with_capacity(n);
    while walk.remaining() > 0 {
        let j = walk.remaining() as f64;
        let weights: Vec<f64> = walk
            .raw_weights()
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                if barred[i] {
                    f64::NEG_INFINITY
                } else {
                    w.max(0.0) / j
                }
            })
            .collect();
        let pos = argmax_with_ties(&weights, &mut tie_rng).ok_or(DesignError::Capacity {
            batch: 1,
            needed: n,
            available: picked.len(),
        })?;
        walk.select(pos);
        picked.push(pos);
        barred[pos] = true;
        for (i, flag) in barred.iter_mut().enumerate() {
            if !*flag && conflicts(i, pos) {
                *flag = true;
            }
        }
    }
    Ok(picked)
}

/// Emulated entropy-optimal design of size `n` from kernel `k`.
///
/// Deterministic when `tie_rng` is `None` (ties go to the lowest row).
/// The returned design records `ln det` of `k` on the chosen rows.
pub fn emulate_design(
    k: &KernelMatrix,
    candidates: &CandidateSet,
    n: usize,
    tie_rng: Option<&mut dyn RngCore>,
) -> Result<Design> {
    if n == 0 || n > k.size() {
        return Err(DesignError::Cardinality {
            n,
            available: k.size(),
        });
    }
    let eig = eigendecompose(k)?;
    let positions = emulate_positions(&eig, n, tie_rng)?;
    let log_det = dpp_log_pmf(k, &positions)?;
    let ids = positions.iter().map(|&p| k.candidate_ids()[p]).collect();
    Ok(Design::from_indices(candidates, ids, Provenance::Emulated)?.with_log_det(log_det.value))
}

fn coords_match(a: f64, b: f64, exact: bool) -> bool {
    if exact {
        a == b
    } else {
        (a - b).abs() <= COORD_TOLERANCE
    }
}

/// Unselected candidates sharing at least one coordinate value with a design point.
///
/// Returned in ascending candidate order. Lattice candidate sets compare
/// coordinates exactly, others within [`COORD_TOLERANCE`].
pub fn violating_set(candidates: &CandidateSet, design: &Design) -> Vec<usize> {
    let exact = candidates.is_lattice();
    let big_n = candidates.len();
    let mut in_design = vec![false; big_n];
    for &i in &design.indices {
        in_design[i] = true;
    }
    let mut flagged = vec![false; big_n];
    for point in &design.coords {
        for (j, &value) in point.iter().enumerate() {
            for k in 0..big_n {
                if !in_design[k] && !flagged[k] && coords_match(candidates.point(k)[j], value, exact)
                {
                    flagged[k] = true;
                }
            }
        }
    }
    (0..big_n).filter(|&k| flagged[k]).collect()
}

/// State threaded through batch-sequential construction.
#[derive(Debug, Clone)]
pub struct SequentialState {
    pub existing: Design,
    /// Candidates excluded from the next batch (design points plus, when the
    /// projection constraint is on, the candidates that would violate it).
    pub excluded: Vec<usize>,
    pub rho_schedule: Vec<f64>,
    pub batch_sizes: Vec<usize>,
}

impl SequentialState {
    pub fn new(existing: Design, rho_schedule: Vec<f64>, batch_sizes: Vec<usize>) -> Result<Self> {
        if rho_schedule.len() != batch_sizes.len() {
            return Err(DesignError::InvalidState(format!(
                "{} rho values for {} batches",
                rho_schedule.len(),
                batch_sizes.len()
            )));
        }
        if let Some(b) = batch_sizes.iter().position(|&s| s == 0) {
            return Err(DesignError::InvalidState(format!("batch {} has size 0", b + 1)));
        }
        if let Some(&rho) = rho_schedule.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
            return Err(DesignError::InvalidKernel(format!(
                "scheduled rho {rho} outside (0, 1)"
            )));
        }
        let excluded = existing.indices.clone();
        Ok(SequentialState {
            existing,
            excluded,
            rho_schedule,
            batch_sizes,
        })
    }
}

/// Batch-sequential design emulation.
///
/// For each batch the kernel is rebuilt over all candidates at the scheduled
/// rho, the current design (and, with `enforce_projection`, every candidate
/// sharing a coordinate with it) is removed by Schur-complement conditioning,
/// and the greedy emulator picks the batch on what remains. `base` supplies
/// the kernel family and nugget; its rho is ignored.
pub fn sequential_design(
    candidates: &CandidateSet,
    base: &KernelSpec,
    state: &mut SequentialState,
    enforce_projection: bool,
    mut tie_rng: Option<&mut dyn RngCore>,
) -> Result<Design> {
    let mut design = state.existing.clone();
    design.provenance = Provenance::Sequential;
    let mut last_kernel = None;
    for (b, (&size, &rho)) in state
        .batch_sizes
        .iter()
        .zip(&state.rho_schedule)
        .enumerate()
    {
        let spec = KernelSpec::with_nugget(base.family, rho, base.nugget)?;
        let k = build_kernel_matrix(candidates, &spec)?;
        let mut excluded = design.indices.clone();
        if enforce_projection {
            excluded.extend(violating_set(candidates, &design));
        }
        let available = candidates.len() - excluded.len();
        if available < size {
            return Err(DesignError::Capacity {
                batch: b + 1,
                needed: size,
                available,
            });
        }
        state.excluded = excluded.clone();
        let conditioned = condition_kernel(&k, &excluded)?;
        let eig = eigendecompose(&conditioned)?;
        let ids = conditioned.candidate_ids();
        let exact = candidates.is_lattice();
        let positions = emulate_positions_masked(&eig, size, tie_rng.as_deref_mut(), |row, picked| {
            enforce_projection
                && candidates
                    .point(ids[row])
                    .iter()
                    .zip(candidates.point(ids[picked]))
                    .any(|(&a, &b)| coords_match(a, b, exact))
        })
        .map_err(|e| match e {
            DesignError::Capacity { available, .. } => DesignError::Capacity {
                batch: b + 1,
                needed: size,
                available,
            },
            other => other,
        })?;
        for p in positions {
            let id = conditioned.candidate_ids()[p];
            design.indices.push(id);
            design.coords.push(candidates.point(id).to_vec());
        }
        last_kernel = Some(k);
    }
    if let Some(k) = last_kernel {
        let ld = dpp_log_pmf(&k, &design.indices)?;
        design.log_det = Some(ld.value);
    }
    let mut excluded = design.indices.clone();
    if enforce_projection {
        excluded.extend(violating_set(candidates, &design));
    }
    state.excluded = excluded;
    state.existing = design.clone();
    state.batch_sizes.clear();
    state.rho_schedule.clear();
    Ok(design)
}
