use std::fmt;

use crate::error::{DesignError, Result};
use crate::kernel::CandidateSet;

/// How a design was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Sampled,
    Emulated,
    Sequential,
    Exchange,
    Lhs,
    Random,
    Clustered,
    External,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Sampled => "sampled",
            Provenance::Emulated => "emulated",
            Provenance::Sequential => "sequential",
            Provenance::Exchange => "exchange",
            Provenance::Lhs => "lhs",
            Provenance::Random => "random",
            Provenance::Clustered => "clustered",
            Provenance::External => "external",
        };
        f.write_str(s)
    }
}

/// An ordered set of distinct candidate indices with their coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub indices: Vec<usize>,
    pub coords: Vec<Vec<f64>>,
    pub provenance: Provenance,
    /// Log-determinant of the design's correlation matrix, when computed.
    pub log_det: Option<f64>,
}

impl Design {
    pub fn from_indices(
        candidates: &CandidateSet,
        indices: Vec<usize>,
        provenance: Provenance,
    ) -> Result<Self> {
        let mut seen = vec![false; candidates.len()];
        for &i in &indices {
            if i >= candidates.len() {
                return Err(DesignError::IndexOutOfRange {
                    index: i,
                    size: candidates.len(),
                });
            }
            if seen[i] {
                return Err(DesignError::RepeatedIndex(i));
            }
            seen[i] = true;
        }
        let coords = indices.iter().map(|&i| candidates.point(i).to_vec()).collect();
        Ok(Design {
            indices,
            coords,
            provenance,
            log_det: None,
        })
    }

    /// An empty design (used as the starting point of sequential runs).
    pub fn empty(provenance: Provenance) -> Self {
        Design {
            indices: Vec::new(),
            coords: Vec::new(),
            provenance,
            log_det: None,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn with_log_det(mut self, value: f64) -> Self {
        self.log_det = Some(value);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_repeats() {
        let c = CandidateSet::grid(3, 1).unwrap();
        assert_eq!(
            Design::from_indices(&c, vec![0, 2, 0], Provenance::Random).unwrap_err(),
            DesignError::RepeatedIndex(0)
        );
        assert!(Design::from_indices(&c, vec![3], Provenance::Random).is_err());
    }

    #[test]
    fn coords_follow_indices() {
        let c = CandidateSet::grid(2, 2).unwrap();
        let d = Design::from_indices(&c, vec![3, 0], Provenance::Random).unwrap();
        assert_eq!(d.coords, vec![vec![0.75, 0.75], vec![0.25, 0.25]]);
    }
}
