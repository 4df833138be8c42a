//! Entropy-optimal experimental designs for Gaussian-process regression,
//! emulated as the mode of a fixed-rank determinantal point process over a
//! discrete candidate set.
//!
//! The pieces:
//! * [`kernel`]: candidate sets, correlation kernels, eigendecomposition and
//!   Schur-complement conditioning.
//! * [`dpp`]: conditional Bernoulli eigen-index sampling and projection DPP
//!   point sampling.
//! * [`emulator`]: greedy mode extraction and batch-sequential designs with
//!   the non-collapsing projection constraint.
//! * [`baselines`]: Latin hypercube, exchange algorithm, random and clustered
//!   designs.
//! * [`diagnostics`]: F, G and Ripley's K point-pattern summaries.
//! * [`sgd`]: mini-batch SGD with random versus emulated batches.

pub mod baselines;
pub mod cli;
pub mod design;
pub mod diagnostics;
pub mod dpp;
pub mod emulator;
pub mod error;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod rng;
pub mod sgd;

pub use design::{Design, Provenance};
pub use error::{DesignError, Result};
pub use kernel::{CandidateSet, EigenSystem, KernelFamily, KernelMatrix, KernelSpec};
pub use linalg::LogDet;
