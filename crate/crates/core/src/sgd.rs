//! Designed mini-batch SGD on a Friedman-style linear-in-features model.
//!
//! The data follow
//! `y = b0 + b1 sin(2 pi x1 x2) + b2 (x3 - 0.5)^2 + b3 (x4 - 0.5)^2 + b4 x4 + b5 x5 + eps`
//! with `x ~ U[0,1]^5`, `b ~ U(-10, 10)` and `eps ~ N(0, 1)`. SGD fits the
//! coefficients with either uniformly random batches or batches carved by the
//! sequential design emulator, and the experiment reports the per-coefficient
//! ratio of mean squared errors (random / designed).

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::emulator::emulate_positions;
use crate::error::{DesignError, Result};
use crate::kernel::{
    build_kernel_matrix, condition_kernel, eigendecompose, CandidateSet, KernelFamily, KernelSpec,
};
use crate::rng::{from_seed, replicate_stream};

pub const N_INPUTS: usize = 5;
pub const N_COEFFS: usize = 6;
/// Number of batches per dataset; the dataset size is this times the batch size.
pub const BATCHES_PER_DATASET: usize = 50;

#[derive(Debug, Clone)]
pub struct FriedmanDataset {
    pub x: Vec<[f64; N_INPUTS]>,
    pub y: Vec<f64>,
    pub beta_true: [f64; N_COEFFS],
    pub noise_sd: f64,
}

impl FriedmanDataset {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// `(1, sin(2 pi x1 x2), (x3 - .5)^2, (x4 - .5)^2, x4, x5)`
pub fn feature_map(x: &[f64; N_INPUTS]) -> [f64; N_COEFFS] {
    [
        1.0,
        (2.0 * PI * x[0] * x[1]).sin(),
        (x[2] - 0.5).powi(2),
        (x[3] - 0.5).powi(2),
        x[3],
        x[4],
    ]
}

fn dot(a: &[f64; N_COEFFS], b: &[f64; N_COEFFS]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Noise-free response.
pub fn friedman_mean(x: &[f64; N_INPUTS], beta: &[f64; N_COEFFS]) -> f64 {
    dot(&feature_map(x), beta)
}

/// Gradient in `beta` of the single-sample loss `(phi(x)^T beta - y)^2`.
pub fn squared_loss_gradient(beta: &[f64; N_COEFFS], x: &[f64; N_INPUTS], y: f64) -> [f64; N_COEFFS] {
    let phi = feature_map(x);
    let r = 2.0 * (dot(&phi, beta) - y);
    phi.map(|p| r * p)
}

/// Dataset of `m` points with given coefficients.
pub fn friedman_generate_with<R: Rng + ?Sized>(
    m: usize,
    beta: [f64; N_COEFFS],
    noise_sd: f64,
    rng: &mut R,
) -> FriedmanDataset {
    let mut x = Vec::with_capacity(m);
    let mut y = Vec::with_capacity(m);
    for _ in 0..m {
        let xi: [f64; N_INPUTS] = std::array::from_fn(|_| rng.random::<f64>());
        let eps: f64 = StandardNormal.sample(rng);
        y.push(friedman_mean(&xi, &beta) + noise_sd * eps);
        x.push(xi);
    }
    FriedmanDataset {
        x,
        y,
        beta_true: beta,
        noise_sd,
    }
}

/// Fresh coefficients `U(-10, 10)` and `50 * batchsize` noisy observations.
pub fn friedman_generate<R: Rng + ?Sized>(batchsize: usize, rng: &mut R) -> Result<FriedmanDataset> {
    if batchsize == 0 {
        return Err(DesignError::InvalidArgument("batchsize must be >= 1".into()));
    }
    let beta: [f64; N_COEFFS] = std::array::from_fn(|_| rng.random_range(-10.0..10.0));
    Ok(friedman_generate_with(
        BATCHES_PER_DATASET * batchsize,
        beta,
        1.0,
        rng,
    ))
}

/// Optimizer settings. The step size at global step `t` is `lr0 / (1 + t / tau)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SgdConfig {
    pub epochs: usize,
    pub lr0: f64,
    pub tau: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            epochs: 200,
            lr0: 0.05,
            tau: 1000.0,
        }
    }
}

impl SgdConfig {
    pub fn learning_rate(&self, step: usize) -> f64 {
        self.lr0 / (1.0 + step as f64 / self.tau)
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(DesignError::InvalidArgument("epochs must be >= 1".into()));
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) || !(self.tau > 0.0) {
            return Err(DesignError::InvalidArgument(
                "learning rate and decay must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SgdFit {
    pub beta: [f64; N_COEFFS],
    /// Full-data mean squared residual after each epoch.
    pub loss_trace: Vec<f64>,
}

fn check_partition(batches: &[Vec<usize>], m: usize) -> Result<()> {
    let mut seen = vec![false; m];
    for (b, batch) in batches.iter().enumerate() {
        if batch.is_empty() {
            return Err(DesignError::InvalidPartition(format!("batch {b} is empty")));
        }
        for &i in batch {
            if i >= m {
                return Err(DesignError::InvalidPartition(format!(
                    "index {i} out of range for {m} observations"
                )));
            }
            if seen[i] {
                return Err(DesignError::InvalidPartition(format!(
                    "index {i} appears twice"
                )));
            }
            seen[i] = true;
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(DesignError::InvalidPartition(format!(
            "index {missing} is not covered"
        )));
    }
    Ok(())
}

fn mean_squared_residual(data: &FriedmanDataset, beta: &[f64; N_COEFFS]) -> f64 {
    let total: f64 = data
        .x
        .iter()
        .zip(&data.y)
        .map(|(x, &y)| (friedman_mean(x, beta) - y).powi(2))
        .sum();
    total / data.len() as f64
}

/// Mini-batch SGD from `beta = 0`.
///
/// Every epoch visits all batches in a freshly shuffled order and takes one
/// step on the batch-mean squared-error gradient.
pub fn sgd_fit<R: Rng + ?Sized>(
    data: &FriedmanDataset,
    batches: &[Vec<usize>],
    config: &SgdConfig,
    rng: &mut R,
) -> Result<SgdFit> {
    config.validate()?;
    check_partition(batches, data.len())?;
    let mut beta = [0.0; N_COEFFS];
    let mut order: Vec<usize> = (0..batches.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let mut step = 0;
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for &b in &order {
            let batch = &batches[b];
            let mut grad = [0.0; N_COEFFS];
            for &i in batch {
                let g = squared_loss_gradient(&beta, &data.x[i], data.y[i]);
                for (acc, v) in grad.iter_mut().zip(g) {
                    *acc += v;
                }
            }
            let lr = config.learning_rate(step) / batch.len() as f64;
            for (bk, g) in beta.iter_mut().zip(grad) {
                *bk -= lr * g;
            }
            step += 1;
        }
        loss_trace.push(mean_squared_residual(data, &beta));
    }
    Ok(SgdFit { beta, loss_trace })
}

/// Uniformly random partition into consecutive chunks of `batchsize`.
pub fn random_batches<R: Rng + ?Sized>(m: usize, batchsize: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(rng);
    idx.chunks(batchsize.max(1)).map(|c| c.to_vec()).collect()
}

/// Partition carved by the sequential emulator.
///
/// Batch `b` is the emulated design of size `batchsize` over the points not
/// yet used, under the Gaussian kernel Schur-conditioned on every point used
/// by batches `0..b`. Conditioning is applied one batch at a time, which
/// equals conditioning on the union.
pub fn designed_batches(x: &[[f64; N_INPUTS]], batchsize: usize, rho: f64) -> Result<Vec<Vec<usize>>> {
    if batchsize == 0 {
        return Err(DesignError::InvalidArgument("batchsize must be >= 1".into()));
    }
    let candidates = CandidateSet::new(x.iter().map(|p| p.to_vec()).collect())?;
    let spec = KernelSpec::new(KernelFamily::GaussianIso, rho)?;
    let mut k = build_kernel_matrix(&candidates, &spec)?;
    let mut batches = Vec::with_capacity(x.len().div_ceil(batchsize));
    while k.size() > 0 {
        let size = batchsize.min(k.size());
        let eig = eigendecompose(&k)?;
        let positions = emulate_positions(&eig, size, None)?;
        batches.push(positions.iter().map(|&p| k.candidate_ids()[p]).collect());
        k = condition_kernel(&k, &positions)?;
    }
    Ok(batches)
}

/// Settings of the random-versus-designed batch comparison.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExperimentConfig {
    pub batch_sizes: Vec<usize>,
    pub replicates: usize,
    pub sgd: SgdConfig,
    /// Gaussian-kernel rho used to carve designed batches.
    pub rho: f64,
    pub seed: u64,
    /// Worker threads for the replicate fan-out.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            batch_sizes: vec![23, 43, 63, 83],
            replicates: 100,
            sgd: SgdConfig::default(),
            rho: 0.01,
            seed: 0,
            jobs: 1,
        }
    }
}

/// Rows follow `batch_sizes`; columns are the ratios for `b1 .. b5`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTable {
    pub batch_sizes: Vec<usize>,
    pub ratios: Vec<[f64; N_COEFFS - 1]>,
    /// Per-arm MSE of `b1 .. b5`: `(arm_a, arm_b)` for each row.
    pub mse: Vec<([f64; N_COEFFS - 1], [f64; N_COEFFS - 1])>,
    /// Largest final-epoch loss seen in any fit; finite when no run diverged.
    pub worst_final_loss: f64,
}

/// Per-replicate outcome: squared coefficient errors of the two arms.
struct ReplicateErrors {
    a: [f64; N_COEFFS],
    b: [f64; N_COEFFS],
    worst_loss: f64,
}

/// Generic two-arm comparison; `arm_a` is the numerator of each ratio.
///
/// Both arms see the same dataset and the same epoch-shuffling stream, so
/// identical batchers give identical fits.
pub fn mse_ratios_with<A, B>(config: &ExperimentConfig, arm_a: A, arm_b: B) -> Result<RatioTable>
where
    A: Fn(&FriedmanDataset, usize, &mut rand_chacha::ChaCha20Rng) -> Result<Vec<Vec<usize>>> + Sync,
    B: Fn(&FriedmanDataset, usize, &mut rand_chacha::ChaCha20Rng) -> Result<Vec<Vec<usize>>> + Sync,
{
    if config.replicates == 0 {
        return Err(DesignError::InvalidArgument("replicates must be >= 1".into()));
    }
    config.sgd.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| DesignError::InvalidArgument(format!("thread pool: {e}")))?;
    let mut ratios = Vec::with_capacity(config.batch_sizes.len());
    let mut mse = Vec::with_capacity(config.batch_sizes.len());
    let mut worst_final_loss: f64 = 0.0;
    for (row, &bs) in config.batch_sizes.iter().enumerate() {
        let run = |rep: usize| -> Result<ReplicateErrors> {
            let stream = (row as u64) << 32 | rep as u64;
            let mut rng = replicate_stream(config.seed, stream);
            let data = friedman_generate(bs, &mut rng)?;
            let sgd_seed: u64 = rng.random();
            let batches_a = arm_a(&data, bs, &mut rng)?;
            let batches_b = arm_b(&data, bs, &mut rng)?;
            let fit_a = sgd_fit(&data, &batches_a, &config.sgd, &mut from_seed(sgd_seed))?;
            let fit_b = sgd_fit(&data, &batches_b, &config.sgd, &mut from_seed(sgd_seed))?;
            let sq = |beta: &[f64; N_COEFFS]| -> [f64; N_COEFFS] {
                std::array::from_fn(|j| (beta[j] - data.beta_true[j]).powi(2))
            };
            let last = |f: &SgdFit| *f.loss_trace.last().unwrap_or(&f64::NAN);
            let worst = if fit_a.loss_trace.iter().chain(&fit_b.loss_trace).all(|l| l.is_finite()) {
                last(&fit_a).max(last(&fit_b))
            } else {
                f64::INFINITY
            };
            Ok(ReplicateErrors {
                a: sq(&fit_a.beta),
                b: sq(&fit_b.beta),
                worst_loss: worst,
            })
        };
        let results: Vec<Result<ReplicateErrors>> =
            pool.install(|| (0..config.replicates).into_par_iter().map(run).collect());
        let mut sum_a = [0.0; N_COEFFS];
        let mut sum_b = [0.0; N_COEFFS];
        for r in results {
            let r = r?;
            for j in 0..N_COEFFS {
                sum_a[j] += r.a[j];
                sum_b[j] += r.b[j];
            }
            worst_final_loss = worst_final_loss.max(r.worst_loss);
        }
        let reps = config.replicates as f64;
        let mse_a: [f64; N_COEFFS - 1] = std::array::from_fn(|j| sum_a[j + 1] / reps);
        let mse_b: [f64; N_COEFFS - 1] = std::array::from_fn(|j| sum_b[j + 1] / reps);
        ratios.push(std::array::from_fn(|j| mse_a[j] / mse_b[j]));
        mse.push((mse_a, mse_b));
    }
    Ok(RatioTable {
        batch_sizes: config.batch_sizes.clone(),
        ratios,
        mse,
        worst_final_loss,
    })
}

/// MSE of random-batch SGD divided by MSE of designed-batch SGD, per coefficient.
pub fn mse_ratio_experiment(config: &ExperimentConfig) -> Result<RatioTable> {
    let rho = config.rho;
    mse_ratios_with(
        config,
        |data, bs, rng| Ok(random_batches(data.len(), bs, rng)),
        move |data, bs, _| designed_batches(&data.x, bs, rho),
    )
}
