//! Seeded Monte Carlo estimation of detector error rates.
//!
//! Trials are cut into fixed blocks of [`BLOCK_TRIALS`]; block `b` draws from
//! `RngStream::new(seed, b)`. Workers only decide which blocks they run, so
//! the report is a pure function of the plan.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{lower_matvec_add, RngStream};
use crate::model::{
    conditional_stats, decide_from_distances, expected_chernoff_bound_with, BoundReport,
    ConditionalStats, Hypothesis, ProblemInstance,
};

pub const BLOCK_TRIALS: usize = 4096;
pub const MIN_TRIALS: usize = 100;

#[derive(Debug, Clone)]
pub struct TrialPlan {
    pub instance: ProblemInstance,
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
}

impl TrialPlan {
    pub fn new(instance: ProblemInstance, trials: usize, seed: u64) -> Self {
        Self {
            instance,
            trials,
            seed,
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::Argument(format!(
                "at least {MIN_TRIALS} trials are required, got {}",
                self.trials
            )));
        }
        if self.workers == 0 {
            return Err(Error::Argument("worker count must be positive".into()));
        }
        Ok(())
    }

    pub fn blocks(&self) -> usize {
        self.trials.div_ceil(BLOCK_TRIALS)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub errors: u64,
    pub trials: u64,
    pub p_hat: f64,
    /// `√(p̂(1 − p̂)/N)`.
    pub std_err: f64,
    pub bound: Option<BoundReport>,
    /// Identifies the experiment the counts belong to; parts with different
    /// fingerprints cannot be merged.
    pub fingerprint: u64,
}

impl TrialReport {
    fn from_counts(errors: u64, trials: u64, bound: Option<BoundReport>, fingerprint: u64) -> Self {
        let (p_hat, std_err) = if trials == 0 {
            (0.0, 0.0)
        } else {
            let p = errors as f64 / trials as f64;
            (p, (p * (1.0 - p) / trials as f64).sqrt())
        };
        Self {
            errors,
            trials,
            p_hat,
            std_err,
            bound,
            fingerprint,
        }
    }

    /// Binomial standard deviation of the estimate if the true error rate
    /// were `p`.
    pub fn std_dev_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Sums counts of parts of one experiment. Order does not matter.
pub fn reduce_reports(parts: &[TrialReport]) -> Result<TrialReport> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Argument("no reports to reduce".into()))?;
    if let Some(bad) = parts.iter().find(|p| p.fingerprint != first.fingerprint) {
        return Err(Error::Argument(format!(
            "cannot merge reports of different experiments ({:016x} vs {:016x})",
            first.fingerprint, bad.fingerprint
        )));
    }
    let errors = parts.iter().map(|p| p.errors).sum();
    let trials = parts.iter().map(|p| p.trials).sum();
    Ok(TrialReport::from_counts(
        errors,
        trials,
        first.bound,
        first.fingerprint,
    ))
}

fn hash_matrix(h: &mut DefaultHasher, m: &DMatrix<f64>) {
    m.shape().hash(h);
    for v in m.iter() {
        v.to_bits().hash(h);
    }
}

fn instance_fingerprint(inst: &ProblemInstance, seed: u64, trials: usize) -> u64 {
    let mut h = DefaultHasher::new();
    "unconditional".hash(&mut h);
    hash_matrix(&mut h, inst.sigma_x().as_matrix());
    hash_matrix(&mut h, inst.sigma_e().as_matrix());
    hash_matrix(&mut h, inst.transform());
    seed.hash(&mut h);
    trials.hash(&mut h);
    h.finish()
}

fn conditional_fingerprint(
    stats: &ConditionalStats,
    z0: &DVector<f64>,
    z1: &DVector<f64>,
    seed: u64,
    trials: usize,
) -> u64 {
    let mut h = DefaultHasher::new();
    "conditional".hash(&mut h);
    hash_matrix(&mut h, stats.cond_cov().as_matrix());
    hash_matrix(&mut h, stats.gain());
    for v in z0.iter().chain(z1.iter()) {
        v.to_bits().hash(&mut h);
    }
    seed.hash(&mut h);
    trials.hash(&mut h);
    h.finish()
}

fn block_len(trials: usize, block: usize) -> usize {
    let start = block * BLOCK_TRIALS;
    BLOCK_TRIALS.min(trials.saturating_sub(start))
}

fn run_parallel<F>(workers: usize, blocks: Range<usize>, f: F) -> Result<Vec<u64>>
where
    F: Fn(usize) -> u64 + Sync + Send,
{
    if workers <= 1 {
        return Ok(blocks.map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| blocks.into_par_iter().map(f).collect()))
}

/// Scratch buffers and precomputed factors for unconditional trials.
struct UnconditionalKernel {
    n: usize,
    chol_x: DMatrix<f64>,
    chol_e: DMatrix<f64>,
    /// `gain · T`: maps a codeword straight to its conditional mean.
    mean_map: DMatrix<f64>,
    whitener: DMatrix<f64>,
}

impl UnconditionalKernel {
    fn new(inst: &ProblemInstance, stats: &ConditionalStats) -> Result<Self> {
        Ok(Self {
            n: inst.n(),
            chol_x: inst.sigma_x().cholesky()?,
            chol_e: inst.sigma_e().cholesky()?,
            mean_map: stats.gain() * inst.transform(),
            whitener: stats.whitener().clone(),
        })
    }

    /// Error count over `count` trials drawn from `rng`. Same draw order as
    /// `TrialSampler::sample`: bit, `x0`, `x1`, `e`.
    fn run(&self, rng: &mut RngStream, count: usize) -> u64 {
        let n = self.n;
        let zero = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut x0 = vec![0.0; n];
        let mut x1 = vec![0.0; n];
        let mut e = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut mu0 = vec![0.0; n];
        let mut mu1 = vec![0.0; n];
        let mut errors = 0;
        for _ in 0..count {
            let bit = Hypothesis::from_bit(rng.fair_bit());
            rng.fill_standard_normal(&mut w);
            lower_matvec_add(&self.chol_x, &w, &zero, &mut x0);
            rng.fill_standard_normal(&mut w);
            lower_matvec_add(&self.chol_x, &w, &zero, &mut x1);
            rng.fill_standard_normal(&mut w);
            lower_matvec_add(&self.chol_e, &w, &zero, &mut e);
            let sent = match bit {
                Hypothesis::H0 => &x0,
                Hypothesis::H1 => &x1,
            };
            for i in 0..n {
                y[i] = sent[i] + e[i];
            }
            matvec(&self.mean_map, &x0, &mut mu0);
            matvec(&self.mean_map, &x1, &mut mu1);
            let d0 = whitened_distance_sq(&self.whitener, &y, &mu0);
            let d1 = whitened_distance_sq(&self.whitener, &y, &mu1);
            if decide_from_distances(d0, d1) != bit {
                errors += 1;
            }
        }
        errors
    }
}

fn matvec(a: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (j, &xj) in x.iter().enumerate() {
        for (o, aij) in out.iter_mut().zip(a.column(j).iter()) {
            *o += aij * xj;
        }
    }
}

/// `‖L⁻¹ (y − μ)‖²` for lower-triangular `L⁻¹`.
fn whitened_distance_sq(whitener: &DMatrix<f64>, y: &[f64], mu: &[f64]) -> f64 {
    let n = y.len();
    let mut s = 0.0;
    for i in 0..n {
        let mut acc = 0.0;
        for k in 0..=i {
            acc += whitener[(i, k)] * (y[k] - mu[k]);
        }
        s += acc * acc;
    }
    s
}

/// Error counts for the given blocks of an unconditional run. Concatenating
/// disjoint block ranges with [`reduce_reports`] reproduces the full run.
pub fn run_unconditional_blocks(plan: &TrialPlan, blocks: Range<usize>) -> Result<TrialReport> {
    plan.validate()?;
    if blocks.end > plan.blocks() {
        return Err(Error::Argument(format!(
            "block range {blocks:?} exceeds {} blocks",
            plan.blocks()
        )));
    }
    let stats = conditional_stats(&plan.instance)?;
    let bound = expected_chernoff_bound_with(&plan.instance, &stats)?;
    let kernel = UnconditionalKernel::new(&plan.instance, &stats)?;
    let trials: u64 = blocks
        .clone()
        .map(|b| block_len(plan.trials, b) as u64)
        .sum();
    let counts = run_parallel(plan.workers, blocks, |b| {
        let mut rng = RngStream::new(plan.seed, b as u64);
        kernel.run(&mut rng, block_len(plan.trials, b))
    })?;
    Ok(TrialReport::from_counts(
        counts.iter().sum(),
        trials,
        Some(bound),
        instance_fingerprint(&plan.instance, plan.seed, plan.trials),
    ))
}

/// Fresh codewords, noise and bit each trial; `p̂` estimates the expected
/// error `E_{z0,z1}[P_{e|z0,z1}]`, reported alongside the expected Chernoff
/// bound.
pub fn run_unconditional(plan: &TrialPlan) -> Result<TrialReport> {
    run_unconditional_blocks(plan, 0..plan.blocks())
}

/// Error rate for fixed `(z0, z1)`: `y` is drawn from `N(μ_{y_i|z_i}, Σ_{y|z})`
/// directly. Identical partial information short-circuits to exactly ½.
pub fn run_conditional(
    stats: &ConditionalStats,
    z0: &DVector<f64>,
    z1: &DVector<f64>,
    trials: usize,
    seed: u64,
) -> Result<TrialReport> {
    if trials < MIN_TRIALS {
        return Err(Error::Argument(format!(
            "at least {MIN_TRIALS} trials are required, got {trials}"
        )));
    }
    let mu0 = stats.conditional_mean(z0)?;
    let mu1 = stats.conditional_mean(z1)?;
    let fingerprint = conditional_fingerprint(stats, z0, z1, seed, trials);
    if z0 == z1 {
        return Ok(TrialReport {
            errors: 0,
            trials: trials as u64,
            p_hat: 0.5,
            std_err: 0.0,
            bound: None,
            fingerprint,
        });
    }
    let n = stats.n();
    let chol = stats.cond_chol();
    let whitener = stats.whitener();
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let counts: Vec<u64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngStream::new(seed, b as u64);
            let mut w = vec![0.0; n];
            let mut y = vec![0.0; n];
            let mut errors = 0;
            for _ in 0..block_len(trials, b) {
                let bit = Hypothesis::from_bit(rng.fair_bit());
                let mean = match bit {
                    Hypothesis::H0 => &mu0,
                    Hypothesis::H1 => &mu1,
                };
                rng.fill_standard_normal(&mut w);
                lower_matvec_add(chol, &w, mean.as_slice(), &mut y);
                let d0 = whitened_distance_sq(whitener, &y, mu0.as_slice());
                let d1 = whitened_distance_sq(whitener, &y, mu1.as_slice());
                if decide_from_distances(d0, d1) != bit {
                    errors += 1;
                }
            }
            errors
        })
        .collect();
    Ok(TrialReport::from_counts(
        counts.iter().sum(),
        trials as u64,
        None,
        fingerprint,
    ))
}
