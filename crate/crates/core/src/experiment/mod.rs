//! Experiment runners behind the command-line front end: random transforms
//! against the optimum, bound sweeps over SNR / `m` / `n`, and single
//! instance inspection.

pub mod config;
pub mod matfile;

use std::fmt::{self, Write as _};
use std::path::Path;

use rand::RngCore;
use rayon::prelude::*;

pub use config::{ExperimentConfig, Kind, Overrides, RawConfig};

use crate::design::{build_optimal, factorize, random_full_rank_t, FamilyMember};
use crate::error::{Error, Result};
use crate::gaussian::{eigenvalues_ascending, random_psd, singular_values, RngStream, SymMatrix};
use crate::model::{conditional_stats, expected_chernoff_bound_with, BoundReport, ProblemInstance};
use crate::montecarlo::{run_unconditional, TrialPlan};

const STREAM_SIGMA_X: u64 = 0;
const STREAM_SIGMA_E: u64 = 1;
const STREAM_RANDOM_T: u64 = 2;
const STREAM_POINT_RANDOM_T: u64 = 1 << 20;
const STREAM_POINT_MC_SEED: u64 = 2 << 20;

/// CSV float formatting: 12 significant digits, scientific notation.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.11e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// `SNR_dB = 10 log₁₀(tr Σx / tr Σe)`.
pub fn snr_ratio(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// Rescales `sigma_e` so that `tr Σx / tr Σe` equals the target ratio.
pub fn scale_noise_to_snr(sigma_x: &SymMatrix, sigma_e: &SymMatrix, snr_db: f64) -> SymMatrix {
    let factor = sigma_x.trace() / (sigma_e.trace() * snr_ratio(snr_db));
    sigma_e.scaled(factor)
}

/// Signal and (unscaled) noise covariances of order `n` for a seed.
pub fn random_covariances(
    n: usize,
    eig_range: (f64, f64),
    seed: u64,
) -> Result<(SymMatrix, SymMatrix)> {
    let sx = random_psd(
        n,
        eig_range.0,
        eig_range.1,
        &mut RngStream::new(seed, STREAM_SIGMA_X),
    )?;
    let se = random_psd(
        n,
        eig_range.0,
        eig_range.1,
        &mut RngStream::new(seed, STREAM_SIGMA_E),
    )?;
    Ok((sx, se))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformRow {
    pub index: usize,
    pub optimal: bool,
    pub bound: BoundReport,
}

#[derive(Debug, Clone)]
pub struct RandomVsOptTable {
    pub n: usize,
    pub m: usize,
    pub rows: Vec<TransformRow>,
    pub optimal_index: usize,
}

impl RandomVsOptTable {
    pub fn optimal(&self) -> &TransformRow {
        &self.rows[self.optimal_index]
    }

    pub fn best_random(&self) -> &TransformRow {
        self.rows
            .iter()
            .filter(|r| !r.optimal)
            .max_by(|a, b| a.bound.j_value.total_cmp(&b.bound.j_value))
            .expect("at least one random transform")
    }

    /// Best random bound over the optimal bound; at least one.
    pub fn bound_ratio(&self) -> f64 {
        self.best_random().bound.expected_chernoff / self.optimal().bound.expected_chernoff
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,transform,j,bound,reciprocal_bound\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.index,
                if r.optimal { "optimal" } else { "random" },
                fmt_float(r.bound.j_value),
                fmt_float(r.bound.expected_chernoff),
                fmt_float(r.bound.reciprocal())
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "n={} m={} transforms={} optimal_bound={} best_random_bound={} ratio={}",
            self.n,
            self.m,
            self.rows.len(),
            fmt_float(self.optimal().bound.expected_chernoff),
            fmt_float(self.best_random().bound.expected_chernoff),
            fmt_float(self.bound_ratio())
        )
    }
}

/// `random_transforms` Gaussian transforms with the canonical optimum
/// inserted at the middle index.
pub fn run_random_vs_opt(cfg: &ExperimentConfig) -> Result<RandomVsOptTable> {
    if cfg.kind != Kind::RandomVsOpt {
        return Err(Error::Config(format!(
            "expected random-vs-opt, got {}",
            cfg.kind
        )));
    }
    let (n, m) = (cfg.n[0], cfg.m[0]);
    let (sx, se) = random_covariances(n, cfg.eig_range, cfg.seed)?;
    let se = scale_noise_to_snr(&sx, &se, cfg.snr_db[0]);
    let factors = factorize(&sx, &se, m)?;
    let opt = build_optimal(&factors, &FamilyMember::default())?;

    let mut rng = RngStream::new(cfg.seed, STREAM_RANDOM_T);
    let transforms = (0..cfg.random_transforms)
        .map(|_| random_full_rank_t(n, m, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let bound_of = |t| -> Result<BoundReport> {
        let inst = ProblemInstance::new(sx.clone(), se.clone(), t)?;
        let stats = conditional_stats(&inst)?;
        expected_chernoff_bound_with(&inst, &stats)
    };
    let random_bounds = transforms
        .into_par_iter()
        .map(bound_of)
        .collect::<Result<Vec<_>>>()?;

    let optimal_index = cfg.random_transforms / 2;
    let mut rows = Vec::with_capacity(random_bounds.len() + 1);
    let mut random_iter = random_bounds.into_iter();
    for index in 0..=cfg.random_transforms {
        if index == optimal_index {
            rows.push(TransformRow {
                index,
                optimal: true,
                bound: BoundReport::from_j(opt.attained_j),
            });
        } else {
            rows.push(TransformRow {
                index,
                optimal: false,
                bound: random_iter.next().expect("counted"),
            });
        }
    }
    Ok(RandomVsOptTable {
        n,
        m,
        rows,
        optimal_index,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub m: usize,
    pub snr_db: f64,
    /// Realized `tr Σx / tr Σe` at this point.
    pub trace_ratio: f64,
    pub j_opt: f64,
    pub bound_opt: f64,
    pub bound_best_random: Option<f64>,
    pub p_hat: Option<f64>,
    pub std_err: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub kind: Kind,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn independent_name(&self) -> &'static str {
        match self.kind {
            Kind::SweepSnr => "snr_db",
            Kind::SweepM => "m",
            _ => "n",
        }
    }

    pub fn bounds(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.bound_opt).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,m,snr_db,trace_ratio,j_opt,bound_opt,bound_best_random,p_hat,std_err\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.m,
                fmt_float(r.snr_db),
                fmt_float(r.trace_ratio),
                fmt_float(r.j_opt),
                fmt_float(r.bound_opt),
                fmt_opt(r.bound_best_random),
                fmt_opt(r.p_hat),
                fmt_opt(r.std_err)
            );
        }
        out
    }
}

struct SweepPoint {
    sigma_x: SymMatrix,
    sigma_e: SymMatrix,
    m: usize,
    snr_db: f64,
}

/// Bound at the optimum along one swept variable.
///
/// Covariances are drawn once per sweep so that the curve reflects the swept
/// variable, not redraws: SNR points rescale one noise matrix, `m` points
/// share both matrices, and `n` points use leading principal blocks of
/// matrices drawn at the largest `n` (noise scaled there), which nests the
/// observation spaces.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    if !cfg.kind.is_sweep() {
        return Err(Error::Config(format!(
            "expected a sweep kind, got {}",
            cfg.kind
        )));
    }
    let points: Vec<SweepPoint> = match cfg.kind {
        Kind::SweepSnr => {
            let (sx, se) = random_covariances(cfg.n[0], cfg.eig_range, cfg.seed)?;
            cfg.snr_db
                .iter()
                .map(|&snr| SweepPoint {
                    sigma_e: scale_noise_to_snr(&sx, &se, snr),
                    sigma_x: sx.clone(),
                    m: cfg.m[0],
                    snr_db: snr,
                })
                .collect()
        }
        Kind::SweepM => {
            let (sx, se) = random_covariances(cfg.n[0], cfg.eig_range, cfg.seed)?;
            let se = scale_noise_to_snr(&sx, &se, cfg.snr_db[0]);
            cfg.m
                .iter()
                .map(|&m| SweepPoint {
                    sigma_x: sx.clone(),
                    sigma_e: se.clone(),
                    m,
                    snr_db: cfg.snr_db[0],
                })
                .collect()
        }
        Kind::SweepN => {
            let n_max = *cfg.n.iter().max().expect("non-empty");
            let (sx, se) = random_covariances(n_max, cfg.eig_range, cfg.seed)?;
            let se = scale_noise_to_snr(&sx, &se, cfg.snr_db[0]);
            cfg.n
                .iter()
                .map(|&n| SweepPoint {
                    sigma_x: sx.leading(n),
                    sigma_e: se.leading(n),
                    m: cfg.m[0],
                    snr_db: cfg.snr_db[0],
                })
                .collect()
        }
        _ => unreachable!(),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(idx, p)| sweep_point(cfg, idx as u64, p))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SweepTable {
        kind: cfg.kind,
        rows,
    })
}

fn sweep_point(cfg: &ExperimentConfig, idx: u64, p: &SweepPoint) -> Result<SweepRow> {
    let n = p.sigma_x.order();
    let factors = factorize(&p.sigma_x, &p.sigma_e, p.m)?;
    let opt = build_optimal(&factors, &FamilyMember::default())?;
    let bound = BoundReport::from_j(opt.attained_j);

    let bound_best_random = if cfg.random_transforms > 0 {
        let mut rng = RngStream::new(cfg.seed, STREAM_POINT_RANDOM_T + idx);
        let mut best_j = f64::NEG_INFINITY;
        for _ in 0..cfg.random_transforms {
            let t = random_full_rank_t(n, p.m, &mut rng)?;
            let inst = ProblemInstance::new(p.sigma_x.clone(), p.sigma_e.clone(), t)?;
            let stats = conditional_stats(&inst)?;
            best_j = best_j.max(expected_chernoff_bound_with(&inst, &stats)?.j_value);
        }
        Some(BoundReport::from_j(best_j).expected_chernoff)
    } else {
        None
    };

    let (p_hat, std_err) = if cfg.trials > 0 {
        let seed = RngStream::new(cfg.seed, STREAM_POINT_MC_SEED + idx).next_u64();
        let plan = TrialPlan::new(opt.instance(&factors)?, cfg.trials, seed);
        let r = run_unconditional(&plan)?;
        (Some(r.p_hat), Some(r.std_err))
    } else {
        (None, None)
    };

    Ok(SweepRow {
        n,
        m: p.m,
        snr_db: p.snr_db,
        trace_ratio: p.sigma_x.trace() / p.sigma_e.trace(),
        j_opt: opt.attained_j,
        bound_opt: bound.expected_chernoff,
        bound_best_random,
        p_hat,
        std_err,
    })
}

/// Diagnostics for one explicitly supplied instance.
#[derive(Debug, Clone)]
pub struct InspectReport {
    pub n: usize,
    pub m: usize,
    pub singular_ratio: f64,
    pub cond_cov_spectrum: Vec<f64>,
    pub bound: BoundReport,
    /// Bare product optimum.
    pub optimal_value: f64,
    pub optimal_j: f64,
    pub optimal_bound: f64,
}

impl InspectReport {
    /// `J(T_opt) − J(T)`; zero at an optimal transform.
    pub fn gap(&self) -> f64 {
        self.optimal_j - self.bound.j_value
    }
}

impl fmt::Display for InspectReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "m = {}", self.m)?;
        writeln!(
            f,
            "rank check = ok (singular value ratio {})",
            fmt_float(self.singular_ratio)
        )?;
        let spectrum: Vec<String> = self
            .cond_cov_spectrum
            .iter()
            .map(|v| fmt_float(*v))
            .collect();
        writeln!(f, "cond_cov spectrum = [{}]", spectrum.join(", "))?;
        writeln!(f, "j_value = {}", fmt_float(self.bound.j_value))?;
        writeln!(
            f,
            "expected_chernoff_bound = {}",
            fmt_float(self.bound.expected_chernoff)
        )?;
        writeln!(f, "optimal_value = {}", fmt_float(self.optimal_value))?;
        writeln!(f, "optimal_j = {}", fmt_float(self.optimal_j))?;
        writeln!(f, "optimal_bound = {}", fmt_float(self.optimal_bound))?;
        writeln!(f, "gap = {}", fmt_float(self.gap()))
    }
}

pub fn inspect_instance(inst: &ProblemInstance) -> Result<InspectReport> {
    let stats = conditional_stats(inst)?;
    let bound = expected_chernoff_bound_with(inst, &stats)?;
    let factors = factorize(inst.sigma_x(), inst.sigma_e(), inst.m())?;
    let s = singular_values(inst.transform());
    Ok(InspectReport {
        n: inst.n(),
        m: inst.m(),
        singular_ratio: s[s.len() - 1] / s[0],
        cond_cov_spectrum: eigenvalues_ascending(stats.cond_cov())?,
        bound,
        optimal_value: factors.optimal_value(),
        optimal_j: factors.optimal_j(),
        optimal_bound: BoundReport::from_j(factors.optimal_j()).expected_chernoff,
    })
}

pub fn inspect(cfg: &ExperimentConfig) -> Result<InspectReport> {
    let inputs = cfg
        .inspect
        .as_ref()
        .ok_or_else(|| Error::Config("inspect needs sigma_x, sigma_e and transform".into()))?;
    let sx = SymMatrix::new(matfile::read_matrix(&inputs.sigma_x)?)?;
    let se = SymMatrix::new(matfile::read_matrix(&inputs.sigma_e)?)?;
    let t = matfile::read_matrix(&inputs.transform)?;
    let inst = ProblemInstance::new(sx, se, t)?;
    inspect_instance(&inst)
}

/// Writes `text` to `path`, or stdout when no path is given.
pub fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
