//! The two reference studies: a semicontinuous Tukey-specified model analysed at growing sample
//! sizes, and a selection-normal robustness check with the mechanism known.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::{
    posterior_estimands, sample_pinned, sample_posterior, EstimandDraws, McmcConfig, MechanismPrior, MixturePrior,
    PriorConfig,
};
use crate::io::{fmt_f64, parse_prior_config, parse_sim_config};
use crate::mechanism::MechanismSpec;
use crate::model::TukeyModel;
use crate::simulate::{simulate_selection_normal, simulate_tukey, Process, SimConfig};
use crate::stats;

pub const SIM41_SIM_CONFIG: &str = include_str!("../configs/sim41.sim.json");
pub const SIM41_PRIOR_CONFIG: &str = include_str!("../configs/sim41.prior.json");

/// Quantiles reported per estimand.
pub const QUANTILES: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

/// A seed for sub-task `tag`, drawn from a stream of the master seed.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(tag);
    rng.next_u64()
}

pub fn sim41_config() -> Result<SimConfig> {
    parse_sim_config(SIM41_SIM_CONFIG, Path::new("configs/sim41.sim.json"))
}

/// The data-generating model of the semicontinuous study.
pub fn sim41_model() -> Result<TukeyModel<f64>> {
    match sim41_config()?.process {
        Process::Tukey(model) => Ok(model),
        Process::SelectionNormal { .. } => Err(Error::config("process", "expected a tukey process")),
    }
}

/// The study prior and its MCMC settings.
pub fn sim41_prior() -> Result<(PriorConfig, McmcConfig)> {
    let (prior, mcmc) = parse_prior_config(SIM41_PRIOR_CONFIG, Path::new("configs/sim41.prior.json"))?;
    Ok((prior, mcmc.resolve()?))
}

/// Estimand draws for one sample size; `None` pins the observed-data block to the truth.
pub fn sim41_cell(
    model: &TukeyModel<f64>,
    prior: &PriorConfig,
    n: Option<usize>,
    seed: u64,
    mcmc: &McmcConfig,
) -> Result<EstimandDraws> {
    let mcmc = McmcConfig { seed: derive_seed(seed, 1), mechanism_seed: None, ..*mcmc };
    let draws = match n {
        Some(n) => {
            let (data, _) = simulate_tukey(model, n, derive_seed(seed, 0))?;
            sample_posterior(&data, prior, &mcmc)?
        }
        None => sample_pinned(&model.obs, model.q, prior, &mcmc)?,
    };
    posterior_estimands(&draws, Some(model))
}

pub const SIM41_SIZES: [Option<usize>; 4] = [Some(100), Some(1000), Some(10_000), None];

pub fn size_label(n: Option<usize>) -> String {
    n.map_or("ninf".to_string(), |n| format!("n{n}"))
}

/// Quantiles of every estimand at every sample size, with the true values.
#[derive(Debug, Clone, PartialEq)]
pub struct Sim41Table {
    pub truth_mean: f64,
    pub truth_sd: f64,
    pub cells: Vec<(Option<usize>, EstimandDraws)>,
}

pub fn run_sim41(seed: u64) -> Result<Sim41Table> {
    let model = sim41_model()?;
    let (prior, mcmc) = sim41_prior()?;
    let (truth_mean, truth_sd) = model.complete_moments()?;
    let cells = SIM41_SIZES
        .par_iter()
        .enumerate()
        .map(|(i, &n)| Ok((n, sim41_cell(&model, &prior, n, derive_seed(seed, i as u64), &mcmc)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Sim41Table { truth_mean, truth_sd, cells })
}

impl Sim41Table {
    /// `estimand,quantile,truth,n100,n1000,n10000,ninf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("estimand,quantile,truth");
        for (n, _) in &self.cells {
            write!(out, ",{}", size_label(*n)).unwrap();
        }
        out.push('\n');
        let estimands: [(&str, f64); 3] =
            [("complete_mean", self.truth_mean), ("complete_sd", self.truth_sd), ("atom_max_error", 0.0)];
        for (name, truth) in estimands {
            for p in QUANTILES {
                write!(out, "{name},{},{}", fmt_f64(p), fmt_f64(truth)).unwrap();
                for (_, est) in &self.cells {
                    let col = est.columns().remove(name).unwrap_or_default();
                    out.push(',');
                    out.push_str(&fmt_f64(stats::quantile(&col, p)));
                }
                out.push('\n');
            }
        }
        out
    }
}

pub const ROBUST42_CELLS: [(usize, usize); 2] = [(100, 3), (1000, 5)];
pub const ROBUST42_SLOPES: [f64; 3] = [1.0, 2.0, 5.0];
pub const ROBUST42_B0: f64 = 0.5;
pub const ROBUST42_REPS: usize = 20;

pub fn robust42_mcmc() -> McmcConfig {
    McmcConfig { chains: 2, iterations: 2000, burnin: 1000, thin: 2, seed: 0, mechanism_seed: None }
}

/// One replicate of the robustness study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Robust42Row {
    pub n: usize,
    pub k: usize,
    pub b1: f64,
    pub rep: usize,
    pub seed: u64,
    pub truth_mean: f64,
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
    pub abs_error: f64,
}

/// Standard normal data with `logistic(b0 + b1 y)` selection, fit with a `k`-component mixture and
/// the mechanism taken as known.
pub fn robust42_rep(n: usize, k: usize, b1: f64, rep: usize, seed: u64, mcmc: &McmcConfig) -> Result<Robust42Row> {
    let (data, truth) = simulate_selection_normal(0.0, 1.0, ROBUST42_B0, b1, n, derive_seed(seed, 0))?;
    let prior = PriorConfig {
        mixture: MixturePrior::new(k, vec![]),
        mechanism: MechanismPrior::Known { mechanism: MechanismSpec::LinearLogit { b0: ROBUST42_B0, b1 } },
        q_prior: Default::default(),
    };
    let mcmc = McmcConfig { seed: derive_seed(seed, 1), ..*mcmc };
    let est = posterior_estimands(&sample_posterior(&data, &prior, &mcmc)?, None)?;
    let mut sorted = est.complete_mean;
    sorted.sort_by(f64::total_cmp);
    let median = stats::quantile_sorted(&sorted, 0.5);
    Ok(Robust42Row {
        n,
        k,
        b1,
        rep,
        seed,
        truth_mean: truth.complete_mean,
        median,
        lo: stats::quantile_sorted(&sorted, 0.025),
        hi: stats::quantile_sorted(&sorted, 0.975),
        abs_error: (median - truth.complete_mean).abs(),
    })
}

pub fn run_robust42(seed: u64, reps: usize, mcmc: &McmcConfig) -> Result<Vec<Robust42Row>> {
    let mut jobs = Vec::new();
    for (c, &(n, k)) in ROBUST42_CELLS.iter().enumerate() {
        for (s, &b1) in ROBUST42_SLOPES.iter().enumerate() {
            for rep in 0..reps {
                let tag = ((c * ROBUST42_SLOPES.len() + s) * 10_000 + rep) as u64;
                jobs.push((n, k, b1, rep, derive_seed(seed, tag)));
            }
        }
    }
    jobs.par_iter().map(|&(n, k, b1, rep, s)| robust42_rep(n, k, b1, rep, s, mcmc)).collect()
}

/// Per-cell median absolute error and interval coverage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Robust42Summary {
    pub n: usize,
    pub k: usize,
    pub b1: f64,
    pub median_abs_error: f64,
    pub coverage: f64,
}

pub fn summarize_robust42(rows: &[Robust42Row]) -> Vec<Robust42Summary> {
    let mut out = Vec::new();
    for &(n, k) in &ROBUST42_CELLS {
        for &b1 in &ROBUST42_SLOPES {
            let cell: Vec<&Robust42Row> = rows.iter().filter(|r| r.n == n && r.k == k && r.b1 == b1).collect();
            if cell.is_empty() {
                continue;
            }
            let errors: Vec<f64> = cell.iter().map(|r| r.abs_error).collect();
            let covered = cell.iter().filter(|r| r.lo <= r.truth_mean && r.truth_mean <= r.hi).count();
            out.push(Robust42Summary {
                n,
                k,
                b1,
                median_abs_error: stats::quantile(&errors, 0.5),
                coverage: covered as f64 / cell.len() as f64,
            });
        }
    }
    out
}

pub fn robust42_rows_csv(rows: &[Robust42Row]) -> String {
    let mut out = String::from("n,k,b1,rep,seed,truth_mean,median,lo,hi,abs_error\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.k,
            fmt_f64(r.b1),
            r.rep,
            r.seed,
            fmt_f64(r.truth_mean),
            fmt_f64(r.median),
            fmt_f64(r.lo),
            fmt_f64(r.hi),
            fmt_f64(r.abs_error)
        )
        .unwrap();
    }
    out
}

pub fn robust42_summary_csv(summary: &[Robust42Summary]) -> String {
    let mut out = String::from("n,k,b1,median_abs_error,coverage\n");
    for s in summary {
        writeln!(out, "{},{},{},{},{}", s.n, s.k, fmt_f64(s.b1), fmt_f64(s.median_abs_error), fmt_f64(s.coverage))
            .unwrap();
    }
    out
}

/// Runs a study and writes its tables into `dir` (created if needed). Returns the written paths.
pub fn replicate(study: &str, seed: u64, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(dir)?;
    match study {
        "sim41" => {
            let table = run_sim41(seed)?;
            let path = dir.join("sim41.csv");
            fs::write(&path, table.to_csv())?;
            Ok(vec![path])
        }
        "robust42" => {
            let rows = run_robust42(seed, ROBUST42_REPS, &robust42_mcmc())?;
            let rows_path = dir.join("robust42.csv");
            let summary_path = dir.join("robust42_summary.csv");
            fs::write(&rows_path, robust42_rows_csv(&rows))?;
            fs::write(&summary_path, robust42_summary_csv(&summarize_robust42(&rows)))?;
            Ok(vec![rows_path, summary_path])
        }
        other => Err(Error::InvalidArgument(format!("unknown study `{other}`"))),
    }
}
