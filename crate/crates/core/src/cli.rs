//! Command-line entry point.
//!
//! Exit codes: 0 success, 2 config or validation error, 3 incompatible prior, 4 data
//! precondition, 5 oracle tolerance exceeded.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::expfam::MixtureModel;
use crate::inference::{impute, posterior_estimands, sample_posterior, summarize};
use crate::io::{self, McmcOverrides};
use crate::model::{missing_model, q_closed_form, TukeyModel};
use crate::oracle::{missing_density_pointwise, moments_quadrature, q_quadrature};
use crate::quadrature::QuadratureConfig;
use crate::simulate::{self, Process};
use crate::studies;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_PRIOR: u8 = 3;
pub const EXIT_DATA: u8 = 4;
pub const EXIT_ORACLE: u8 = 5;

/// Tolerance for every closed-form versus oracle comparison.
pub const ORACLE_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "tukey", version, about = "Tukey's representation for non-ignorable missing data")]
pub struct Cli {
    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Study {
    Sim41,
    Robust42,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset and its truth record from a config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: String,
    },
    /// Sample the posterior and write draws, estimand draws and a summary.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        prior: PathBuf,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        burnin: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: String,
    },
    /// Write `m` multiply imputed datasets.
    Impute {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        draws: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: String,
    },
    /// Compare the closed forms of a model config against quadrature.
    OracleCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a reference study and write its tables.
    Replicate {
        #[arg(long, value_enum)]
        study: Study,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::PriorIncompatible(_) => EXIT_PRIOR,
        Error::Data(_) => EXIT_DATA,
        _ => EXIT_CONFIG,
    }
}

fn with_suffix(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}{suffix}"))
}

fn ensure_distinct(inputs: &[&Path], outputs: &[PathBuf]) -> Result<()> {
    for o in outputs {
        if inputs.iter().any(|i| *i == o.as_path()) {
            return Err(Error::InvalidArgument(format!("output {} would overwrite an input", o.display())));
        }
    }
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => {
            Err(Error::InvalidArgument(format!("output directory {} does not exist", p.display())))
        }
        _ => Ok(()),
    }
}

fn log(verbose: bool, msg: impl AsRef<str>) {
    if verbose {
        eprintln!("{}", msg.as_ref());
    }
}

fn cmd_simulate(config: &Path, out: &str, verbose: bool) -> Result<u8> {
    let cfg = io::read_sim_config(config)?;
    let data_path = with_suffix(out, ".data.csv");
    let truth_path = with_suffix(out, ".truth.json");
    ensure_parent(&data_path)?;
    ensure_distinct(&[config], &[data_path.clone(), truth_path.clone()])?;
    let (data, truth) = simulate::run(&cfg)?;
    io::write_dataset(&data, &data_path)?;
    io::write_truth(&truth, &truth_path)?;
    log(verbose, format!("{} records, {} observed", data.len(), data.n_observed()));
    Ok(EXIT_OK)
}

fn cmd_fit(data: &Path, prior: &Path, cli: McmcOverrides, out: &str, verbose: bool) -> Result<u8> {
    let dataset = io::read_dataset(data)?;
    let (prior_cfg, file_mcmc) = io::read_prior_config(prior)?;
    let mcmc = file_mcmc.merged(cli).resolve()?;
    let draws_path = with_suffix(out, ".draws.csv");
    let est_path = with_suffix(out, ".estimands.csv");
    let summary_path = with_suffix(out, ".summary.json");
    ensure_parent(&draws_path)?;
    ensure_distinct(&[data, prior], &[draws_path.clone(), est_path.clone(), summary_path.clone()])?;
    log(verbose, format!("sampling {} chains x {} iterations", mcmc.chains, mcmc.iterations));
    let draws = sample_posterior(&dataset, &prior_cfg, &mcmc)?;
    let estimands = posterior_estimands(&draws, None)?;
    io::write_draws(&draws, &draws_path)?;
    io::write_table(&estimands.chain, &estimands.iteration, &estimands.columns(), &est_path)?;
    io::write_summary(&summarize(&draws, &estimands), &summary_path)?;
    Ok(EXIT_OK)
}

fn cmd_impute(data: &Path, draws: &Path, m: usize, seed: u64, out: &str) -> Result<u8> {
    let dataset = io::read_dataset(data)?;
    let draws_table = io::read_draws(draws)?;
    let paths: Vec<PathBuf> = (1..=m).map(|k| with_suffix(out, &format!(".imp-{k}.csv"))).collect();
    if let Some(p) = paths.first() {
        ensure_parent(p)?;
    }
    ensure_distinct(&[data, draws], &paths)?;
    let completed = impute(&dataset, &draws_table, m, seed)?;
    for (d, p) in completed.iter().zip(&paths) {
        io::write_dataset(d, p)?;
    }
    Ok(EXIT_OK)
}

/// Worst discrepancies between closed forms and quadrature for one model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub q_closed: f64,
    pub q_stored: f64,
    pub q_quadrature: f64,
    pub q_error: f64,
    pub density_error: f64,
    pub mean_error: f64,
    pub sd_error: f64,
}

impl OracleReport {
    pub fn worst(&self) -> (&'static str, f64) {
        [("Q", self.q_error), ("missing density", self.density_error), ("mean", self.mean_error), ("sd", self.sd_error)]
            .into_iter()
            .fold(("Q", f64::NEG_INFINITY), |a, b| if b.1 > a.1 || b.1.is_nan() { b } else { a })
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst().1 <= tol
    }
}

fn grid_bounds(obs: &MixtureModel<f64>, tilted: &MixtureModel<f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for m in [obs, tilted] {
        if m.lambda() > 0.0 {
            for c in m.components() {
                lo = lo.min(c.eta.mean() - 10.0 * c.eta.sd());
                hi = hi.max(c.eta.mean() + 10.0 * c.eta.sd());
            }
        }
        for a in m.atoms() {
            lo = lo.min(a.location - 1.0);
            hi = hi.max(a.location + 1.0);
        }
    }
    (lo, hi)
}

/// Compares `Q`, the missing-data density on a 1,001-point grid plus the atoms, and the complete
/// moments against their quadrature references. The stored `q` is checked too, so a model whose
/// intercept and `q` disagree fails on `Q`.
pub fn oracle_report(model: &TukeyModel<f64>) -> Result<OracleReport> {
    let cfg = QuadratureConfig::default().tightened(100.0);
    let (obs, mech) = (&model.obs, &model.mech);
    let q_closed = q_closed_form(obs, mech)?;
    let q_quad = q_quadrature(obs, mech, &cfg)?;
    let q_error = (q_closed - q_quad).abs().max((model.q - q_quad).abs());

    let mis = missing_model(obs, mech)?;
    let (lo, hi) = grid_bounds(obs, &mis);
    let grid = (0..1001).map(|i| lo + (hi - lo) * i as f64 / 1000.0);
    let density_error = grid
        .chain(obs.atoms().iter().map(|a| a.location))
        .map(|y| (mis.density(y) - missing_density_pointwise(obs, mech, model.q, y)).abs())
        .fold(0.0, f64::max);

    let (mean, sd) = model.complete_moments()?;
    let (mean_q, sd_q) = moments_quadrature(model, &cfg)?;
    Ok(OracleReport {
        q_closed,
        q_stored: model.q,
        q_quadrature: q_quad,
        q_error,
        density_error,
        mean_error: (mean - mean_q).abs(),
        sd_error: (sd - sd_q).abs(),
    })
}

fn cmd_oracle_check(config: &Path) -> Result<u8> {
    let cfg = io::read_sim_config(config)?;
    let model = match cfg.process {
        Process::Tukey(m) => m,
        Process::SelectionNormal { .. } => {
            return Err(Error::config("process", "oracle-check needs a tukey process"));
        }
    };
    let r = oracle_report(&model)?;
    println!("Q closed form     {}", r.q_closed);
    println!("Q stored          {}", r.q_stored);
    println!("Q quadrature      {}", r.q_quadrature);
    println!("max |Q error|     {:e}", r.q_error);
    println!("max |density err| {:e}", r.density_error);
    println!("|mean error|      {:e}", r.mean_error);
    println!("|sd error|        {:e}", r.sd_error);
    let (name, worst) = r.worst();
    if r.passes(ORACLE_TOL) {
        println!("PASS (worst: {name} {worst:e})");
        Ok(EXIT_OK)
    } else {
        println!("FAIL: {name} mismatch {worst:e} exceeds {ORACLE_TOL:e}");
        Ok(EXIT_ORACLE)
    }
}

fn cmd_replicate(study: Study, seed: u64, out: &Path, verbose: bool) -> Result<u8> {
    let name = match study {
        Study::Sim41 => "sim41",
        Study::Robust42 => "robust42",
    };
    log(verbose, format!("running {name} with seed {seed}"));
    for p in studies::replicate(name, seed, out)? {
        log(verbose, format!("wrote {}", p.display()));
    }
    Ok(EXIT_OK)
}

pub fn execute(cli: Cli) -> Result<u8> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Simulate { config, out } => cmd_simulate(&config, &out, verbose),
        Command::Fit { data, prior, chains, iters, burnin, thin, seed, out } => {
            let overrides =
                McmcOverrides { chains, iterations: iters, burnin, thin, seed, mechanism_seed: None };
            cmd_fit(&data, &prior, overrides, &out, verbose)
        }
        Command::Impute { data, draws, m, seed, out } => cmd_impute(&data, &draws, m, seed, &out),
        Command::OracleCheck { config } => cmd_oracle_check(&config),
        Command::Replicate { study, seed, out } => cmd_replicate(study, seed, &out, verbose),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Validation(list) = &e {
                for v in list {
                    eprintln!("  - {v}");
                }
            }
            exit_code(&e)
        }
    }
}
