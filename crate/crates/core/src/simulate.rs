//! Ground-truth data generation with exact true estimands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Record};
use crate::error::{Error, Result};
use crate::model::TukeyModel;
use crate::params::{self, ParamMap};
use crate::scalar::logistic;

/// Data-generating process.
#[derive(Debug, Clone, PartialEq)]
pub enum Process {
    /// Pattern-mixture route: `r ~ Bernoulli(Q)`, then `y` from the observed or missing-data law.
    Tukey(TukeyModel<f64>),
    /// Selection route: `y ~ N(mu, sigma^2)`, then `r ~ Bernoulli(logistic(b0 + b1 y))`.
    SelectionNormal { mu: f64, sigma: f64, b0: f64, b1: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub process: Process,
    pub n: usize,
    pub seed: u64,
    pub record_missing_values: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        match &self.process {
            Process::Tukey(model) => {
                let v = model.validate();
                if !v.is_empty() {
                    return Err(Error::Validation(v.iter().map(|x| x.to_string()).collect()));
                }
            }
            Process::SelectionNormal { mu, sigma, b0, b1 } => {
                if !(*sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::NonPositiveVariance(*sigma));
                }
                if ![mu, b0, b1].iter().all(|x| x.is_finite()) {
                    return Err(Error::InvalidArgument("selection parameters must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

/// Generating parameters and exact complete-data estimands of one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthRecord {
    pub parameters: ParamMap,
    pub complete_mean: f64,
    pub complete_sd: f64,
    pub q: f64,
    /// Unobserved values in record order, if retained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masked_values: Option<Vec<f64>>,
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    Ok(())
}

fn truth_without_sample(config: &SimConfig) -> Result<TruthRecord> {
    let mut parameters = ParamMap::new();
    let (complete_mean, complete_sd, q) = match &config.process {
        Process::Tukey(model) => {
            params::insert_model(&mut parameters, model);
            let (m, s) = model.complete_moments()?;
            (m, s, model.q)
        }
        Process::SelectionNormal { mu, sigma, b0, b1 } => {
            for (k, v) in [("mu", mu), ("sigma", sigma), ("b0", b0), ("b1", b1)] {
                parameters.insert(k.into(), *v);
            }
            (*mu, *sigma, selection_normal_q(*mu, *sigma, *b0, *b1))
        }
    };
    Ok(TruthRecord { parameters, complete_mean, complete_sd, q, masked_values: None })
}

/// `P(R = 1)` for the selection-normal process, integrated over the standardized value.
fn selection_normal_q(mu: f64, sigma: f64, b0: f64, b1: f64) -> f64 {
    let cfg = crate::quadrature::QuadratureConfig::default();
    let dens = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    crate::quadrature::adaptive_simpson(|z| dens(z) * logistic(b0 + b1 * (mu + sigma * z)), -12.0, 12.0, &cfg).value
}

/// True complete-data estimands of a configuration.
pub fn true_estimands(config: &SimConfig) -> Result<TruthRecord> {
    truth_without_sample(config)
}

pub fn simulate_tukey(model: &TukeyModel<f64>, n: usize, seed: u64) -> Result<(Dataset, TruthRecord)> {
    check_n(n)?;
    let v = model.validate();
    if !v.is_empty() {
        return Err(Error::Validation(v.iter().map(|x| x.to_string()).collect()));
    }
    let missing = model.missing_model()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n);
    let mut masked = Vec::new();
    for _ in 0..n {
        if rng.random::<f64>() < model.q {
            records.push(Record::observed(model.obs.draw(&mut rng)));
        } else {
            masked.push(missing.draw(&mut rng));
            records.push(Record::missing());
        }
    }
    let config = SimConfig { process: Process::Tukey(model.clone()), n, seed, record_missing_values: true };
    let mut truth = truth_without_sample(&config)?;
    truth.masked_values = Some(masked);
    Ok((Dataset::new(records, true)?, truth))
}

pub fn simulate_selection_normal(
    mu: f64,
    sigma: f64,
    b0: f64,
    b1: f64,
    n: usize,
    seed: u64,
) -> Result<(Dataset, TruthRecord)> {
    let config = SimConfig { process: Process::SelectionNormal { mu, sigma, b0, b1 }, n, seed, record_missing_values: true };
    config.validate()?;
    let normal = Normal::new(mu, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n);
    let mut masked = Vec::new();
    for _ in 0..n {
        let y = normal.sample(&mut rng);
        if rng.random::<f64>() < logistic(b0 + b1 * y) {
            records.push(Record::observed(y));
        } else {
            masked.push(y);
            records.push(Record::missing());
        }
    }
    let mut truth = truth_without_sample(&config)?;
    truth.masked_values = Some(masked);
    Ok((Dataset::new(records, true)?, truth))
}

/// Runs a configuration, dropping masked values from the truth record if asked to.
pub fn run(config: &SimConfig) -> Result<(Dataset, TruthRecord)> {
    config.validate()?;
    let (data, mut truth) = match &config.process {
        Process::Tukey(model) => simulate_tukey(model, config.n, config.seed)?,
        Process::SelectionNormal { mu, sigma, b0, b1 } => {
            simulate_selection_normal(*mu, *sigma, *b0, *b1, config.n, config.seed)?
        }
    };
    if !config.record_missing_values {
        truth.masked_values = None;
    }
    Ok((data, truth))
}
