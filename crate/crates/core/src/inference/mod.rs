//! Posterior inference that follows the factorization of the observed-data likelihood.
//!
//! The observed-data mixture is fit by Gibbs sampling, `Q` is updated from the observed and
//! missing counts, and the mechanism parameters the data cannot inform are drawn from their
//! prior with the intercept solved so that each draw reproduces its `Q`. The three blocks use
//! separate generator streams, so changing the mechanism seed leaves the mixture and `Q` draws
//! untouched.

mod gibbs;
mod impute;
mod prior;
mod slice;
mod summary;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use gibbs::fit_observed_mixture;
pub use impute::impute;
pub use prior::{
    posterior_q, sample_mechanism, BetaPrior, MechanismPrior, MixturePrior, PriorConfig, RejectionStats,
    ScalarPrior, MAX_REJECTION_RATE, REJECTION_WINDOW,
};
pub use slice::slice_sample;
pub use summary::{summarize, summarize_columns, Summary, SummaryRow};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::expfam::MixtureModel;
use crate::model::{q_closed_form, TukeyModel};
use crate::params::{self, ParamMap};

fn default_chains() -> usize {
    4
}
fn default_iterations() -> usize {
    5000
}
fn default_burnin() -> usize {
    2500
}
fn default_thin() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_burnin")]
    pub burnin: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
    pub seed: u64,
    /// Seed for the mechanism-prior stream; defaults to `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mechanism_seed: Option<u64>,
}

impl McmcConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            chains: default_chains(),
            iterations: default_iterations(),
            burnin: default_burnin(),
            thin: default_thin(),
            seed,
            mechanism_seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::config("mcmc.chains", "at least one chain is required"));
        }
        if self.burnin >= self.iterations {
            return Err(Error::config("mcmc.burnin", "burnin must be smaller than iterations"));
        }
        if self.thin == 0 {
            return Err(Error::config("mcmc.thin", "thin must be at least 1"));
        }
        Ok(())
    }

    pub fn is_retained(&self, iteration: usize) -> bool {
        iteration >= self.burnin && (iteration - self.burnin) % self.thin == 0
    }

    /// Retained iteration numbers, identical for every chain.
    pub fn retained_iterations(&self) -> Vec<usize> {
        (self.burnin..self.iterations).step_by(self.thin).collect()
    }

    pub fn retained_per_chain(&self) -> usize {
        (self.iterations - self.burnin).div_ceil(self.thin)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Mixture = 0,
    Q = 1,
    Mechanism = 2,
}

/// Independent generator for one `(chain, block)` pair.
pub(crate) fn stream_rng(seed: u64, chain: usize, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64 * 4 + stream as u64);
    rng
}

/// Joint posterior draws as named columns indexed by `(chain, iteration)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PosteriorDraws {
    pub chain: Vec<usize>,
    pub iteration: Vec<usize>,
    pub columns: BTreeMap<String, Vec<f64>>,
}

impl PosteriorDraws {
    pub fn new(chain: Vec<usize>, iteration: Vec<usize>, columns: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        if chain.len() != iteration.len() || columns.values().any(|c| c.len() != chain.len()) {
            return Err(Error::Data("draw columns have unequal lengths".into()));
        }
        Ok(Self { chain, iteration, columns })
    }

    /// Flattens validated models; all must share one parameter layout.
    pub fn from_models<'a>(rows: impl IntoIterator<Item = (usize, usize, &'a TukeyModel<f64>)>) -> Result<Self> {
        let mut out = Self::default();
        for (i, (chain, iteration, model)) in rows.into_iter().enumerate() {
            let mut map = ParamMap::new();
            params::insert_model(&mut map, model);
            if i == 0 {
                out.columns = map.keys().map(|k| (k.clone(), Vec::new())).collect();
            }
            if map.len() != out.columns.len() {
                return Err(Error::Data(format!("draw {i} has a different parameter layout")));
            }
            for (k, v) in map {
                out.columns
                    .get_mut(&k)
                    .ok_or_else(|| Error::Data(format!("draw {i} has unexpected parameter `{k}`")))?
                    .push(v);
            }
            out.chain.push(chain);
            out.iteration.push(iteration);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    pub fn row(&self, i: usize) -> ParamMap {
        self.columns.iter().map(|(k, v)| (k.clone(), v[i])).collect()
    }

    /// The validated joint model of draw `i`.
    pub fn model(&self, i: usize) -> Result<TukeyModel<f64>> {
        params::model_from(&self.row(i))
    }
}

/// Source of `Q` for each joint draw.
#[derive(Debug, Clone, Copy)]
enum QSource {
    Posterior(BetaPrior),
    Fixed(f64),
}

fn attach_mechanisms(
    mixtures: Vec<Vec<MixtureModel<f64>>>,
    q_source: QSource,
    prior: &PriorConfig,
    mcmc: &McmcConfig,
) -> Result<PosteriorDraws> {
    let iterations = mcmc.retained_iterations();
    let mech_seed = mcmc.mechanism_seed.unwrap_or(mcmc.seed);
    let chains: Vec<Vec<TukeyModel<f64>>> = mixtures
        .into_par_iter()
        .enumerate()
        .map(|(c, chain)| {
            let mut q_rng = stream_rng(mcmc.seed, c, Stream::Q);
            let mut mech_rng = stream_rng(mech_seed, c, Stream::Mechanism);
            let mut stats = RejectionStats::default();
            chain
                .into_iter()
                .map(|obs| {
                    let (mech, q) = if prior.mechanism.is_known() {
                        let mech = sample_mechanism(&prior.mechanism, &obs, 0.5, &mut mech_rng, &mut stats)?;
                        let q = q_closed_form(&obs, &mech)?;
                        (mech, q)
                    } else {
                        let q = match q_source {
                            QSource::Posterior(beta) => beta.sample(&mut q_rng),
                            QSource::Fixed(q) => q,
                        };
                        (sample_mechanism(&prior.mechanism, &obs, q, &mut mech_rng, &mut stats)?, q)
                    };
                    TukeyModel::new(obs, mech, q)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    PosteriorDraws::from_models(
        chains
            .iter()
            .enumerate()
            .flat_map(|(c, ms)| ms.iter().zip(&iterations).map(move |(m, &it)| (c, it, m))),
    )
}

/// Full posterior: mixture fit, `Q` update and mechanism-prior draws.
///
/// With a known mechanism `Q` is the value implied by each mixture draw rather than a draw from
/// the count posterior.
pub fn sample_posterior(data: &Dataset, prior: &PriorConfig, mcmc: &McmcConfig) -> Result<PosteriorDraws> {
    prior.validate()?;
    let n_mis = data.n_missing_known().then(|| data.n_missing());
    let q_post = posterior_q(data.n_observed(), n_mis, prior.q_prior)?;
    let mixtures = fit_observed_mixture(data, &prior.mixture, mcmc)?;
    attach_mechanisms(mixtures, QSource::Posterior(q_post), prior, mcmc)
}

/// Posterior with the observed-data block known exactly (the infinite-sample limit): the
/// mixture and `Q` are pinned, and only the mechanism prior varies across draws.
pub fn sample_pinned(obs: &MixtureModel<f64>, q: f64, prior: &PriorConfig, mcmc: &McmcConfig) -> Result<PosteriorDraws> {
    prior.mechanism.validate()?;
    mcmc.validate()?;
    let mixtures = vec![vec![obs.clone(); mcmc.retained_per_chain()]; mcmc.chains];
    attach_mechanisms(mixtures, QSource::Fixed(q), prior, mcmc)
}

/// Complete-data estimands per joint draw.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimandDraws {
    pub chain: Vec<usize>,
    pub iteration: Vec<usize>,
    pub complete_mean: Vec<f64>,
    pub complete_sd: Vec<f64>,
    /// Largest absolute error of the complete-data atom probabilities against a reference.
    pub atom_max_error: Option<Vec<f64>>,
}

impl EstimandDraws {
    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn columns(&self) -> BTreeMap<String, Vec<f64>> {
        let mut out = BTreeMap::new();
        out.insert("complete_mean".to_string(), self.complete_mean.clone());
        out.insert("complete_sd".to_string(), self.complete_sd.clone());
        if let Some(e) = &self.atom_max_error {
            out.insert("atom_max_error".to_string(), e.clone());
        }
        out
    }
}

/// `max_m |p_m - p_m^ref|` over the atom probabilities (conditional on the discrete part) of two
/// complete-data models; `None` when the reference has no atoms.
pub fn atom_max_error(complete: &MixtureModel<f64>, reference: &MixtureModel<f64>) -> Option<f64> {
    if reference.atoms().is_empty() {
        return None;
    }
    let err = reference
        .atoms()
        .iter()
        .map(|a| {
            let p = complete.atom_index(a.location).map_or(0.0, |i| complete.atoms()[i].prob);
            (p - a.prob).abs()
        })
        .fold(0.0, f64::max);
    Some(err)
}

/// Pushes each joint draw forward to the complete-data mean and sd. With a `truth` model the
/// atom-probability error against its complete-data law is recorded as well.
pub fn posterior_estimands(draws: &PosteriorDraws, truth: Option<&TukeyModel<f64>>) -> Result<EstimandDraws> {
    let reference = truth.map(|t| t.complete_model()).transpose()?;
    let rows: Vec<(f64, f64, Option<f64>)> = (0..draws.len())
        .into_par_iter()
        .map(|i| {
            let complete = draws.model(i)?.complete_model()?;
            let (mean, var) = complete.moments();
            let err = reference.as_ref().and_then(|r| atom_max_error(&complete, r));
            Ok((mean, var.sqrt(), err))
        })
        .collect::<Result<_>>()?;
    let with_error = reference.as_ref().is_some_and(|r| !r.atoms().is_empty());
    Ok(EstimandDraws {
        chain: draws.chain.clone(),
        iteration: draws.iteration.clone(),
        complete_mean: rows.iter().map(|r| r.0).collect(),
        complete_sd: rows.iter().map(|r| r.1).collect(),
        atom_max_error: with_error.then(|| rows.iter().map(|r| r.2.unwrap_or(0.0)).collect()),
    })
}
