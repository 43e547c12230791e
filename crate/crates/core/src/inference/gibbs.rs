//! Data-augmentation Gibbs sampler for the semicontinuous observed-data mixture.
//!
//! Values equal to a configured atom location are allocated to that atom; the rest are
//! allocated among the Gaussian components each sweep. Weights, atom probabilities and the
//! continuous fraction have conjugate Dirichlet/Beta updates, means are conjugate normal, and
//! standard deviations (uniform prior on a bounded interval) are slice sampled.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use super::prior::MixturePrior;
use super::slice::slice_sample;
use super::{stream_rng, McmcConfig, Stream};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::expfam::{Atom, Component, GaussianNatural, MixtureModel};
use crate::stats;

const MAX_DOUBLINGS: u32 = 10;

struct Prepared {
    continuous: Vec<f64>,
    atom_counts: Vec<usize>,
    slice_width: f64,
}

fn prepare(data: &Dataset, prior: &MixturePrior) -> Result<Prepared> {
    let mut continuous = Vec::new();
    let mut atom_counts = vec![0usize; prior.atom_locations.len()];
    for y in data.observed_values() {
        match prior.atom_locations.iter().position(|&g| g == y) {
            Some(m) => atom_counts[m] += 1,
            None => continuous.push(y),
        }
    }
    if continuous.is_empty() && atom_counts.iter().all(|&c| c == 0) {
        return Err(Error::Data("no observed records".into()));
    }
    let mut sorted = continuous.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() < prior.k {
        return Err(Error::Data(format!(
            "{} components requested but only {} distinct non-atom observed values",
            prior.k,
            sorted.len()
        )));
    }
    let sd = if continuous.len() > 1 { stats::variance(&continuous).sqrt() } else { 0.0 };
    let slice_width = if sd > 0.0 { 0.1 * sd } else { 0.1 * prior.sd_prior_upper };
    Ok(Prepared { continuous, atom_counts, slice_width })
}

#[derive(Clone)]
struct State {
    lambda: f64,
    w: Vec<f64>,
    mu: Vec<f64>,
    sigma: Vec<f64>,
    p: Vec<f64>,
}

impl State {
    fn initial(prep: &Prepared, prior: &MixturePrior, rng: &mut ChaCha8Rng) -> Self {
        let k = prior.k;
        let mut sorted = prep.continuous.clone();
        sorted.sort_by(f64::total_cmp);
        let sd = if sorted.len() > 1 { stats::variance(&sorted).sqrt() } else { 1.0 };
        let upper = prior.sd_prior_upper;
        let sigma0 = if sd > 0.0 { (sd / k as f64).min(0.5 * upper) } else { 0.5 * upper };
        let mu = (0..k)
            .map(|j| {
                let z: f64 = StandardNormal.sample(rng);
                stats::quantile_sorted(&sorted, (j as f64 + 0.5) / k as f64) + 0.1 * sigma0 * z
            })
            .collect();
        let n_atoms: usize = prep.atom_counts.iter().sum();
        let n = (n_atoms + prep.continuous.len()) as f64;
        let lambda = if prior.atom_locations.is_empty() {
            1.0
        } else {
            (prep.continuous.len() as f64 + 0.5) / (n + 1.0)
        };
        let m_total = n_atoms as f64 + prep.atom_counts.len() as f64;
        let p = prep.atom_counts.iter().map(|&c| (c as f64 + 1.0) / m_total).collect();
        Self { lambda, w: vec![1.0 / k as f64; k], mu, sigma: vec![sigma0; k], p }
    }

    fn to_model(&self, prior: &MixturePrior) -> Result<MixtureModel<f64>> {
        let components = self
            .w
            .iter()
            .zip(self.mu.iter().zip(&self.sigma))
            .map(|(&weight, (&m, &s))| Ok(Component { weight, eta: GaussianNatural::from_mean_sd(m, s)? }))
            .collect::<Result<Vec<_>>>()?;
        let atoms = self
            .p
            .iter()
            .zip(&prior.atom_locations)
            .map(|(&prob, &location)| Atom { prob, location })
            .collect();
        MixtureModel::new(self.lambda, components, atoms)
    }
}

fn dirichlet<R: Rng + ?Sized>(shapes: impl Iterator<Item = f64>, rng: &mut R) -> Vec<f64> {
    let mut g: Vec<f64> = shapes.map(|a| Gamma::new(a, 1.0).expect("positive shape").sample(rng)).collect();
    let total: f64 = g.iter().sum();
    for x in &mut g {
        *x /= total;
    }
    g
}

fn sweep(state: &mut State, prep: &Prepared, prior: &MixturePrior, rng: &mut ChaCha8Rng, z: &mut [usize]) {
    let k = prior.k;
    let log_c: Vec<f64> = (0..k).map(|j| state.w[j].ln() - state.sigma[j].ln()).collect();
    let inv: Vec<f64> = state.sigma.iter().map(|s| 0.5 / (s * s)).collect();
    let mut lp = vec![0.0; k];
    let mut counts = vec![0usize; k];
    let mut sums = vec![0.0; k];
    for (i, &y) in prep.continuous.iter().enumerate() {
        let mut max = f64::NEG_INFINITY;
        for j in 0..k {
            let d = y - state.mu[j];
            lp[j] = log_c[j] - d * d * inv[j];
            max = max.max(lp[j]);
        }
        let mut total = 0.0;
        for v in lp.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = k - 1;
        for (j, &v) in lp.iter().enumerate() {
            if u < v {
                pick = j;
                break;
            }
            u -= v;
        }
        z[i] = pick;
        counts[pick] += 1;
        sums[pick] += y;
    }
    let means: Vec<f64> =
        (0..k).map(|j| if counts[j] > 0 { sums[j] / counts[j] as f64 } else { 0.0 }).collect();
    let mut within = vec![0.0; k];
    for (&y, &j) in prep.continuous.iter().zip(z.iter()) {
        within[j] += (y - means[j]) * (y - means[j]);
    }

    state.w = dirichlet(counts.iter().map(|&c| prior.weights_dirichlet + c as f64), rng);

    let prior_prec = 1.0 / (prior.mean_prior_sd * prior.mean_prior_sd);
    let upper = prior.sd_prior_upper;
    for j in 0..k {
        let n = counts[j] as f64;
        let s2 = state.sigma[j] * state.sigma[j];
        let prec = prior_prec + n / s2;
        let mean = (prior.mean_prior_mean * prior_prec + n * means[j] / s2) / prec;
        let z: f64 = StandardNormal.sample(rng);
        state.mu[j] = mean + z / prec.sqrt();

        let ss = within[j] + n * (means[j] - state.mu[j]) * (means[j] - state.mu[j]);
        let log_f = |s: f64| {
            if s > 0.0 && s < upper {
                -n * s.ln() - 0.5 * ss / (s * s)
            } else {
                f64::NEG_INFINITY
            }
        };
        state.sigma[j] = slice_sample(state.sigma[j], log_f, prep.slice_width, MAX_DOUBLINGS, rng);
    }

    if !prior.atom_locations.is_empty() {
        let n_atoms: usize = prep.atom_counts.iter().sum();
        let beta = Beta::new(prior.lambda_beta.a + prep.continuous.len() as f64, prior.lambda_beta.b + n_atoms as f64)
            .expect("positive shapes");
        state.lambda = beta.sample(rng);
        state.p = dirichlet(prep.atom_counts.iter().map(|&c| prior.atoms_dirichlet + c as f64), rng);
    }
}

fn run_chain(prep: &Prepared, prior: &MixturePrior, mcmc: &McmcConfig, chain: usize) -> Result<Vec<MixtureModel<f64>>> {
    let mut rng = stream_rng(mcmc.seed, chain, Stream::Mixture);
    let mut state = State::initial(prep, prior, &mut rng);
    let mut z = vec![0usize; prep.continuous.len()];
    let mut out = Vec::with_capacity(mcmc.retained_per_chain());
    for it in 0..mcmc.iterations {
        sweep(&mut state, prep, prior, &mut rng, &mut z);
        if mcmc.is_retained(it) {
            out.push(state.to_model(prior)?);
        }
    }
    Ok(out)
}

/// Posterior draws of the observed-data mixture, one vector of retained draws per chain.
///
/// Only observed records enter. Chains run in parallel on independent generator streams.
pub fn fit_observed_mixture(
    data: &Dataset,
    prior: &MixturePrior,
    mcmc: &McmcConfig,
) -> Result<Vec<Vec<MixtureModel<f64>>>> {
    prior.validate()?;
    mcmc.validate()?;
    let prep = prepare(data, prior)?;
    (0..mcmc.chains).into_par_iter().map(|c| run_chain(&prep, prior, mcmc, c)).collect()
}
