//! Brute-force references for the closed forms in [`crate::model`].
//!
//! Nothing here calls the tilt algebra: integrals are taken numerically against the raw
//! missing-odds function and the observed density, and the Monte Carlo check simulates
//! `(Y, R)` pairs directly.

use rand::distr::{Distribution, StandardUniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::expfam::MixtureModel;
use crate::mechanism::CanonicalMechanism;
use crate::model::TukeyModel;
use crate::quadrature::{adaptive_simpson, QuadratureConfig};
use crate::scalar::{log1p_exp, log_sum_exp, logistic, Real};

/// `log` of the integral over the continuous part of `poly(y) * weight(y) * f_obs(y)`, where
/// `log_weight` is evaluated pointwise. Returns one term per component.
fn component_log_integrals<T: Real>(
    obs: &MixtureModel<T>,
    mech: &CanonicalMechanism<T>,
    log_weight: &dyn Fn(T) -> T,
    poly: &dyn Fn(T) -> T,
    cfg: &QuadratureConfig,
) -> Result<Vec<(T, T)>> {
    let lam = obs.lambda();
    if lam == T::zero() {
        return Ok(Vec::new());
    }
    let span = T::lit(cfg.span_sd);
    let mut out = Vec::new();
    for (k, c) in obs.components().iter().enumerate() {
        if c.weight == T::zero() {
            continue;
        }
        let log_f = |y: T| lam.ln() + c.weight.ln() + c.eta.log_density(y) + log_weight(y);
        let (m, v) = c.eta.moments();
        let s = v.sqrt();
        let mut lo = m - span * s;
        let mut hi = m + span * s;
        let mut centres = vec![m];
        // frame of the integrand's second hump: the component multiplied by exp(alpha1 y + alpha2 y^2)
        let eta2 = c.eta.eta2 + mech.alpha2;
        if eta2 < T::zero() {
            let two = T::lit(2.0);
            let tm = -(c.eta.eta1 + mech.alpha1) / (two * eta2);
            let ts = (-T::one() / (two * eta2)).sqrt();
            lo = lo.min(tm - span * ts);
            hi = hi.max(tm + span * ts);
            centres.push(tm);
        }
        let shift = centres.iter().map(|&y| log_f(y)).fold(T::neg_infinity(), T::max);
        if !shift.is_finite() {
            return Err(Error::NonIntegrable(format!("component {k}: integrand not finite at its mode")));
        }
        let tail = log_f(lo).max(log_f(hi)) - shift;
        if !(tail.exp() < T::lit(cfg.abs_tol)) {
            return Err(Error::NonIntegrable(format!(
                "component {k}: integrand does not decay over [{lo}, {hi}]"
            )));
        }
        let r = adaptive_simpson(|y| poly(y) * (log_f(y) - shift).exp(), lo, hi, cfg);
        if !r.converged {
            return Err(Error::NonIntegrable(format!("component {k}: quadrature did not converge")));
        }
        out.push((shift, r.value));
    }
    Ok(out)
}

/// `Q = (1 + int odds(y) f_obs(y) dy)^(-1)`, atoms summed exactly.
pub fn q_quadrature<T: Real>(
    obs: &MixtureModel<T>,
    mech: &CanonicalMechanism<T>,
    cfg: &QuadratureConfig,
) -> Result<T> {
    let log_odds = |y: T| mech.log_odds_missing(y);
    let one = |_: T| T::one();
    let parts = component_log_integrals(obs, mech, &log_odds, &one, cfg)?;
    let mut logs: Vec<T> = parts.iter().map(|&(shift, v)| shift + v.ln()).collect();
    let lam = obs.lambda();
    for a in obs.atoms() {
        logs.push(((T::one() - lam) * a.prob).ln() + mech.log_odds_missing(a.location));
    }
    let log_i = log_sum_exp(&logs);
    Ok(logistic(-log_i))
}

/// `f_mis(y) = Q / (1 - Q) * odds(y) * f_obs(y)`; at an atom this is a mass, elsewhere a density.
pub fn missing_density_pointwise<T: Real>(
    obs: &MixtureModel<T>,
    mech: &CanonicalMechanism<T>,
    q: T,
    y: T,
) -> T {
    let log = q.ln() - (T::one() - q).ln() + mech.log_odds_missing(y) + obs.log_density(y);
    log.exp()
}

/// Complete-data `(mean, sd)` by integrating `y^j Q (1 + odds(y)) f_obs(y)`.
pub fn moments_quadrature<T: Real>(model: &TukeyModel<T>, cfg: &QuadratureConfig) -> Result<(T, T)> {
    let obs = &model.obs;
    let mech = &model.mech;
    let q = model.q;
    // Q (1 + odds) = Q / P(R = 1 | y)
    let log_weight = |y: T| q.ln() + log1p_exp(mech.log_odds_missing(y));
    let lam = obs.lambda();
    let atom_mass = |loc: T, p: T| ((T::one() - lam) * p).ln() + log_weight(loc);

    let moment = |poly: &dyn Fn(T) -> T| -> Result<T> {
        let parts = component_log_integrals(obs, mech, &log_weight, poly, cfg)?;
        let mut total: T = parts.iter().map(|&(shift, v)| shift.exp() * v).sum();
        for a in obs.atoms() {
            total = total + poly(a.location) * atom_mass(a.location, a.prob).exp();
        }
        Ok(total)
    };
    let m0 = moment(&|_| T::one())?;
    let m1 = moment(&|y| y)?;
    let mean = m1 / m0;
    let central = moment(&|y| (y - mean) * (y - mean))?;
    Ok((mean, (central / m0).sqrt()))
}

/// Simulates `n` pairs `(y, r)` from the joint law (`y` from the complete-data model, then
/// `r ~ Bernoulli(P(R = 1 | y))`) and returns the observed fraction.
pub fn mc_observed_fraction<T: Real>(model: &TukeyModel<T>, n: usize, seed: u64) -> Result<T>
where
    StandardNormal: Distribution<T>,
    StandardUniform: Distribution<T>,
{
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let complete = model.complete_model()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n {
        let y = complete.draw(&mut rng);
        let u: T = rng.random();
        if u < model.mech.selection_prob(y) {
            hits += 1;
        }
    }
    Ok(T::lit(hits as f64 / n as f64))
}
