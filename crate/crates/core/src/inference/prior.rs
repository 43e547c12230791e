//! Prior specifications and the mechanism-prior sampler.

use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expfam::MixtureModel;
use crate::mechanism::{canonicalize, CanonicalMechanism, MechanismSpec};
use crate::model::{integrability_violations, solve_intercept};

/// A one-dimensional prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarPrior {
    Point(f64),
    /// Mean and standard deviation.
    Normal { mean: f64, sd: f64 },
    /// `scale * Beta(a, b)`.
    ScaledBeta { scale: f64, a: f64, b: f64 },
}

impl ScalarPrior {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ScalarPrior::Point(v) => v,
            ScalarPrior::Normal { mean, sd } => Normal::new(mean, sd).expect("validated").sample(rng),
            ScalarPrior::ScaledBeta { scale, a, b } => scale * Beta::new(a, b).expect("validated").sample(rng),
        }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        let ok = match *self {
            ScalarPrior::Point(v) => v.is_finite(),
            ScalarPrior::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            ScalarPrior::ScaledBeta { scale, a, b } => {
                scale > 0.0 && scale.is_finite() && a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(key, "scales and shape parameters must be positive and finite"))
        }
    }
}

/// `Beta(a, b)` shape pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaPrior {
    pub a: f64,
    pub b: f64,
}

impl BetaPrior {
    pub const UNIFORM: BetaPrior = BetaPrior { a: 1.0, b: 1.0 };

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Beta::new(self.a, self.b).expect("validated").sample(rng)
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        if self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite() {
            Ok(())
        } else {
            Err(Error::config(key, "beta shapes must be positive and finite"))
        }
    }
}

impl Default for BetaPrior {
    fn default() -> Self {
        Self::UNIFORM
    }
}

fn default_mean_sd() -> f64 {
    10.0
}
fn default_sd_upper() -> f64 {
    2.0
}
fn one() -> f64 {
    1.0
}

/// Prior for the observed-data mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixturePrior {
    pub k: usize,
    #[serde(default)]
    pub atom_locations: Vec<f64>,
    #[serde(default)]
    pub mean_prior_mean: f64,
    #[serde(default = "default_mean_sd")]
    pub mean_prior_sd: f64,
    /// Component standard deviations are `Uniform(0, sd_prior_upper)`.
    #[serde(default = "default_sd_upper")]
    pub sd_prior_upper: f64,
    #[serde(default = "one")]
    pub weights_dirichlet: f64,
    #[serde(default = "one")]
    pub atoms_dirichlet: f64,
    #[serde(default)]
    pub lambda_beta: BetaPrior,
}

impl MixturePrior {
    pub fn new(k: usize, atom_locations: Vec<f64>) -> Self {
        Self {
            k,
            atom_locations,
            mean_prior_mean: 0.0,
            mean_prior_sd: default_mean_sd(),
            sd_prior_upper: default_sd_upper(),
            weights_dirichlet: 1.0,
            atoms_dirichlet: 1.0,
            lambda_beta: BetaPrior::UNIFORM,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("mixture.k", "at least one component is required"));
        }
        let positive = [
            ("mixture.mean_prior_sd", self.mean_prior_sd),
            ("mixture.sd_prior_upper", self.sd_prior_upper),
            ("mixture.weights_dirichlet", self.weights_dirichlet),
            ("mixture.atoms_dirichlet", self.atoms_dirichlet),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        if !self.mean_prior_mean.is_finite() {
            return Err(Error::config("mixture.mean_prior_mean", "must be finite"));
        }
        self.lambda_beta.validate("mixture.lambda_beta")?;
        let mut locs = self.atom_locations.clone();
        if locs.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("mixture.atom_locations", "locations must be finite"));
        }
        locs.sort_by(f64::total_cmp);
        if locs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("mixture.atom_locations", "locations must be distinct"));
        }
        Ok(())
    }
}

/// Prior over the mechanism parameters that the observed data cannot inform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MechanismPrior {
    /// Quadratic-logit mechanism: peak location `b1` and curvature `b2`.
    Quadratic { b1: ScalarPrior, b2: ScalarPrior },
    /// Linear-logit mechanism with slope `b1`.
    Linear { b1: ScalarPrior },
    /// Asymptoting mechanism: slope `b1` and `kappa = 1 - (1 - Q) * Beta(a, b)`.
    Asymptote { b1: ScalarPrior, kappa_beta: BetaPrior },
    /// A fully specified mechanism, intercept included; `Q` then follows from the fitted mixture.
    Known { mechanism: MechanismSpec<f64> },
}

impl MechanismPrior {
    pub fn validate(&self) -> Result<()> {
        match self {
            MechanismPrior::Quadratic { b1, b2 } => {
                b1.validate("mechanism.b1")?;
                b2.validate("mechanism.b2")
            }
            MechanismPrior::Linear { b1 } => b1.validate("mechanism.b1"),
            MechanismPrior::Asymptote { b1, kappa_beta } => {
                b1.validate("mechanism.b1")?;
                kappa_beta.validate("mechanism.kappa_beta")
            }
            MechanismPrior::Known { mechanism } => canonicalize(mechanism)
                .map(|_| ())
                .map_err(|e| Error::config("mechanism.mechanism", e.to_string())),
        }
    }

    pub fn is_known(&self) -> bool {
        matches!(self, MechanismPrior::Known { .. })
    }
}

/// Posterior for `Q` given the counts: conjugate when the missing count is known, the prior
/// itself otherwise.
pub fn posterior_q(n_obs: usize, n_mis: Option<usize>, prior: BetaPrior) -> Result<BetaPrior> {
    match n_mis {
        Some(0) if n_obs == 0 => Err(Error::Data("no records: observed and missing counts are both zero".into())),
        Some(m) => Ok(BetaPrior { a: prior.a + n_obs as f64, b: prior.b + m as f64 }),
        None => Ok(prior),
    }
}

/// Running acceptance bookkeeping for the mechanism-prior rejection step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RejectionStats {
    pub attempts: u64,
    pub rejections: u64,
}

/// Attempts allowed for a single draw, and the window after which the overall rate is checked.
pub const REJECTION_WINDOW: u64 = 100_000;
/// Overall rejection rate above which the prior is declared incompatible.
pub const MAX_REJECTION_RATE: f64 = 0.999;

impl RejectionStats {
    pub fn rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.rejections as f64 / self.attempts as f64
        }
    }

    fn check(&self) -> Result<()> {
        if self.attempts >= REJECTION_WINDOW && self.rate() > MAX_REJECTION_RATE {
            return Err(Error::PriorIncompatible(format!(
                "{} of {} mechanism draws rejected (integrability or kappa <= Q)",
                self.rejections, self.attempts
            )));
        }
        Ok(())
    }
}

fn draw_spec<R: Rng + ?Sized>(prior: &MechanismPrior, q: f64, rng: &mut R) -> MechanismSpec<f64> {
    match prior {
        MechanismPrior::Quadratic { b1, b2 } => {
            MechanismSpec::QuadraticLogit { b0: 0.0, b1: b1.sample(rng), b2: b2.sample(rng) }
        }
        MechanismPrior::Linear { b1 } => MechanismSpec::LinearLogit { b0: 0.0, b1: b1.sample(rng) },
        MechanismPrior::Asymptote { b1, kappa_beta } => {
            let b1 = b1.sample(rng);
            MechanismSpec::AsymptoteLogit { b0: 0.0, b1, kappa: 1.0 - (1.0 - q) * kappa_beta.sample(rng) }
        }
        MechanismPrior::Known { mechanism } => *mechanism,
    }
}

/// Draws a mechanism compatible with the observed-data draw `obs` and observed fraction `q`.
///
/// Draws that break integrability against `obs` or have `kappa <= q` are rejected and redrawn.
/// The intercept is then solved so the mechanism reproduces `q`. A known mechanism is returned
/// as is (its `Q` is implied, not targeted).
pub fn sample_mechanism<R: Rng + ?Sized>(
    prior: &MechanismPrior,
    obs: &MixtureModel<f64>,
    q: f64,
    rng: &mut R,
    stats: &mut RejectionStats,
) -> Result<CanonicalMechanism<f64>> {
    if let MechanismPrior::Known { mechanism } = prior {
        let mech = canonicalize(mechanism)?;
        let v = integrability_violations(obs, &mech);
        if !v.is_empty() {
            return Err(Error::PriorIncompatible(v[0].to_string()));
        }
        return Ok(mech);
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidTargetQ(q));
    }
    for _ in 0..REJECTION_WINDOW {
        stats.attempts += 1;
        let accepted = canonicalize(&draw_spec(prior, q, rng))
            .ok()
            .filter(|m| m.kappa > q && integrability_violations(obs, m).is_empty());
        match accepted {
            Some(mech) => {
                let alpha0 = solve_intercept(obs, &mech, q)?;
                return Ok(mech.with_alpha0(alpha0));
            }
            None => {
                stats.rejections += 1;
                stats.check()?;
            }
        }
    }
    Err(Error::PriorIncompatible(format!("no acceptable mechanism in {REJECTION_WINDOW} attempts")))
}

/// Complete prior: mixture block, mechanism block and the `Q` prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub mixture: MixturePrior,
    pub mechanism: MechanismPrior,
    #[serde(default)]
    pub q_prior: BetaPrior,
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        self.mixture.validate()?;
        self.mechanism.validate()?;
        self.q_prior.validate("q_prior")
    }
}
