//! Closed forms for the joint law of `(Y, R)` under Tukey's representation.
//!
//! With an observed-data mixture `f_obs` and a canonical mechanism, the quantities below are
//! all driven by the tilt mass
//!
//! ```text
//! U = E_obs[exp(alpha1 Y + alpha2 Y^2)]
//!   = lambda sum_k w_k exp(A(eta_k + alpha) - A(eta_k)) + (1 - lambda) sum_m p_m exp(alpha1 g_m + alpha2 g_m^2)
//! ```
//!
//! which gives the observed fraction `Q = kappa / (1 + exp(alpha0) U)` and its inverse
//! `alpha0 = log((kappa - Q) / (Q U))`.

use std::fmt;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::expfam::{Atom, Component, MixtureModel};
use crate::mechanism::CanonicalMechanism;
use crate::scalar::{log1p_exp, log_sum_exp, logistic, Real};

/// Tolerance for the stored `q` agreeing with the closed form.
pub const Q_CONSISTENCY_TOL: f64 = 1e-10;

/// Observed-data model, canonical mechanism and observed fraction: the full joint of `(Y, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TukeyModel<T> {
    pub obs: MixtureModel<T>,
    pub mech: CanonicalMechanism<T>,
    pub q: T,
}

/// A failed [`TukeyModel`] invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    KappaOutOfRange { kappa: f64 },
    QOutOfRange { q: f64 },
    QExceedsKappa { q: f64, kappa: f64 },
    Integrability { component: usize, eta2: f64, alpha2: f64 },
    QInconsistent { stored: f64, closed_form: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::KappaOutOfRange { kappa } => write!(f, "kappa {kappa} outside (0, 1]"),
            Violation::QOutOfRange { q } => write!(f, "q {q} outside (0, 1)"),
            Violation::QExceedsKappa { q, kappa } => write!(f, "q exceeds kappa ({q} >= {kappa})"),
            Violation::Integrability { component, eta2, alpha2 } => write!(
                f,
                "integrability: component {component} has eta2 + alpha2 = {eta2} + {alpha2} >= 0"
            ),
            Violation::QInconsistent { stored, closed_form } => write!(
                f,
                "q inconsistent with mechanism intercept (stored {stored}, closed form {closed_form})"
            ),
        }
    }
}

/// Integrability violations: every component whose tilted natural parameter is improper.
pub fn integrability_violations<T: Real>(
    obs: &MixtureModel<T>,
    mech: &CanonicalMechanism<T>,
) -> Vec<Violation> {
    obs.components()
        .iter()
        .enumerate()
        .filter(|(_, c)| !(c.eta.eta2 + mech.alpha2 < T::zero()))
        .map(|(k, c)| Violation::Integrability {
            component: k,
            eta2: c.eta.eta2.as_f64(),
            alpha2: mech.alpha2.as_f64(),
        })
        .collect()
}

fn check_integrable<T: Real>(obs: &MixtureModel<T>, mech: &CanonicalMechanism<T>) -> Result<()> {
    match integrability_violations(obs, mech).into_iter().next() {
        Some(Violation::Integrability { component, eta2, alpha2 }) => {
            Err(Error::Integrability { component, eta2, alpha2 })
        }
        _ => Ok(()),
    }
}

/// Per-part log tilt factors: `log(w_k) + A(eta_k + alpha) - A(eta_k)` for the components and
/// `log(p_m) + alpha1 g_m + alpha2 g_m^2` for the atoms, before the `lambda` split.
fn log_tilt_terms<T: Real>(
    obs: &MixtureModel<T>,
    mech: &CanonicalMechanism<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    check_integrable(obs, mech)?;
    let comps = obs
        .components()
        .iter()
        .map(|c| {
            let r = c.eta.log_tilt_ratio(mech.alpha1, mech.alpha2)?;
            Ok(c.weight.ln() + r)
        })
        .collect::<Result<Vec<_>>>()?;
    let atoms = obs.atoms().iter().map(|a| a.prob.ln() + mech.tilt_exponent(a.location)).collect();
    Ok((comps, atoms))
}

/// `log U`, split into the continuous and discrete contributions (each already scaled by
/// `lambda` and `1 - lambda`).
fn log_tilt_mass_parts<T: Real>(
    obs: &MixtureModel<T>,
    mech: &CanonicalMechanism<T>,
) -> Result<(T, T, Vec<T>, Vec<T>)> {
    let (comps, atoms) = log_tilt_terms(obs, mech)?;
    let lam = obs.lambda();
    let cont = if lam > T::zero() { lam.ln() + log_sum_exp(&comps) } else { T::neg_infinity() };
    let disc = if lam < T::one() {
        (T::one() - lam).ln() + log_sum_exp(&atoms)
    } else {
        T::neg_infinity()
    };
    Ok((cont, disc, comps, atoms))
}

/// `log U`.
pub fn log_tilt_mass<T: Real>(obs: &MixtureModel<T>, mech: &CanonicalMechanism<T>) -> Result<T> {
    if mech.is_mcar() {
        return Ok(T::zero());
    }
    let (cont, disc, _, _) = log_tilt_mass_parts(obs, mech)?;
    Ok(log_sum_exp(&[cont, disc]))
}

/// `U = E_obs[exp(alpha1 Y + alpha2 Y^2)]`.
pub fn tilt_mass<T: Real>(obs: &MixtureModel<T>, mech: &CanonicalMechanism<T>) -> Result<T> {
    Ok(log_tilt_mass(obs, mech)?.exp())
}

/// Population fraction of observed data `Q = kappa / (1 + exp(alpha0) U)`.
pub fn q_closed_form<T: Real>(obs: &MixtureModel<T>, mech: &CanonicalMechanism<T>) -> Result<T> {
    let log_u = log_tilt_mass(obs, mech)?;
    Ok(mech.kappa * logistic(-(mech.alpha0 + log_u)))
}

/// The intercept `alpha0` for which [`q_closed_form`] returns `target_q`. Any `alpha0` already set
/// on `mech` is ignored.
pub fn solve_intercept<T: Real>(
    obs: &MixtureModel<T>,
    mech: &CanonicalMechanism<T>,
    target_q: T,
) -> Result<T> {
    if !(target_q > T::zero() && target_q < T::one()) {
        return Err(Error::InvalidTargetQ(target_q.as_f64()));
    }
    if !(target_q < mech.kappa) {
        return Err(Error::KappaNotAboveQ { kappa: mech.kappa.as_f64(), q: target_q.as_f64() });
    }
    let log_u = log_tilt_mass(obs, mech)?;
    Ok((mech.kappa - target_q).ln() - target_q.ln() - log_u)
}

/// Bracketing bisection on the monotone map `alpha0 -> Q`. Used to cross-check
/// [`solve_intercept`]; never needed for the answer itself.
pub fn solve_intercept_bisection<T: Real>(
    obs: &MixtureModel<T>,
    mech: &CanonicalMechanism<T>,
    target_q: T,
) -> Result<T> {
    if !(target_q > T::zero() && target_q < mech.kappa.min(T::one())) {
        return Err(Error::KappaNotAboveQ { kappa: mech.kappa.as_f64(), q: target_q.as_f64() });
    }
    let q_at = |a0: T| q_closed_form(obs, &mech.with_alpha0(a0));
    let mut lo = -T::one();
    let mut hi = T::one();
    while q_at(lo)? < target_q {
        lo = lo * T::lit(2.0);
        if lo < T::lit(-1e6) {
            return Err(Error::InvalidTargetQ(target_q.as_f64()));
        }
    }
    while q_at(hi)? > target_q {
        hi = hi * T::lit(2.0);
        if hi > T::lit(1e6) {
            return Err(Error::InvalidTargetQ(target_q.as_f64()));
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if q_at(mid)? > target_q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}

/// Closed-form missing-data law `f_mis = Q / (1 - Q) * odds(y) * f_obs(y)`.
///
/// For `kappa = 1` the result is the observed mixture with every component tilted by
/// `(alpha1, alpha2)` and reweighted; for `kappa < 1` an untilted copy of the observed components
/// is prepended, so there are at most `2K` components. Atom locations are unchanged.
pub fn missing_model<T: Real>(
    obs: &MixtureModel<T>,
    mech: &CanonicalMechanism<T>,
) -> Result<MixtureModel<T>> {
    check_integrable(obs, mech)?;
    if mech.is_mcar() {
        return Ok(obs.clone());
    }
    let (log_cont, log_disc, comp_terms, atom_terms) = log_tilt_mass_parts(obs, mech)?;
    let log_u = log_sum_exp(&[log_cont, log_disc]);
    let lam = obs.lambda();
    let one = T::one();

    // Mixing proportions of the untilted and tilted pieces: with L = alpha0 + log U,
    // untilted = (1 - kappa) / (1 - kappa + e^L), tilted = e^L / (1 - kappa + e^L).
    let l = mech.alpha0 + log_u;
    let (log_untilted, log_tilted) = if mech.kappa >= one {
        (T::neg_infinity(), T::zero())
    } else {
        let floor = (one - mech.kappa).ln();
        let denom = floor.max(l) + log1p_exp(floor.min(l) - floor.max(l));
        (floor - denom, l - denom)
    };

    // Log masses of every continuous piece and atom, relative to a total of one.
    let mut comp_logs: Vec<T> = Vec::new();
    let mut comp_etas = Vec::new();
    if log_untilted > T::neg_infinity() && lam > T::zero() {
        for c in obs.components() {
            comp_logs.push(log_untilted + lam.ln() + c.weight.ln());
            comp_etas.push(c.eta);
        }
    }
    if lam > T::zero() {
        for (c, &t) in obs.components().iter().zip(&comp_terms) {
            comp_logs.push(log_tilted + lam.ln() + t - log_u);
            comp_etas.push(c.eta.tilt(mech.alpha1, mech.alpha2)?);
        }
    }
    let atom_logs: Vec<T> = obs
        .atoms()
        .iter()
        .zip(&atom_terms)
        .map(|(a, &t)| {
            let untilted = log_untilted + (one - lam).ln() + a.prob.ln();
            let tilted = log_tilted + (one - lam).ln() + t - log_u;
            log_sum_exp(&[untilted, tilted])
        })
        .collect();

    assemble(&comp_logs, comp_etas, &atom_logs, obs.atoms())
}

/// Normalizes log masses into a [`MixtureModel`].
fn assemble<T: Real>(
    comp_logs: &[T],
    comp_etas: Vec<crate::expfam::GaussianNatural<T>>,
    atom_logs: &[T],
    atoms: &[Atom<T>],
) -> Result<MixtureModel<T>> {
    let log_c = log_sum_exp(comp_logs);
    let log_d = log_sum_exp(atom_logs);
    let total = log_sum_exp(&[log_c, log_d]);
    let lambda = if atoms.is_empty() || log_d == T::neg_infinity() {
        T::one()
    } else if comp_logs.is_empty() || log_c == T::neg_infinity() {
        T::zero()
    } else {
        (log_c - total).exp()
    };
    let components = if lambda > T::zero() {
        normalize(comp_logs)
            .into_iter()
            .zip(comp_etas)
            .map(|(weight, eta)| Component { weight, eta })
            .collect()
    } else {
        Vec::new()
    };
    let atoms = if lambda < T::one() {
        normalize(atom_logs)
            .into_iter()
            .zip(atoms)
            .map(|(prob, a)| Atom { prob, location: a.location })
            .collect()
    } else {
        Vec::new()
    };
    MixtureModel::new(lambda, components, atoms)
}

fn normalize<T: Real>(logs: &[T]) -> Vec<T> {
    let total = log_sum_exp(logs);
    let mut w: Vec<T> = logs.iter().map(|&l| (l - total).exp()).collect();
    let s: T = w.iter().copied().sum();
    for x in &mut w {
        *x = *x / s;
    }
    w
}

impl<T: Real> TukeyModel<T> {
    /// Validated constructor.
    pub fn new(obs: MixtureModel<T>, mech: CanonicalMechanism<T>, q: T) -> Result<Self> {
        let model = Self { obs, mech, q };
        let violations = model.validate();
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(Error::Validation(violations.iter().map(|v| v.to_string()).collect()))
        }
    }

    /// Builds the model whose mechanism intercept reproduces `q`.
    pub fn with_observed_fraction(obs: MixtureModel<T>, mech: CanonicalMechanism<T>, q: T) -> Result<Self> {
        let alpha0 = solve_intercept(&obs, &mech, q)?;
        let mech = mech.with_alpha0(alpha0);
        let q_closed = q_closed_form(&obs, &mech)?;
        Self::new(obs, mech, q_closed)
    }

    /// Builds the model implied by a mechanism with a concrete intercept.
    pub fn from_mechanism(obs: MixtureModel<T>, mech: CanonicalMechanism<T>) -> Result<Self> {
        let q = q_closed_form(&obs, &mech)?;
        Self::new(obs, mech, q)
    }

    /// Lists every broken invariant; an empty list means the model is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let kappa = self.mech.kappa;
        if !(kappa > T::zero() && kappa <= T::one()) {
            out.push(Violation::KappaOutOfRange { kappa: kappa.as_f64() });
        }
        if !(self.q > T::zero() && self.q < T::one()) {
            out.push(Violation::QOutOfRange { q: self.q.as_f64() });
        }
        if !(self.q < kappa) {
            out.push(Violation::QExceedsKappa { q: self.q.as_f64(), kappa: kappa.as_f64() });
        }
        let integrability = integrability_violations(&self.obs, &self.mech);
        let integrable = integrability.is_empty();
        out.extend(integrability);
        if integrable && kappa > T::zero() {
            if let Ok(closed) = q_closed_form(&self.obs, &self.mech) {
                if (closed - self.q).abs().as_f64() > Q_CONSISTENCY_TOL {
                    out.push(Violation::QInconsistent {
                        stored: self.q.as_f64(),
                        closed_form: closed.as_f64(),
                    });
                }
            }
        }
        out
    }

    pub fn missing_model(&self) -> Result<MixtureModel<T>> {
        missing_model(&self.obs, &self.mech)
    }

    /// `Q f_obs + (1 - Q) f_mis` as one mixture; atoms at equal locations are merged.
    pub fn complete_model(&self) -> Result<MixtureModel<T>> {
        if self.mech.is_mcar() {
            return Ok(self.obs.clone());
        }
        let mis = self.missing_model()?;
        let q = self.q;
        let one = T::one();
        let mut comp_logs = Vec::new();
        let mut etas = Vec::new();
        for (model, share) in [(&self.obs, q), (&mis, one - q)] {
            if model.lambda() > T::zero() {
                for c in model.components() {
                    comp_logs.push(share.ln() + model.lambda().ln() + c.weight.ln());
                    etas.push(c.eta);
                }
            }
        }
        let atom_logs: Vec<T> = self
            .obs
            .atoms()
            .iter()
            .map(|a| {
                let from_obs = q * (one - self.obs.lambda()) * a.prob;
                let from_mis = (one - q) * mis.atom_mass(a.location);
                (from_obs + from_mis).ln()
            })
            .collect();
        assemble(&comp_logs, etas, &atom_logs, self.obs.atoms())
    }

    /// Complete-data `(mean, sd)`.
    pub fn complete_moments(&self) -> Result<(T, T)> {
        let (mean, var) = self.complete_model()?.moments();
        Ok((mean, var.sqrt()))
    }
}

impl TukeyModel<f64> {
    /// Observed-data log likelihood: `n_obs log Q + n_mis log(1 - Q) + sum log f_obs(y_i)`.
    ///
    /// When the number of missing records is unknown the binomial factor is dropped, leaving
    /// the likelihood of the observed values alone.
    pub fn observed_loglik(&self, data: &Dataset) -> f64 {
        let mut ll: f64 = data.observed_values().map(|y| self.obs.log_density(y)).sum();
        if data.n_missing_known() {
            let n_obs = data.n_observed() as f64;
            let n_mis = data.n_missing() as f64;
            if n_obs > 0.0 {
                ll += n_obs * self.q.ln();
            }
            if n_mis > 0.0 {
                ll += n_mis * (1.0 - self.q).ln();
            }
        }
        ll
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Record;
    use crate::mechanism::{canonicalize, MechanismSpec};
    use approx::assert_relative_eq;

    fn n01() -> MixtureModel<f64> {
        MixtureModel::gaussian(0.0, 1.0).unwrap()
    }

    fn reference_observed() -> MixtureModel<f64> {
        let atoms: Vec<(f64, f64)> = (-4..=4).map(|g| (1.0 / 9.0, g as f64)).collect();
        MixtureModel::from_parts(0.8, &[(0.3, -2.0, 1.0), (0.4, 0.0, 1.0), (0.3, 3.0, 1.0)], &atoms)
            .unwrap()
    }

    fn reference_mechanism() -> CanonicalMechanism<f64> {
        canonicalize(&MechanismSpec::QuadraticLogit { b0: 0.0, b1: -2.0, b2: 0.06 }).unwrap()
    }

    #[test]
    fn tilt_mass_examples() {
        let mcar = CanonicalMechanism::mcar(1.0, 0.7);
        assert_eq!(tilt_mass(&reference_observed(), &mcar).unwrap(), 1.0);
        let mech = CanonicalMechanism::new(1.0, 0.0, 0.5, 0.0).unwrap();
        assert_relative_eq!(tilt_mass(&n01(), &mech).unwrap(), 0.125f64.exp(), epsilon = 1e-14);
        assert_relative_eq!(tilt_mass(&n01(), &mech).unwrap(), 1.133_148_453_066_826_3, epsilon = 1e-14);
        // reference value from adaptive quadrature of exp(0.24 y + 0.06 y^2) f_obs(y)
        let u = tilt_mass(&reference_observed(), &reference_mechanism()).unwrap();
        assert_relative_eq!(u, 2.064_999_265_331_283, epsilon = 1e-12);
    }

    #[test]
    fn q_examples() {
        let q = q_closed_form(&n01(), &CanonicalMechanism::mcar(0.8, 0.0)).unwrap();
        assert_relative_eq!(q, 0.4, epsilon = 1e-15);
        let mech = CanonicalMechanism::new(1.0, 0.0, 0.5, 0.0).unwrap();
        let q = q_closed_form(&n01(), &mech).unwrap();
        assert_relative_eq!(q, 1.0 / (1.0 + 0.125f64.exp()), epsilon = 1e-15);
        assert_relative_eq!(q, 0.468_790_626_626_243_77, epsilon = 1e-12);
    }

    #[test]
    fn solve_intercept_examples() {
        let mech = CanonicalMechanism::new(1.0, 99.0, 0.5, 0.0).unwrap();
        let a0 = solve_intercept(&n01(), &mech, 0.5).unwrap();
        assert_relative_eq!(a0, -0.125, epsilon = 1e-14);
        assert_relative_eq!(q_closed_form(&n01(), &mech.with_alpha0(a0)).unwrap(), 0.5, epsilon = 1e-15);

        let a0 = solve_intercept(&n01(), &CanonicalMechanism::mcar(1.0, 0.0), 0.7).unwrap();
        assert_relative_eq!(a0, (3.0f64 / 7.0).ln(), epsilon = 1e-15);

        let obs = reference_observed();
        let mech = reference_mechanism();
        let a0 = solve_intercept(&obs, &mech, 0.5).unwrap();
        assert_relative_eq!(a0, -0.725_129_870_641_157, epsilon = 1e-12);
        let spec = MechanismSpec::QuadraticLogit { b0: 0.0, b1: -2.0, b2: 0.06 };
        assert_relative_eq!(spec.b0_from_alpha0(a0), -0.965_129_870_641_157, epsilon = 1e-12);
        assert_relative_eq!(q_closed_form(&obs, &mech.with_alpha0(a0)).unwrap(), 0.5, epsilon = 1e-12);
        let bis = solve_intercept_bisection(&obs, &mech, 0.5).unwrap();
        assert_relative_eq!(bis, a0, epsilon = 1e-10);
    }

    #[test]
    fn solve_intercept_errors() {
        let mech = CanonicalMechanism::mcar(0.8, 0.0);
        assert!(matches!(solve_intercept(&n01(), &mech, 0.8), Err(Error::KappaNotAboveQ { .. })));
        assert!(matches!(solve_intercept(&n01(), &mech, 0.9), Err(Error::KappaNotAboveQ { .. })));
        assert!(matches!(solve_intercept(&n01(), &mech, 0.0), Err(Error::InvalidTargetQ(_))));
        assert!(matches!(solve_intercept(&n01(), &mech, 1.0), Err(Error::InvalidTargetQ(_))));
        let bad = CanonicalMechanism::new(1.0, 0.0, 0.0, 0.5).unwrap();
        assert!(matches!(solve_intercept(&n01(), &bad, 0.5), Err(Error::Integrability { .. })));
    }

    #[test]
    fn missing_model_examples() {
        let obs = reference_observed();
        assert_eq!(missing_model(&obs, &CanonicalMechanism::mcar(0.7, 0.2)).unwrap(), obs);

        let mech = CanonicalMechanism::new(1.0, -0.125, 0.5, 0.0).unwrap();
        let mis = missing_model(&n01(), &mech).unwrap();
        assert_eq!(mis.components().len(), 1);
        let (m, v) = mis.components()[0].eta.moments();
        assert_relative_eq!(m, 0.5, epsilon = 1e-15);
        assert_relative_eq!(v, 1.0, epsilon = 1e-15);

        let mech = reference_mechanism();
        let a0 = solve_intercept(&obs, &mech, 0.5).unwrap();
        let mis = missing_model(&obs, &mech.with_alpha0(a0)).unwrap();
        assert_eq!(mis.components().len(), 3);
        assert_eq!(mis.atoms().len(), 9);
        for (c, mu) in mis.components().iter().zip([-2.0, 0.0, 3.0]) {
            let (m, v) = c.eta.moments();
            assert_relative_eq!(m, (mu + 0.24) / 0.88, epsilon = 1e-12);
            assert_relative_eq!(v, 1.0 / 0.88, epsilon = 1e-12);
        }
        let total: f64 = mis.components().iter().map(|c| c.weight).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn missing_model_with_mcar_floor_has_two_k_components() {
        let obs = reference_observed();
        let mech = CanonicalMechanism::new(0.7, 0.3, -0.4, 0.02).unwrap();
        let mis = missing_model(&obs, &mech).unwrap();
        assert_eq!(mis.components().len(), 6);
        let locs: Vec<f64> = mis.atoms().iter().map(|a| a.location).collect();
        let orig: Vec<f64> = obs.atoms().iter().map(|a| a.location).collect();
        assert_eq!(locs, orig);
        // untilted copy carries exactly the MCAR share of the missing mass
        let q = q_closed_form(&obs, &mech).unwrap();
        let untilted = q * (1.0 - mech.kappa) / ((1.0 - q) * mech.kappa);
        let cont: f64 = mis.components()[..3].iter().map(|c| c.weight).sum::<f64>() * mis.lambda();
        let disc_share = obs.atoms().iter().map(|a| a.prob).sum::<f64>() * (1.0 - obs.lambda());
        assert_relative_eq!(cont, untilted * obs.lambda(), epsilon = 1e-12);
        assert!(disc_share > 0.0);
    }

    #[test]
    fn complete_model_examples() {
        let mech = CanonicalMechanism::new(1.0, 0.0, 0.5, 0.0).unwrap();
        let model = TukeyModel::from_mechanism(n01(), mech).unwrap();
        assert_relative_eq!(model.q, 0.468_790_626_626_243_77, epsilon = 1e-12);
        let complete = model.complete_model().unwrap();
        let comps = complete.components();
        assert_eq!(comps.len(), 2);
        assert_relative_eq!(comps[0].weight, 0.468_790_626_626_243_77, epsilon = 1e-12);
        assert_relative_eq!(comps[1].weight, 0.531_209_373_373_756_2, epsilon = 1e-12);
        assert_relative_eq!(comps[0].eta.mean(), 0.0);
        assert_relative_eq!(comps[1].eta.mean(), 0.5, epsilon = 1e-15);

        let (mean, sd) = model.complete_moments().unwrap();
        // mixture-moment identity: mean = (1 - Q) 0.5, var = 1 + Q (1 - Q) 0.25
        assert_relative_eq!(mean, 0.265_604_686_686_878_1, epsilon = 1e-12);
        assert_relative_eq!(sd, 1.030_658_281_756_569_7, epsilon = 1e-9);

        let mcar = TukeyModel::from_mechanism(n01(), CanonicalMechanism::mcar(1.0, 0.0)).unwrap();
        assert_eq!(mcar.complete_model().unwrap(), n01());
        assert_eq!(mcar.complete_moments().unwrap(), (0.0, 1.0));

        let atoms = MixtureModel::from_parts(0.0, &[], &[(0.5, -1.0), (0.5, 1.0)]).unwrap();
        let m = TukeyModel::from_mechanism(atoms.clone(), CanonicalMechanism::mcar(1.0, 0.3)).unwrap();
        assert_eq!(m.complete_model().unwrap(), atoms);
        assert_eq!(m.complete_moments().unwrap(), (0.0, 1.0));
    }

    #[test]
    fn atoms_only_tilts_never_violate_integrability() {
        let atoms = MixtureModel::from_parts(0.0, &[], &[(0.25, -1.0), (0.75, 2.0)]).unwrap();
        let mech = CanonicalMechanism::new(1.0, 0.0, 0.3, 5.0).unwrap();
        let m = TukeyModel::from_mechanism(atoms, mech).unwrap();
        let mis = m.missing_model().unwrap();
        assert_eq!(mis.lambda(), 0.0);
        let s: f64 = mis.atoms().iter().map(|a| a.prob).sum();
        assert_relative_eq!(s, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn validate_examples() {
        let obs = reference_observed();
        let mech = reference_mechanism();
        let model = TukeyModel::with_observed_fraction(obs.clone(), mech, 0.5).unwrap();
        assert!(model.validate().is_empty());

        let bad = TukeyModel { obs: obs.clone(), mech: mech.with_alpha0(0.0), q: 0.5 };
        assert!(bad.validate().iter().any(|v| matches!(v, Violation::QInconsistent { .. })));

        let unbounded = CanonicalMechanism::new(1.0, 0.0, 0.0, 0.5).unwrap();
        let bad = TukeyModel { obs: obs.clone(), mech: unbounded, q: 0.5 };
        let v = bad.validate();
        let comps: Vec<usize> = v
            .iter()
            .filter_map(|v| match v {
                Violation::Integrability { component, .. } => Some(*component),
                _ => None,
            })
            .collect();
        assert_eq!(comps, vec![0, 1, 2]);

        let bad = TukeyModel { obs, mech: CanonicalMechanism::mcar(0.8, 0.0), q: 0.9 };
        let v = bad.validate();
        assert!(v.iter().any(|v| matches!(v, Violation::QExceedsKappa { .. })));
        assert!(v.iter().any(|v| v.to_string().contains("q exceeds kappa")));
    }

    #[test]
    fn q_decreases_in_alpha0() {
        let obs = reference_observed();
        let mech = reference_mechanism();
        let mut prev = f64::INFINITY;
        for i in -40..=40 {
            let q = q_closed_form(&obs, &mech.with_alpha0(i as f64 * 0.25)).unwrap();
            assert!(q < prev);
            prev = q;
        }
    }

    #[test]
    fn observed_loglik_examples() {
        let model = TukeyModel::from_mechanism(n01(), CanonicalMechanism::mcar(1.0, 0.0)).unwrap();
        let empty = Dataset::new(vec![], true).unwrap();
        assert_eq!(model.observed_loglik(&empty), 0.0);

        let one = Dataset::new(vec![Record::observed(0.0)], true).unwrap();
        assert_relative_eq!(model.observed_loglik(&one), -1.612_085_713_764_618, epsilon = 1e-12);

        let four = Dataset::new(
            vec![Record::observed(0.1), Record::observed(-0.3), Record::observed(1.0), Record::missing()],
            true,
        )
        .unwrap();
        let direct: f64 = [0.1, -0.3, 1.0].iter().map(|&y| n01().log_density(y)).sum();
        assert_relative_eq!(model.observed_loglik(&four), direct + 4.0 * 0.5f64.ln(), epsilon = 1e-12);

        // only Q enters: changing the slope while holding Q fixed leaves the value unchanged
        let tilted = TukeyModel::with_observed_fraction(
            n01(),
            CanonicalMechanism::new(1.0, 0.0, 1.3, 0.1).unwrap(),
            0.5,
        )
        .unwrap();
        assert_relative_eq!(tilted.observed_loglik(&four), model.observed_loglik(&four), epsilon = 1e-12);
    }
}
