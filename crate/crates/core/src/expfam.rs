//! Gaussian exponential-family components and semicontinuous mixtures.
//!
//! A Gaussian is held in natural form `(eta1, eta2) = (mu / s2, -1 / (2 s2))` with sufficient
//! statistic `T(y) = (y, y^2)`, base measure `h(y) = (2 pi)^(-1/2)` and log-normalizer
//! `A(eta) = -eta1^2 / (4 eta2) - log(-2 eta2) / 2`, so that
//! `density(y) = h(y) exp(eta1 y + eta2 y^2 - A(eta))`.
//!
//! A [`MixtureModel`] is a semicontinuous law: with probability `lambda` a draw comes from a
//! finite Gaussian mixture, otherwise from a finite set of point masses. Densities are taken
//! with respect to Lebesgue measure plus counting measure on the atom locations, so a value
//! sitting exactly on an atom is attributed to the discrete part.

use rand::distr::{Distribution, StandardUniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Real};

/// Natural parameters of a univariate Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianNatural<T> {
    pub eta1: T,
    pub eta2: T,
}

impl<T: Real> GaussianNatural<T> {
    pub fn new(eta1: T, eta2: T) -> Result<Self> {
        if !(eta2 < T::zero()) || !eta1.is_finite() {
            return Err(Error::ImproperComponent { eta2: eta2.as_f64() });
        }
        Ok(Self { eta1, eta2 })
    }

    /// Forward map from `(mean, variance)`.
    pub fn from_moments(mean: T, variance: T) -> Result<Self> {
        if !(variance > T::zero()) || !variance.is_finite() {
            return Err(Error::NonPositiveVariance(variance.as_f64()));
        }
        let two = T::lit(2.0);
        Self::new(mean / variance, -T::one() / (two * variance))
    }

    pub fn from_mean_sd(mean: T, sd: T) -> Result<Self> {
        Self::from_moments(mean, sd * sd)
    }

    /// Inverse map `(mean, variance) = (-eta1 / (2 eta2), -1 / (2 eta2))`.
    pub fn moments(&self) -> (T, T) {
        let two = T::lit(2.0);
        (-self.eta1 / (two * self.eta2), -T::one() / (two * self.eta2))
    }

    pub fn mean(&self) -> T {
        self.moments().0
    }

    pub fn variance(&self) -> T {
        self.moments().1
    }

    pub fn sd(&self) -> T {
        self.variance().sqrt()
    }

    /// `A(eta)`; the matching normalizer is `g = exp(-A)`.
    pub fn log_normalizer(&self) -> Result<T> {
        if !(self.eta2 < T::zero()) {
            return Err(Error::ImproperComponent { eta2: self.eta2.as_f64() });
        }
        Ok(self.log_normalizer_unchecked())
    }

    pub(crate) fn log_normalizer_unchecked(&self) -> T {
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        -self.eta1 * self.eta1 / (four * self.eta2) - (-two * self.eta2).ln() / two
    }

    /// Shifts the natural parameter by `(alpha1, alpha2)`, i.e. multiplies the density by
    /// `exp(alpha1 y + alpha2 y^2)` and renormalizes.
    pub fn tilt(&self, alpha1: T, alpha2: T) -> Result<Self> {
        let eta2 = self.eta2 + alpha2;
        if !(eta2 < T::zero()) {
            return Err(Error::Integrability {
                component: 0,
                eta2: self.eta2.as_f64(),
                alpha2: alpha2.as_f64(),
            });
        }
        Ok(Self { eta1: self.eta1 + alpha1, eta2 })
    }

    /// `log E[exp(alpha1 Y + alpha2 Y^2)] = A(eta + alpha) - A(eta)`.
    ///
    /// Evaluated through the moments, `(a m + b m^2 + a^2 v / 2) / s - ln(s) / 2` with
    /// `s = 1 - 2 b v`, because the two normalizers are huge and nearly equal for narrow
    /// components far from zero.
    pub fn log_tilt_ratio(&self, alpha1: T, alpha2: T) -> Result<T> {
        self.tilt(alpha1, alpha2)?;
        let (m, v) = self.moments();
        let two = T::lit(2.0);
        let s = T::one() + alpha2 / self.eta2;
        Ok((alpha1 * m + alpha2 * m * m + alpha1 * alpha1 * v / two) / s - s.ln() / two)
    }

    pub fn log_density(&self, y: T) -> T {
        let half_ln_2pi = T::lit(0.918_938_533_204_672_8);
        -half_ln_2pi + self.eta1 * y + self.eta2 * y * y - self.log_normalizer_unchecked()
    }

    pub fn density(&self, y: T) -> T {
        self.log_density(y).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component<T> {
    pub weight: T,
    pub eta: GaussianNatural<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<T> {
    pub prob: T,
    pub location: T,
}

/// Continuous Gaussian mixture with fraction `lambda` plus point masses with fraction `1 - lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel<T> {
    lambda: T,
    components: Vec<Component<T>>,
    atoms: Vec<Atom<T>>,
}

fn sum_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

impl<T: Real> MixtureModel<T> {
    pub fn new(lambda: T, components: Vec<Component<T>>, atoms: Vec<Atom<T>>) -> Result<Self> {
        let tol = sum_tolerance::<T>();
        if !(lambda >= T::zero() && lambda <= T::one()) {
            return Err(Error::InvalidMixture(format!("lambda = {lambda} outside [0, 1]")));
        }
        if lambda > T::zero() && components.is_empty() {
            return Err(Error::InvalidMixture("lambda > 0 requires at least one component".into()));
        }
        if lambda < T::one() && atoms.is_empty() {
            return Err(Error::InvalidMixture("lambda < 1 requires at least one atom".into()));
        }
        for (k, c) in components.iter().enumerate() {
            if !(c.weight >= T::zero()) || !c.weight.is_finite() {
                return Err(Error::InvalidMixture(format!("component {k} has weight {}", c.weight)));
            }
            if !(c.eta.eta2 < T::zero()) || !c.eta.eta1.is_finite() {
                return Err(Error::ImproperComponent { eta2: c.eta.eta2.as_f64() });
            }
        }
        if !components.is_empty() {
            let s: T = components.iter().map(|c| c.weight).sum();
            if (s - T::one()).abs() > tol {
                return Err(Error::InvalidMixture(format!("component weights sum to {s}")));
            }
        }
        for (m, a) in atoms.iter().enumerate() {
            if !(a.prob >= T::zero()) || !a.location.is_finite() {
                return Err(Error::InvalidMixture(format!(
                    "atom {m} has probability {} at {}",
                    a.prob, a.location
                )));
            }
            if atoms[..m].iter().any(|b| b.location == a.location) {
                return Err(Error::InvalidMixture(format!("duplicate atom location {}", a.location)));
            }
        }
        if !atoms.is_empty() {
            let s: T = atoms.iter().map(|a| a.prob).sum();
            if (s - T::one()).abs() > tol {
                return Err(Error::InvalidMixture(format!("atom probabilities sum to {s}")));
            }
        }
        Ok(Self { lambda, components, atoms })
    }

    /// A single Gaussian `N(mean, sd^2)`.
    pub fn gaussian(mean: T, sd: T) -> Result<Self> {
        let eta = GaussianNatural::from_mean_sd(mean, sd)?;
        Self::new(T::one(), vec![Component { weight: T::one(), eta }], vec![])
    }

    /// Builds a mixture from `(weight, mean, sd)` triples and `(prob, location)` pairs.
    pub fn from_parts(lambda: T, components: &[(T, T, T)], atoms: &[(T, T)]) -> Result<Self> {
        let comps = components
            .iter()
            .map(|&(w, m, s)| Ok(Component { weight: w, eta: GaussianNatural::from_mean_sd(m, s)? }))
            .collect::<Result<Vec<_>>>()?;
        let atoms = atoms.iter().map(|&(p, g)| Atom { prob: p, location: g }).collect();
        Self::new(lambda, comps, atoms)
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn components(&self) -> &[Component<T>] {
        &self.components
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    /// Index of the atom located exactly at `y`.
    pub fn atom_index(&self, y: T) -> Option<usize> {
        self.atoms.iter().position(|a| a.location == y)
    }

    /// Log density with respect to the mixed dominating measure.
    pub fn log_density(&self, y: T) -> T {
        if let Some(m) = self.atom_index(y) {
            return ((T::one() - self.lambda) * self.atoms[m].prob).ln();
        }
        self.log_continuous_density(y)
    }

    pub fn density(&self, y: T) -> T {
        self.log_density(y).exp()
    }

    /// `log(lambda * sum_k w_k phi_k(y))`, ignoring atoms.
    pub fn log_continuous_density(&self, y: T) -> T {
        if self.lambda == T::zero() || self.components.is_empty() {
            return T::neg_infinity();
        }
        let terms: Vec<T> =
            self.components.iter().map(|c| c.weight.ln() + c.eta.log_density(y)).collect();
        self.lambda.ln() + log_sum_exp(&terms)
    }

    /// Mass the model assigns to the point `y` (zero off the atoms).
    pub fn atom_mass(&self, y: T) -> T {
        match self.atom_index(y) {
            Some(m) => (T::one() - self.lambda) * self.atoms[m].prob,
            None => T::zero(),
        }
    }

    /// Analytic `(mean, variance)` over both parts.
    pub fn moments(&self) -> (T, T) {
        let lambda = self.lambda;
        let mut parts: Vec<(T, T, T)> = Vec::new();
        for c in &self.components {
            let (m, v) = c.eta.moments();
            parts.push((lambda * c.weight, m, v));
        }
        for a in &self.atoms {
            parts.push(((T::one() - lambda) * a.prob, a.location, T::zero()));
        }
        let mean: T = parts.iter().map(|&(w, m, _)| w * m).sum();
        let var: T = parts.iter().map(|&(w, m, v)| w * (v + (m - mean) * (m - mean))).sum();
        (mean, var)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> T
    where
        StandardNormal: Distribution<T>,
        StandardUniform: Distribution<T>,
    {
        let u: T = rng.random();
        let continuous = if self.lambda >= T::one() {
            true
        } else if self.lambda <= T::zero() {
            false
        } else {
            u < self.lambda
        };
        if continuous {
            let k = pick(rng, self.components.iter().map(|c| c.weight));
            let (m, v) = self.components[k].eta.moments();
            let z: T = rng.sample(StandardNormal);
            m + v.sqrt() * z
        } else {
            let m = pick(rng, self.atoms.iter().map(|a| a.prob));
            self.atoms[m].location
        }
    }

    /// `n` independent draws from a generator seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<T>
    where
        StandardNormal: Distribution<T>,
        StandardUniform: Distribution<T>,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }
}

/// Samples an index proportional to the (non-negative) weights.
fn pick<T: Real, R: Rng + ?Sized>(rng: &mut R, weights: impl Iterator<Item = T> + Clone) -> usize
where
    StandardUniform: Distribution<T>,
{
    let total: T = weights.clone().sum();
    let u: T = rng.random::<T>() * total;
    let mut acc = T::zero();
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > T::zero() {
            last = i;
        }
        acc = acc + w;
        if u < acc {
            return i;
        }
    }
    last
}
