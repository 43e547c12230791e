//! Logistic missingness mechanisms and their canonical missing-odds form.
//!
//! Every supported mechanism is reduced to
//!
//! ```text
//! P(R = 1 | y) = kappa / (1 + exp(alpha0 + alpha1 y + alpha2 y^2))
//! ```
//!
//! The linear predictor is the log-odds of *missingness* (up to the MCAR floor `1 - kappa`), so
//! the missing-data law is the observed-data law tilted by `(alpha1, alpha2)` in natural
//! parameter space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{logistic, Real};

/// Mechanisms as they are usually written down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MechanismSpec<T> {
    /// `P(R=1|y) = logistic(b0 + b1 y)`.
    LinearLogit { b0: T, b1: T },
    /// `P(R=1|y) = logistic(-(b0 + b2 (y - b1)^2))`; `b1` is the most-likely-observed value.
    QuadraticLogit { b0: T, b1: T, b2: T },
    /// `P(R=1|y) = kappa * logistic(b0 + b1 y)`; `1 - kappa` is the MCAR fraction.
    AsymptoteLogit { b0: T, b1: T, kappa: T },
}

impl<T: Real> MechanismSpec<T> {
    /// Probability of observing `y` evaluated directly from the raw parameterization.
    pub fn selection_prob(&self, y: T) -> T {
        match *self {
            MechanismSpec::LinearLogit { b0, b1 } => logistic(b0 + b1 * y),
            MechanismSpec::QuadraticLogit { b0, b1, b2 } => {
                logistic(-(b0 + (y - b1) * (y - b1) * b2))
            }
            MechanismSpec::AsymptoteLogit { b0, b1, kappa } => kappa * logistic(b0 + b1 * y),
        }
    }

    /// Same mechanism with the intercept replaced.
    pub fn with_b0(self, b0: T) -> Self {
        match self {
            MechanismSpec::LinearLogit { b1, .. } => MechanismSpec::LinearLogit { b0, b1 },
            MechanismSpec::QuadraticLogit { b1, b2, .. } => MechanismSpec::QuadraticLogit { b0, b1, b2 },
            MechanismSpec::AsymptoteLogit { b1, kappa, .. } => {
                MechanismSpec::AsymptoteLogit { b0, b1, kappa }
            }
        }
    }

    pub fn b0(&self) -> T {
        match *self {
            MechanismSpec::LinearLogit { b0, .. }
            | MechanismSpec::QuadraticLogit { b0, .. }
            | MechanismSpec::AsymptoteLogit { b0, .. } => b0,
        }
    }

    /// Maps a canonical intercept back to this variant's `b0`.
    pub fn b0_from_alpha0(&self, alpha0: T) -> T {
        match *self {
            MechanismSpec::LinearLogit { .. } | MechanismSpec::AsymptoteLogit { .. } => -alpha0,
            MechanismSpec::QuadraticLogit { b1, b2, .. } => alpha0 - b2 * b1 * b1,
        }
    }
}

/// `P(R=1|y) = kappa / (1 + exp(alpha0 + alpha1 y + alpha2 y^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalMechanism<T> {
    pub kappa: T,
    pub alpha0: T,
    pub alpha1: T,
    pub alpha2: T,
}

impl<T: Real> CanonicalMechanism<T> {
    pub fn new(kappa: T, alpha0: T, alpha1: T, alpha2: T) -> Result<Self> {
        if !(kappa > T::zero() && kappa <= T::one()) {
            return Err(Error::InvalidMechanism(format!("kappa = {kappa} outside (0, 1]")));
        }
        if !(alpha0.is_finite() && alpha1.is_finite() && alpha2.is_finite()) {
            return Err(Error::InvalidMechanism("non-finite coefficient".into()));
        }
        Ok(Self { kappa, alpha0, alpha1, alpha2 })
    }

    /// Missing-completely-at-random mechanism with constant selection probability
    /// `kappa * logistic(-alpha0)`.
    pub fn mcar(kappa: T, alpha0: T) -> Self {
        Self { kappa, alpha0, alpha1: T::zero(), alpha2: T::zero() }
    }

    /// No dependence on `y`: the missing-data law equals the observed-data law.
    pub fn is_mcar(&self) -> bool {
        self.alpha1 == T::zero() && self.alpha2 == T::zero()
    }

    pub fn with_alpha0(self, alpha0: T) -> Self {
        Self { alpha0, ..self }
    }

    /// `alpha0 + alpha1 y + alpha2 y^2`.
    pub fn predictor(&self, y: T) -> T {
        self.alpha0 + self.alpha1 * y + self.alpha2 * y * y
    }

    /// `alpha1 y + alpha2 y^2`, the part that tilts the observed law.
    pub fn tilt_exponent(&self, y: T) -> T {
        self.alpha1 * y + self.alpha2 * y * y
    }

    pub fn selection_prob(&self, y: T) -> T {
        self.kappa * logistic(-self.predictor(y))
    }

    /// `P(R=0|y) / P(R=1|y) = (1 - kappa) / kappa + exp(predictor) / kappa`.
    pub fn odds_missing(&self, y: T) -> T {
        (T::one() - self.kappa) / self.kappa + self.predictor(y).exp() / self.kappa
    }

    /// `log(odds_missing(y))`, finite even when the odds overflow.
    pub fn log_odds_missing(&self, y: T) -> T {
        let l = self.predictor(y);
        let floor = (T::one() - self.kappa).ln();
        let hi = l.max(floor);
        let lo = l.min(floor);
        let joined = if lo == T::neg_infinity() { hi } else { hi + (lo - hi).exp().ln_1p() };
        joined - self.kappa.ln()
    }
}

/// Reduces a raw mechanism to its canonical missing-odds form.
pub fn canonicalize<T: Real>(spec: &MechanismSpec<T>) -> Result<CanonicalMechanism<T>> {
    match *spec {
        MechanismSpec::LinearLogit { b0, b1 } => CanonicalMechanism::new(T::one(), -b0, -b1, T::zero()),
        MechanismSpec::QuadraticLogit { b0, b1, b2 } => {
            if !(b2 >= T::zero()) {
                return Err(Error::InvalidMechanism(format!("quadratic coefficient b2 = {b2} is negative")));
            }
            let two = T::lit(2.0);
            CanonicalMechanism::new(T::one(), b0 + b2 * b1 * b1, -two * b2 * b1, b2)
        }
        MechanismSpec::AsymptoteLogit { b0, b1, kappa } => CanonicalMechanism::new(kappa, -b0, -b1, T::zero()),
    }
}
