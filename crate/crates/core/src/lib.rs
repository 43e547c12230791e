//! Tukey's representation for non-ignorable missing data.
//!
//! The joint law of a value `Y` and its observation indicator `R` is specified through the
//! observed-data density `f(y | R = 1)` and a logistic missingness mechanism `P(R = 1 | y)`.
//! When the observed data are a (semicontinuous) Gaussian mixture and the log-odds of
//! missingness are at most quadratic in `y`, the observed fraction `Q`, the missing-data law and
//! the complete-data law all have closed forms; [`model`] implements them and [`oracle`] checks
//! them by quadrature and simulation. [`inference`] fits the observed-data mixture, updates `Q`
//! from the counts and pushes mechanism-prior draws forward to complete-data estimands and
//! multiple imputations.
//!
//! The density algebra is generic over [`Real`] (`f32` or `f64`); the aliases at the crate root
//! fix the scalar to `f64`, which is what the samplers, simulators and file formats use.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod expfam;
pub mod inference;
pub mod io;
pub mod mechanism;
pub mod model;
pub mod oracle;
pub mod params;
pub mod quadrature;
pub mod scalar;
pub mod simulate;
pub mod stats;
pub mod studies;

pub use dataset::{Dataset, Record};
pub use error::{Error, Result};
pub use mechanism::canonicalize;
pub use model::{q_closed_form, solve_intercept, tilt_mass, Violation};
pub use quadrature::QuadratureConfig;
pub use scalar::Real;

pub type GaussianNatural = expfam::GaussianNatural<f64>;
pub type MixtureModel = expfam::MixtureModel<f64>;
pub type Component = expfam::Component<f64>;
pub type Atom = expfam::Atom<f64>;
pub type MechanismSpec = mechanism::MechanismSpec<f64>;
pub type CanonicalMechanism = mechanism::CanonicalMechanism<f64>;
pub type TukeyModel = model::TukeyModel<f64>;

pub type GaussianNaturalF32 = expfam::GaussianNatural<f32>;
pub type MixtureModelF32 = expfam::MixtureModel<f32>;
pub type CanonicalMechanismF32 = mechanism::CanonicalMechanism<f32>;
pub type TukeyModelF32 = model::TukeyModel<f32>;
