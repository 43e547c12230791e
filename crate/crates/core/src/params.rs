//! Flat, named parameter maps shared by truth records and posterior draws.
//!
//! Names: `lambda`, `w[k]`, `mu[k]`, `sigma[k]` for the continuous part, `p[m]`, `gamma[m]` for the
//! atoms, `kappa`, `alpha0`, `alpha1`, `alpha2` for the canonical mechanism and `q`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expfam::{Atom, Component, GaussianNatural, MixtureModel};
use crate::mechanism::CanonicalMechanism;
use crate::model::TukeyModel;

pub type ParamMap = BTreeMap<String, f64>;

pub fn indexed(name: &str, i: usize) -> String {
    format!("{name}[{i}]")
}

pub fn insert_mixture(out: &mut ParamMap, obs: &MixtureModel<f64>) {
    out.insert("lambda".into(), obs.lambda());
    for (k, c) in obs.components().iter().enumerate() {
        out.insert(indexed("w", k), c.weight);
        out.insert(indexed("mu", k), c.eta.mean());
        out.insert(indexed("sigma", k), c.eta.sd());
    }
    for (m, a) in obs.atoms().iter().enumerate() {
        out.insert(indexed("p", m), a.prob);
        out.insert(indexed("gamma", m), a.location);
    }
}

pub fn insert_mechanism(out: &mut ParamMap, mech: &CanonicalMechanism<f64>) {
    out.insert("kappa".into(), mech.kappa);
    out.insert("alpha0".into(), mech.alpha0);
    out.insert("alpha1".into(), mech.alpha1);
    out.insert("alpha2".into(), mech.alpha2);
}

pub fn insert_model(out: &mut ParamMap, model: &TukeyModel<f64>) {
    insert_mixture(out, &model.obs);
    insert_mechanism(out, &model.mech);
    out.insert("q".into(), model.q);
}

fn get(map: &ParamMap, key: &str) -> Result<f64> {
    map.get(key).copied().ok_or_else(|| Error::Data(format!("missing parameter `{key}`")))
}

fn count(map: &ParamMap, name: &str) -> usize {
    (0..).take_while(|&i| map.contains_key(&indexed(name, i))).count()
}

pub fn mixture_from(map: &ParamMap) -> Result<MixtureModel<f64>> {
    let lambda = get(map, "lambda")?;
    let components = (0..count(map, "w"))
        .map(|k| {
            let eta = GaussianNatural::from_mean_sd(get(map, &indexed("mu", k))?, get(map, &indexed("sigma", k))?)?;
            Ok(Component { weight: get(map, &indexed("w", k))?, eta })
        })
        .collect::<Result<Vec<_>>>()?;
    let atoms = (0..count(map, "p"))
        .map(|m| Ok(Atom { prob: get(map, &indexed("p", m))?, location: get(map, &indexed("gamma", m))? }))
        .collect::<Result<Vec<_>>>()?;
    MixtureModel::new(lambda, components, atoms)
}

pub fn mechanism_from(map: &ParamMap) -> Result<CanonicalMechanism<f64>> {
    CanonicalMechanism::new(get(map, "kappa")?, get(map, "alpha0")?, get(map, "alpha1")?, get(map, "alpha2")?)
}

/// Rebuilds and validates the joint model.
pub fn model_from(map: &ParamMap) -> Result<TukeyModel<f64>> {
    TukeyModel::new(mixture_from(map)?, mechanism_from(map)?, get(map, "q")?)
}
