#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tukey::{CanonicalMechanism, MixtureModel, TukeyModel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random semicontinuous observed-data model, including the degenerate `lambda = 0 | 1` cases.
pub fn random_mixture(rng: &mut ChaCha8Rng) -> MixtureModel {
    let lambda = match rng.random_range(0..10) {
        0 => 0.0,
        1..=3 => 1.0,
        _ => rng.random_range(0.2..0.95),
    };
    let k = rng.random_range(1..=3);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let comps: Vec<(f64, f64, f64)> = raw
        .iter()
        .map(|w| (w / total, rng.random_range(-3.0..3.0), rng.random_range(0.5..2.0)))
        .collect();
    let m = rng.random_range(1..=4);
    let mut locs: Vec<i32> = Vec::new();
    while locs.len() < m {
        let g = rng.random_range(-5..=5);
        if !locs.contains(&g) {
            locs.push(g);
        }
    }
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let atoms: Vec<(f64, f64)> = raw.iter().zip(&locs).map(|(p, &g)| (p / total, g as f64)).collect();
    let comps = if lambda == 0.0 { vec![] } else { comps };
    let atoms = if lambda == 1.0 { vec![] } else { atoms };
    MixtureModel::from_parts(lambda, &comps, &atoms).unwrap()
}

/// A random mechanism that keeps every component of `obs` integrable.
pub fn random_mechanism(rng: &mut ChaCha8Rng, obs: &MixtureModel) -> CanonicalMechanism {
    let kappa = if rng.random_bool(0.5) { 1.0 } else { rng.random_range(0.3..1.0) };
    let bound = obs
        .components()
        .iter()
        .map(|c| -c.eta.eta2)
        .fold(f64::INFINITY, f64::min)
        .min(1.0);
    let alpha2 = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..0.6) * bound };
    CanonicalMechanism::new(kappa, rng.random_range(-2.0..2.0), rng.random_range(-1.5..1.5), alpha2).unwrap()
}

pub fn random_model(rng: &mut ChaCha8Rng) -> TukeyModel {
    let obs = random_mixture(rng);
    let mech = random_mechanism(rng, &obs);
    TukeyModel::from_mechanism(obs, mech).unwrap()
}

/// Grid of `n` points spanning every component's mean plus or minus `span` sds (or the atoms).
pub fn grid(obs: &MixtureModel, span: f64, n: usize) -> Vec<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in obs.components() {
        let (m, v) = c.eta.moments();
        lo = lo.min(m - span * v.sqrt());
        hi = hi.max(m + span * v.sqrt());
    }
    for a in obs.atoms() {
        lo = lo.min(a.location - 1.0);
        hi = hi.max(a.location + 1.0);
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
