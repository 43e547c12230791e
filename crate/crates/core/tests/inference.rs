use tukey::inference::{
    impute, posterior_estimands, sample_pinned, sample_posterior, BetaPrior, McmcConfig, MechanismPrior, MixturePrior,
    PriorConfig, ScalarPrior,
};
use tukey::mechanism::MechanismSpec;
use tukey::simulate::simulate_tukey;
use tukey::stats::{ks_same_law, quantile};
use tukey::{canonicalize, Dataset, Error, MixtureModel, Record, TukeyModel};

fn mcmc(seed: u64) -> McmcConfig {
    McmcConfig { chains: 2, iterations: 1500, burnin: 500, thin: 2, seed, mechanism_seed: None }
}

fn linear_model() -> TukeyModel {
    let obs = MixtureModel::from_parts(0.8, &[(0.6, -1.0, 1.0), (0.4, 2.0, 0.8)], &[(0.5, 0.0), (0.5, 1.0)]).unwrap();
    let mech = canonicalize(&MechanismSpec::LinearLogit { b0: 0.5, b1: 0.4 }).unwrap();
    TukeyModel::from_mechanism(obs, mech).unwrap()
}

fn prior(mechanism: MechanismPrior, k: usize) -> PriorConfig {
    PriorConfig { mixture: MixturePrior::new(k, vec![0.0, 1.0]), mechanism, q_prior: BetaPrior::UNIFORM }
}

#[test]
fn observed_density_is_recovered() {
    let truth = linear_model();
    let (data, _) = simulate_tukey(&truth, 5000, 1).unwrap();
    let draws = sample_posterior(&data, &prior(MechanismPrior::Linear { b1: ScalarPrior::Point(0.4) }, 2), &mcmc(2))
        .unwrap();
    let models: Vec<_> = (0..draws.len()).map(|i| draws.model(i).unwrap()).collect();
    let mut inside = 0;
    let grid: Vec<f64> = (0..81).map(|i| -4.0 + 0.1 * i as f64).collect();
    for &y in &grid {
        let dens: Vec<f64> = models.iter().map(|m| m.obs.density(y)).collect();
        let (lo, hi) = (quantile(&dens, 0.0005), quantile(&dens, 0.9995));
        if (lo..=hi).contains(&truth.obs.density(y)) {
            inside += 1;
        }
    }
    assert!(inside >= 75, "{inside} of {} grid points inside the band", grid.len());
    let lambda = draws.column("lambda").unwrap();
    assert!((quantile(lambda, 0.5) - 0.8).abs() < 0.03);
}

#[test]
fn known_mechanism_targets_the_complete_mean() {
    let truth = linear_model();
    let (data, record) = simulate_tukey(&truth, 5000, 3).unwrap();
    let known = MechanismPrior::Known { mechanism: MechanismSpec::LinearLogit { b0: 0.5, b1: 0.4 } };
    let draws = sample_posterior(&data, &prior(known, 2), &mcmc(4)).unwrap();
    for i in 0..draws.len() {
        let m = draws.model(i).unwrap();
        assert!((tukey::q_closed_form(&m.obs, &m.mech).unwrap() - m.q).abs() < 1e-12);
    }
    let est = posterior_estimands(&draws, Some(&truth)).unwrap();
    let lo = quantile(&est.complete_mean, 0.005);
    let hi = quantile(&est.complete_mean, 0.995);
    assert!(lo < record.complete_mean && record.complete_mean < hi, "[{lo}, {hi}] vs {}", record.complete_mean);
    assert!(est.atom_max_error.unwrap().iter().all(|&e| e < 0.1));
}

#[test]
fn unknown_missing_count_leaves_q_at_its_prior() {
    let truth = linear_model();
    let (data, _) = simulate_tukey(&truth, 2000, 5).unwrap();
    let observed_only = Dataset::new(data.observed_values().map(Record::observed).collect(), false).unwrap();
    assert!(!observed_only.n_missing_known());
    let p = prior(MechanismPrior::Linear { b1: ScalarPrior::Normal { mean: 0.0, sd: 0.5 } }, 2);
    let draws = sample_posterior(&observed_only, &p, &mcmc(6)).unwrap();
    let q = draws.column("q").unwrap();
    // Beta(1, 1): quartiles near 0.25 and 0.75
    assert!((quantile(q, 0.25) - 0.25).abs() < 0.05);
    assert!((quantile(q, 0.75) - 0.75).abs() < 0.05);
}

#[test]
fn incompatible_prior_is_reported() {
    let truth = linear_model();
    let (data, _) = simulate_tukey(&truth, 500, 7).unwrap();
    // a curvature of 5 makes every component non-integrable
    let p = prior(MechanismPrior::Quadratic { b1: ScalarPrior::Point(0.0), b2: ScalarPrior::Point(5.0) }, 2);
    let small = McmcConfig { chains: 1, iterations: 20, burnin: 10, thin: 1, seed: 1, mechanism_seed: None };
    assert!(matches!(sample_posterior(&data, &p, &small), Err(Error::PriorIncompatible(_))));
}

#[test]
fn pinned_draws_widen_with_mechanism_uncertainty() {
    let truth = linear_model();
    let width = |mechanism| {
        let draws = sample_pinned(&truth.obs, truth.q, &prior(mechanism, 2), &mcmc(8)).unwrap();
        let est = posterior_estimands(&draws, None).unwrap();
        quantile(&est.complete_mean, 0.975) - quantile(&est.complete_mean, 0.025)
    };
    let point = width(MechanismPrior::Linear { b1: ScalarPrior::Point(0.4) });
    let spread = width(MechanismPrior::Linear { b1: ScalarPrior::Normal { mean: 0.4, sd: 0.3 } });
    assert!(point < 1e-12, "{point}");
    assert!(spread > 0.1, "{spread}");
}

#[test]
fn mcar_imputations_look_like_the_observed_data() {
    let obs = MixtureModel::from_parts(0.7, &[(1.0, 1.0, 1.5)], &[(1.0, 0.0)]).unwrap();
    let mech = canonicalize(&MechanismSpec::LinearLogit { b0: 0.0, b1: 0.0 }).unwrap();
    let truth = TukeyModel::from_mechanism(obs, mech).unwrap();
    let (data, _) = simulate_tukey(&truth, 4000, 9).unwrap();
    let p = PriorConfig {
        mixture: MixturePrior::new(1, vec![0.0]),
        mechanism: MechanismPrior::Known { mechanism: MechanismSpec::LinearLogit { b0: 0.0, b1: 0.0 } },
        q_prior: BetaPrior::UNIFORM,
    };
    let draws = sample_posterior(&data, &p, &mcmc(10)).unwrap();
    let completed = impute(&data, &draws, 5, 11).unwrap();
    let observed: Vec<f64> = data.observed_values().collect();
    let mut pooled = Vec::new();
    for d in &completed {
        for (orig, new) in data.records().iter().zip(d.records()) {
            if *orig == Record::missing() {
                pooled.push(new.value.unwrap());
            } else {
                assert_eq!(orig, new);
            }
        }
    }
    assert_eq!(pooled.len(), 5 * data.n_missing());
    assert!(ks_same_law(&pooled, &observed, 0.001));
}

#[test]
fn reference_study_density_and_imputations() {
    let truth = tukey::studies::sim41_model().unwrap();
    let (prior, _) = tukey::studies::sim41_prior().unwrap();
    let (data, _) = simulate_tukey(&truth, 10_000, 12).unwrap();
    let mcmc = McmcConfig { chains: 2, iterations: 1000, burnin: 500, thin: 5, seed: 13, mechanism_seed: None };
    let draws = sample_posterior(&data, &prior, &mcmc).unwrap();
    let models: Vec<TukeyModel> = (0..draws.len()).map(|i| draws.model(i).unwrap()).collect();
    for y in [-2.0, 0.0, 3.0] {
        let dens: Vec<f64> = models.iter().map(|m| m.obs.log_continuous_density(y).exp()).collect();
        let (m, sd) = (tukey::stats::mean(&dens), tukey::stats::variance(&dens).sqrt());
        let target = truth.obs.log_continuous_density(y).exp();
        assert!((m - target).abs() < 3.0 * sd, "y={y}: {m} +- {sd} vs {target}");
    }

    // pooled imputations against direct draws from the same posterior draws' missing laws
    let m = 10;
    let completed = impute(&data, &draws, m, 14).unwrap();
    let missing_rows: Vec<usize> = (0..data.len()).filter(|&i| !data.records()[i].observed).collect();
    let pooled: Vec<f64> =
        completed.iter().flat_map(|d| missing_rows.iter().map(move |&i| d.records()[i].value.unwrap())).collect();
    let mut direct = Vec::new();
    for k in 0..m {
        let index = ((k as f64 + 0.5) * draws.len() as f64 / m as f64) as usize;
        direct.extend(models[index].missing_model().unwrap().sample(missing_rows.len(), 100 + k as u64));
    }
    assert!(ks_same_law(&pooled, &direct, 0.01));
}
