//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::{grid, random_mechanism, random_mixture, random_model, rng};
use rand::Rng;
use tukey::inference::{
    posterior_estimands, sample_mechanism, sample_pinned, McmcConfig, MechanismPrior, RejectionStats, ScalarPrior,
};
use tukey::model::{missing_model, q_closed_form, solve_intercept, Violation};
use tukey::oracle::{missing_density_pointwise, mc_observed_fraction, q_quadrature};
use tukey::studies::{
    derive_seed, robust42_mcmc, run_robust42, sim41_cell, sim41_model, sim41_prior, summarize_robust42,
    ROBUST42_CELLS, ROBUST42_REPS, ROBUST42_SLOPES,
};
use tukey::{CanonicalMechanism, MechanismSpec, MixtureModel, QuadratureConfig, TukeyModel};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn oracle_agreement() -> Outcome {
    let start = Instant::now();
    let cfg = QuadratureConfig::default();
    let mut r = rng(1);
    let (mut q_worst, mut d_worst) = (0.0f64, 0.0f64);
    for _ in 0..500 {
        let model = random_model(&mut r);
        let (obs, mech) = (&model.obs, &model.mech);
        let q = q_closed_form(obs, mech).unwrap();
        q_worst = q_worst.max((q - q_quadrature(obs, mech, &cfg).unwrap()).abs());
        let mis = missing_model(obs, mech).unwrap();
        for y in grid(obs, 10.0, 1001).into_iter().chain(obs.atoms().iter().map(|a| a.location)) {
            d_worst = d_worst.max((mis.density(y) - missing_density_pointwise(obs, mech, q, y)).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        q_worst < 1e-8 && d_worst < 1e-8 && secs < 60.0,
        format!("500 pairs: max |dQ| {q_worst:.2e}, max density error {d_worst:.2e}, {secs:.1}s"),
    )
}

fn inversion_round_trip() -> Outcome {
    let mut r = rng(2);
    let (mut worst, mut below_one, mut done) = (0.0f64, 0, 0);
    while done < 500 {
        let obs = random_mixture(&mut r);
        let mech = random_mechanism(&mut r, &obs);
        let target = r.random_range(0.01..0.99) * mech.kappa;
        let alpha0 = solve_intercept(&obs, &mech, target).unwrap();
        let q = q_closed_form(&obs, &mech.with_alpha0(alpha0)).unwrap();
        worst = worst.max((q - target).abs());
        below_one += usize::from(mech.kappa < 1.0);
        done += 1;
    }
    outcome(worst < 1e-10 && below_one > 0, format!("500 targets ({below_one} with kappa < 1): max error {worst:.2e}"))
}

fn reference_constant() -> Outcome {
    let model = sim41_model().unwrap();
    let cfg = QuadratureConfig::default().tightened(100.0);
    let q = q_quadrature(&model.obs, &model.mech, &cfg).unwrap();
    let spec = MechanismSpec::QuadraticLogit { b0: 0.0, b1: -2.0, b2: 0.06 };
    let b0 = spec.b0_from_alpha0(model.mech.alpha0);
    outcome(
        (q - 0.5).abs() < 1e-8,
        format!(
            "alpha0 {:.6}, b0 {b0:.6} (reference value -0.85, difference {:.3}); Q by quadrature {q:.12}",
            model.mech.alpha0,
            b0 + 0.85
        ),
    )
}

fn sample_level_fraction() -> Outcome {
    let start = Instant::now();
    let mut r = rng(4);
    let n = 1_000_000;
    let mut worst_z = 0.0f64;
    for i in 0..20 {
        let model = random_model(&mut r);
        let mc = mc_observed_fraction(&model, n, 100 + i).unwrap();
        let se = (model.q * (1.0 - model.q) / n as f64).sqrt();
        worst_z = worst_z.max((mc - model.q).abs() / se);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst_z < 4.0 && secs < 60.0, format!("20 models at n=1e6: max |z| {worst_z:.2}, {secs:.1}s"))
}

fn interval_width(draws: &[f64]) -> f64 {
    tukey::stats::quantile(draws, 0.975) - tukey::stats::quantile(draws, 0.025)
}

fn covers(draws: &[f64], truth: f64) -> bool {
    tukey::stats::quantile(draws, 0.025) <= truth && truth <= tukey::stats::quantile(draws, 0.975)
}

fn study_replication() -> Outcome {
    let start = Instant::now();
    let model = sim41_model().unwrap();
    let (truth_mean, truth_sd) = model.complete_moments().unwrap();
    let (prior, _) = sim41_prior().unwrap();
    let mcmc = McmcConfig { chains: 2, iterations: 2000, burnin: 1000, thin: 2, seed: 0, mechanism_seed: None };
    let (mut mean_hits, mut sd_hits, mut small_hits) = (0, 0, 0);
    let seeds = 50;
    for s in 0..seeds {
        let est = sim41_cell(&model, &prior, Some(10_000), derive_seed(5, s), &mcmc).unwrap();
        mean_hits += usize::from(covers(&est.complete_mean, truth_mean));
        sd_hits += usize::from(covers(&est.complete_sd, truth_sd));
        let est = sim41_cell(&model, &prior, Some(1_000), derive_seed(50, s), &mcmc).unwrap();
        small_hits += usize::from(covers(&est.complete_mean, truth_mean));
    }

    let pinned = |mechanism: &MechanismPrior| {
        let p = tukey::inference::PriorConfig { mechanism: mechanism.clone(), ..prior.clone() };
        let draws = sample_pinned(&model.obs, model.q, &p, &McmcConfig { seed: 6, ..mcmc }).unwrap();
        interval_width(&posterior_estimands(&draws, None).unwrap().complete_mean)
    };
    let open = pinned(&prior.mechanism);
    let point = pinned(&MechanismPrior::Quadratic { b1: ScalarPrior::Point(-2.0), b2: ScalarPrior::Point(0.06) });
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mean_hits >= 42 && sd_hits >= 42 && small_hits >= 42 && open > 0.0 && open > point,
        format!(
            "n=10000 coverage mean {mean_hits}/{seeds}, sd {sd_hits}/{seeds}; n=1000 mean {small_hits}/{seeds}; \
             N=inf mean width {open:.3} vs point prior {point:.2e}; {secs:.0}s"
        ),
    )
}

fn robustness_replication() -> Outcome {
    let start = Instant::now();
    let rows = run_robust42(42, ROBUST42_REPS, &robust42_mcmc()).unwrap();
    let summary = summarize_robust42(&rows);
    let mut pass = true;
    let mut parts = Vec::new();
    for &(n, k) in &ROBUST42_CELLS {
        let errs: Vec<f64> = ROBUST42_SLOPES
            .iter()
            .map(|&b1| summary.iter().find(|s| s.n == n && s.k == k && s.b1 == b1).unwrap().median_abs_error)
            .collect();
        pass &= errs.windows(2).all(|w| w[0] <= w[1]);
        parts.push(format!("n={n},K={k}: {:.3} / {:.3} / {:.3}", errs[0], errs[1], errs[2]));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(pass, format!("median |error| for b1 = 1 / 2 / 5: {}; {secs:.0}s", parts.join("; ")))
}

fn tilt_structure() -> Outcome {
    let mut r = rng(7);
    let mut failures = 0;
    let mut mcar_worst = 0.0f64;
    for _ in 0..500 {
        let obs = random_mixture(&mut r);
        let mech = random_mechanism(&mut r, &obs);
        let mis = missing_model(&obs, &mech).unwrap();
        let k = obs.components().len();
        let expected = match (obs.lambda() == 0.0, mech.kappa == 1.0 || mech.is_mcar()) {
            (true, _) => 0,
            (false, true) => k,
            (false, false) => 2 * k,
        };
        let tilted_ok = mis.components().iter().rev().take(k.min(expected)).rev().zip(obs.components()).all(|(m, o)| {
            o.eta.tilt(mech.alpha1, mech.alpha2).is_ok_and(|t| t == m.eta) || mech.is_mcar()
        });
        let atoms_ok = mis.atoms().iter().map(|a| a.location).eq(obs.atoms().iter().map(|a| a.location));
        failures += usize::from(mis.components().len() != expected || !tilted_ok || !atoms_ok);

        let mcar = CanonicalMechanism::mcar(mech.kappa, mech.alpha0);
        let same = missing_model(&obs, &mcar).unwrap();
        for y in grid(&obs, 8.0, 401).into_iter().chain(obs.atoms().iter().map(|a| a.location)) {
            mcar_worst = mcar_worst.max((same.density(y) - obs.density(y)).abs());
        }
    }
    outcome(
        failures == 0 && mcar_worst < 1e-12,
        format!("500 models: {failures} structural mismatches; MCAR max |f_mis - f_obs| {mcar_worst:.1e}"),
    )
}

fn integrability_guard() -> Outcome {
    let mut r = rng(8);
    let mut misnamed = 0;
    for _ in 0..500 {
        let sds: Vec<f64> = (0..3).map(|_| r.random_range(0.3..3.0)).collect();
        let comps: Vec<(f64, f64, f64)> = sds.iter().map(|&s| (1.0 / 3.0, r.random_range(-2.0..2.0), s)).collect();
        let obs = MixtureModel::from_parts(1.0, &comps, &[]).unwrap();
        let widest = (0..3).max_by(|&a, &b| sds[a].total_cmp(&sds[b])).unwrap();
        let bound = 1.0 / (2.0 * sds[widest] * sds[widest]);
        let alpha2 = bound * r.random_range(1.0..3.0);
        let model = TukeyModel { obs, mech: CanonicalMechanism::new(1.0, 0.0, 0.0, alpha2).unwrap(), q: 0.5 };
        let named = model
            .validate()
            .iter()
            .any(|v| matches!(v, Violation::Integrability { component, .. } if *component == widest));
        misnamed += usize::from(!named);
    }

    // the shipped curvature prior against the widest components the mixture prior allows
    let (prior, _) = sim41_prior().unwrap();
    let upper = prior.mixture.sd_prior_upper;
    let mut stats = RejectionStats::default();
    let mut g = rng(9);
    for _ in 0..20_000 {
        let sd = upper * g.random_range(0.5..=1.0);
        let obs = MixtureModel::from_parts(0.8, &[(1.0, g.random_range(-4.0..4.0), sd)], &[(1.0, 0.0)]).unwrap();
        let q = g.random_range(0.05..0.95);
        sample_mechanism(&prior.mechanism, &obs, q, &mut g, &mut stats).unwrap();
    }
    outcome(
        misnamed == 0 && stats.rejections == 0,
        format!(
            "500 violating configs, {misnamed} without the named violation; shipped prior: {} rejections in {} draws",
            stats.rejections, stats.attempts
        ),
    )
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_tukey")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.path().is_file())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let root = tempfile::tempdir().unwrap();
    let config = root.path().join("sim.json");
    fs::write(&config, tukey::studies::SIM41_SIM_CONFIG.replace("\"n\": 10000", "\"n\": 2000")).unwrap();
    let prior = root.path().join("prior.json");
    fs::write(&prior, tukey::studies::SIM41_PRIOR_CONFIG).unwrap();
    let (config, prior) = (config.to_str().unwrap().to_string(), prior.to_str().unwrap().to_string());

    let mut codes = Vec::new();
    let mut run = |tag: &str| -> Vec<(String, Vec<u8>)> {
        let dir = root.path().join(tag);
        fs::create_dir(&dir).unwrap();
        let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
        let mut stdout = Vec::new();
        for args in [
            vec!["simulate", "--config", &config, "--out", &p("s")],
            vec!["fit", "--data", &p("s.data.csv"), "--prior", &prior, "--iters", "600", "--burnin", "200", "--out", &p("f")],
            vec!["impute", "--data", &p("s.data.csv"), "--draws", &p("f.draws.csv"), "--m", "3", "--seed", "4", "--out", &p("i")],
            vec!["oracle-check", "--config", &config],
            vec!["replicate", "--study", "sim41", "--seed", "41", "--out", &p("r41")],
            vec!["replicate", "--study", "robust42", "--seed", "42", "--out", &p("r42")],
        ] {
            let (code, out) = run_cli(&args);
            codes.push(code);
            stdout.push((args[0].to_string(), out));
        }
        let mut files = read_dir_bytes(&dir);
        files.extend(read_dir_bytes(&dir.join("r41")));
        files.extend(read_dir_bytes(&dir.join("r42")));
        files.extend(stdout);
        files
    };
    let (a, b) = (run("a"), run("b"));
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        codes.iter().all(|&c| c == 0) && a.len() == b.len() && differing.is_empty(),
        format!("{} outputs compared across two runs, {} differ; exit codes {codes:?}; {secs:.0}s", a.len(), differing.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle agreement", oracle_agreement),
        ("intercept inversion round trip", inversion_round_trip),
        ("reference configuration constant", reference_constant),
        ("observed fraction at sample level", sample_level_fraction),
        ("semicontinuous study coverage and N=inf width", study_replication),
        ("robustness ordering in the slope", robustness_replication),
        ("tilt structure and MCAR identity", tilt_structure),
        ("integrability guard", integrability_guard),
        ("CLI byte reproducibility", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!("{} {}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
