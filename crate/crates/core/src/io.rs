//! File formats: datasets, configs, truth records, posterior draws and summaries.
//!
//! Tables are CSV and documents are JSON. Every float is written in its shortest round-trip
//! decimal form, and writers are deterministic.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Record};
use crate::error::{Error, Result};
use crate::expfam::{Atom, Component, GaussianNatural, MixtureModel};
use crate::inference::{BetaPrior, McmcConfig, MechanismPrior, MixturePrior, PosteriorDraws, PriorConfig, Summary};
use crate::mechanism::{canonicalize, MechanismSpec};
use crate::model::{q_closed_form, solve_intercept, TukeyModel};
use crate::simulate::{Process, SimConfig, TruthRecord};

pub const SCHEMA_VERSION: u32 = 1;

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { path: path_str(path), line, message: message.into() }
}

/// Metadata stored next to a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub n_missing: Option<usize>,
}

/// `data.csv` -> `data.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

pub fn write_dataset(data: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::from("value,observed\n");
    for r in data.records() {
        match r.value {
            Some(v) => writeln!(out, "{},1", fmt_f64(v)).unwrap(),
            None => out.push_str(",0\n"),
        }
    }
    fs::write(path, out)?;
    let meta = DatasetMeta { n_missing: data.n_missing_known().then(|| data.n_missing()) };
    fs::write(sidecar_path(path), serde_json::to_string(&meta)? + "\n")?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["value", "observed"] {
        return Err(parse_err(path, 1, "header must be `value,observed`"));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 2 {
            return Err(parse_err(path, line, "expected two fields"));
        }
        let value = row[0].trim();
        let record = match (value.is_empty(), row[1].trim()) {
            (true, "0") => Record::missing(),
            (false, "1") => {
                let v: f64 = value.parse().map_err(|_| parse_err(path, line, format!("bad value `{value}`")))?;
                if !v.is_finite() {
                    return Err(parse_err(path, line, format!("non-finite value `{value}`")));
                }
                Record::observed(v)
            }
            (false, "0") => return Err(parse_err(path, line, "value present on an unobserved row")),
            (true, "1") => return Err(parse_err(path, line, "value missing on an observed row")),
            (_, other) => return Err(parse_err(path, line, format!("observed must be 0 or 1, got `{other}`"))),
        };
        records.push(record);
    }
    let n_missing = records.iter().filter(|r| !r.observed).count();
    let sidecar = sidecar_path(path);
    let known = if sidecar.exists() {
        let meta: DatasetMeta = parse_json(&fs::read_to_string(&sidecar)?, &sidecar)?;
        match meta.n_missing {
            Some(k) if k != n_missing => {
                return Err(Error::config("n_missing", format!("sidecar says {k}, file has {n_missing} unobserved rows")))
            }
            Some(_) => true,
            None if n_missing > 0 => {
                return Err(Error::config("n_missing", "null count but the file has unobserved rows"))
            }
            None => false,
        }
    } else {
        n_missing > 0
    };
    Dataset::new(records, known)
}

fn parse_json<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            parse_err(path, inner.line() as u64, inner.to_string())
        } else {
            Error::Config { key, message: inner.to_string() }
        }
    })
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::config("schema_version", format!("expected {SCHEMA_VERSION}, got {v}")));
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentFile {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomFile {
    pub prob: f64,
    pub location: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureFile {
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub components: Vec<ComponentFile>,
    #[serde(default)]
    pub atoms: Vec<AtomFile>,
}

impl MixtureFile {
    pub fn to_model(&self) -> Result<MixtureModel<f64>> {
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let eta = GaussianNatural::from_mean_sd(c.mean, c.sd)
                    .map_err(|e| Error::config(format!("observed.components[{k}]"), e.to_string()))?;
                Ok(Component { weight: c.weight, eta })
            })
            .collect::<Result<Vec<_>>>()?;
        let atoms = self.atoms.iter().map(|a| Atom { prob: a.prob, location: a.location }).collect();
        MixtureModel::new(self.lambda, components, atoms).map_err(|e| Error::config("observed", e.to_string()))
    }
}

/// Mechanism as written in a config; `b0` may be left out when `q` is given instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MechanismFile {
    LinearLogit { b0: Option<f64>, b1: f64 },
    QuadraticLogit { b0: Option<f64>, b1: f64, b2: f64 },
    AsymptoteLogit { b0: Option<f64>, b1: f64, kappa: f64 },
}

impl MechanismFile {
    fn split(self) -> (MechanismSpec<f64>, Option<f64>) {
        match self {
            MechanismFile::LinearLogit { b0, b1 } => (MechanismSpec::LinearLogit { b0: 0.0, b1 }, b0),
            MechanismFile::QuadraticLogit { b0, b1, b2 } => (MechanismSpec::QuadraticLogit { b0: 0.0, b1, b2 }, b0),
            MechanismFile::AsymptoteLogit { b0, b1, kappa } => {
                (MechanismSpec::AsymptoteLogit { b0: 0.0, b1, kappa }, b0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessFile {
    Tukey { observed: MixtureFile, mechanism: MechanismFile, q: Option<f64> },
    SelectionNormal { mu: f64, sigma: f64, b0: f64, b1: f64 },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfigFile {
    pub schema_version: u32,
    pub n: usize,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub record_missing_values: bool,
    pub process: ProcessFile,
}

/// Builds the joint model a config describes.
///
/// With `q` the intercept is solved to reproduce it; with `b0` the observed fraction follows.
/// Giving both stores the pair unchecked, which [`TukeyModel::validate`] will flag if they
/// disagree.
pub fn tukey_model_from(observed: &MixtureFile, mechanism: MechanismFile, q: Option<f64>) -> Result<TukeyModel<f64>> {
    let obs = observed.to_model()?;
    let (spec, b0) = mechanism.split();
    let mech = canonicalize(&spec).map_err(|e| Error::config("process.mechanism", e.to_string()))?;
    match (b0, q) {
        (None, Some(q)) => {
            let alpha0 = solve_intercept(&obs, &mech, q)?;
            let mech = mech.with_alpha0(alpha0);
            let q = q_closed_form(&obs, &mech)?;
            Ok(TukeyModel { obs, mech, q })
        }
        (Some(b0), q) => {
            let mech = canonicalize(&spec.with_b0(b0))?;
            let q = match q {
                Some(q) => q,
                None => q_closed_form(&obs, &mech)?,
            };
            Ok(TukeyModel { obs, mech, q })
        }
        (None, None) => Err(Error::config("process", "one of `q` or `mechanism.b0` is required")),
    }
}

impl SimConfigFile {
    pub fn to_config(&self) -> Result<SimConfig> {
        check_version(self.schema_version)?;
        if self.n == 0 {
            return Err(Error::config("n", "must be positive"));
        }
        let process = match &self.process {
            ProcessFile::Tukey { observed, mechanism, q } => Process::Tukey(tukey_model_from(observed, *mechanism, *q)?),
            ProcessFile::SelectionNormal { mu, sigma, b0, b1 } => {
                if !(*sigma > 0.0) {
                    return Err(Error::config("process.sigma", "must be positive"));
                }
                Process::SelectionNormal { mu: *mu, sigma: *sigma, b0: *b0, b1: *b1 }
            }
        };
        Ok(SimConfig { process, n: self.n, seed: self.seed, record_missing_values: self.record_missing_values })
    }
}

/// Reads a simulation config. The model is built but not validated, so callers can report
/// violations themselves.
pub fn read_sim_config(path: &Path) -> Result<SimConfig> {
    parse_sim_config(&fs::read_to_string(path)?, path)
}

/// Parses a simulation config document; `origin` only labels syntax errors.
pub fn parse_sim_config(text: &str, origin: &Path) -> Result<SimConfig> {
    let file: SimConfigFile = parse_json(text, origin)?;
    file.to_config()
}

/// Optional MCMC settings; unset fields fall back to defaults or command-line values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcOverrides {
    pub chains: Option<usize>,
    pub iterations: Option<usize>,
    pub burnin: Option<usize>,
    pub thin: Option<usize>,
    pub seed: Option<u64>,
    pub mechanism_seed: Option<u64>,
}

impl McmcOverrides {
    /// Fields set in `other` win.
    pub fn merged(self, other: McmcOverrides) -> Self {
        Self {
            chains: other.chains.or(self.chains),
            iterations: other.iterations.or(self.iterations),
            burnin: other.burnin.or(self.burnin),
            thin: other.thin.or(self.thin),
            seed: other.seed.or(self.seed),
            mechanism_seed: other.mechanism_seed.or(self.mechanism_seed),
        }
    }

    /// A complete config; the seed has no default.
    pub fn resolve(self) -> Result<McmcConfig> {
        let seed = self.seed.ok_or_else(|| Error::config("mcmc.seed", "a seed is required"))?;
        let base = McmcConfig::with_seed(seed);
        let cfg = McmcConfig {
            chains: self.chains.unwrap_or(base.chains),
            iterations: self.iterations.unwrap_or(base.iterations),
            burnin: self.burnin.unwrap_or(base.burnin),
            thin: self.thin.unwrap_or(base.thin),
            seed,
            mechanism_seed: self.mechanism_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfigFile {
    pub schema_version: u32,
    pub mixture: MixturePrior,
    pub mechanism: MechanismPrior,
    #[serde(default)]
    pub q_prior: BetaPrior,
    #[serde(default)]
    pub mcmc: McmcOverrides,
}

/// Reads and validates a prior config with its optional MCMC block.
pub fn read_prior_config(path: &Path) -> Result<(PriorConfig, McmcOverrides)> {
    parse_prior_config(&fs::read_to_string(path)?, path)
}

pub fn parse_prior_config(text: &str, origin: &Path) -> Result<(PriorConfig, McmcOverrides)> {
    let file: PriorConfigFile = parse_json(text, origin)?;
    check_version(file.schema_version)?;
    let prior = PriorConfig { mixture: file.mixture, mechanism: file.mechanism, q_prior: file.q_prior };
    prior.validate()?;
    Ok((prior, file.mcmc))
}

/// Reads a standalone MCMC config document.
pub fn read_mcmc_config(path: &Path) -> Result<McmcConfig> {
    let value: serde_json::Value = parse_json(&fs::read_to_string(path)?, path)?;
    let mut map = match value {
        serde_json::Value::Object(m) => m,
        _ => return Err(Error::config("", "expected an object")),
    };
    let version = map.remove("schema_version").ok_or_else(|| Error::config("schema_version", "missing field"))?;
    check_version(serde_json::from_value(version).map_err(|e| Error::config("schema_version", e.to_string()))?)?;
    let settings: McmcOverrides = parse_json(&serde_json::Value::Object(map).to_string(), path)?;
    settings.resolve()
}

pub fn write_truth(truth: &TruthRecord, path: &Path) -> Result<()> {
    fs::write(path, to_json(truth)?)?;
    Ok(())
}

pub fn read_truth(path: &Path) -> Result<TruthRecord> {
    parse_json(&fs::read_to_string(path)?, path)
}

pub fn write_summary(summary: &Summary, path: &Path) -> Result<()> {
    fs::write(path, to_json(summary)?)?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    parse_json(&fs::read_to_string(path)?, path)
}

/// `chain,iteration,<names>` with names in sorted order.
pub fn write_table(chain: &[usize], iteration: &[usize], columns: &BTreeMap<String, Vec<f64>>, path: &Path) -> Result<()> {
    let mut out = String::from("chain,iteration");
    for name in columns.keys() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..chain.len() {
        write!(out, "{},{}", chain[i], iteration[i]).unwrap();
        for col in columns.values() {
            out.push(',');
            out.push_str(&fmt_f64(col[i]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_draws(draws: &PosteriorDraws, path: &Path) -> Result<()> {
    write_table(&draws.chain, &draws.iteration, &draws.columns, path)
}

pub fn read_draws(path: &Path) -> Result<PosteriorDraws> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 || header[0] != "chain" || header[1] != "iteration" {
        return Err(parse_err(path, 1, "header must start with `chain,iteration`"));
    }
    let names = &header[2..];
    if names.windows(2).any(|w| w[0] >= w[1]) {
        return Err(parse_err(path, 1, "parameter columns must be unique and sorted"));
    }
    let mut chain = Vec::new();
    let mut iteration = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let int = |s: &str| s.parse::<usize>().map_err(|_| parse_err(path, line, format!("bad index `{s}`")));
        chain.push(int(&row[0])?);
        iteration.push(int(&row[1])?);
        for (j, field) in row.iter().skip(2).enumerate() {
            cols[j].push(field.parse().map_err(|_| parse_err(path, line, format!("bad number `{field}`")))?);
        }
    }
    PosteriorDraws::new(chain, iteration, names.iter().cloned().zip(cols).collect())
}
