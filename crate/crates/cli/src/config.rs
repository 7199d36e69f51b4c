//! Experiment configuration: flat `key = value` text, one dotted key per
//! line, with `#` comments. Command-line `--set key=value` pairs are
//! applied on top, in order.
//!
//! ```text
//! data.preset = data3        # or data.csv = path/to/x.csv
//! data.header = true         # csv only
//! data.labels = truth.csv    # optional reference partition for csv input
//! prior.family = sparse
//! prior.m0_offdiag = 30      # family-specific overrides, see PRIOR_KEYS
//! mcmc.burn_in = 10000
//! mcmc.main = 6000
//! mcmc.thin = 1
//! mcmc.k_init = 30
//! mcmc.label_switch = true
//! alpha.shape = 2
//! alpha.rate = 1
//! run.replicates = 1         # simulated data sets, preset only
//! run.seeds = 1,2,3          # chain seeds, distinct
//! run.workers = 4
//! run.k_max = 20
//! output.dir = runs/data3
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dpmix_core::priors::{Hiw1Spec, Hiw2Spec, IndependentSpec, IwSpec, LogSpec, SeparationSpec, SparseSpec};
use dpmix_core::{FeatureMatrix, GammaPrior, McmcConfig, ModelSpec, Preset, PriorFamily, PriorSpec};

use crate::error::{CliError, Result};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "DPMIX_OUTPUT_ROOT";

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Preset(Preset),
    Csv {
        path: PathBuf,
        header: bool,
        labels: Option<PathBuf>,
    },
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub family: PriorFamily,
    /// `prior.*` overrides, keyed without the prefix.
    pub prior_overrides: BTreeMap<String, f64>,
    pub mcmc: McmcConfig,
    pub alpha: GammaPrior,
    pub replicates: usize,
    pub seeds: Vec<u64>,
    pub workers: usize,
    pub k_max: usize,
    pub output: PathBuf,
}

/// Overridable hyperparameters per family.
pub const PRIOR_KEYS: [(PriorFamily, &[&str]); 7] = [
    (PriorFamily::InverseWishart, &["df"]),
    (PriorFamily::Hiw1, &["kappa1", "alpha_kappa0", "beta_kappa0"]),
    (PriorFamily::Hiw2, &["alpha_delta", "alpha_eps0", "beta_eps0"]),
    (
        PriorFamily::Separation,
        &["alpha_kappa_r", "beta_kappa_r", "alpha_s", "alpha0"],
    ),
    (PriorFamily::Log, &["t_df"]),
    (PriorFamily::Sparse, &["m0_diag", "m0_offdiag"]),
    (PriorFamily::Independent, &["shape"]),
];

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Splits config text into `(key, value)` pairs.
pub fn parse_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        pairs.push(parse_pair(line).map_err(|_| config_err(format!("line {}: expected key = value", i + 1)))?);
    }
    Ok(pairs)
}

/// Parses one `key=value` override.
pub fn parse_pair(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| config_err(format!("expected key=value, got {s:?}")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(config_err(format!("empty key in {s:?}")));
    }
    Ok((k.to_string(), v.to_string()))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| config_err(format!("{key}: cannot parse {v:?}")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(config_err(format!("{key}: expected true or false, got {v:?}"))),
    }
}

impl ExperimentConfig {
    /// Builds a validated configuration from pairs, later pairs winning.
    /// `output_root` is used when `output.dir` is not given.
    pub fn from_pairs(pairs: &[(String, String)], output_root: &Path) -> Result<Self> {
        let mut preset = None;
        let mut csv = None;
        let mut header = false;
        let mut labels = None;
        let mut family = None;
        let mut prior_overrides = BTreeMap::new();
        let mut mcmc = McmcConfig::default();
        let mut alpha = GammaPrior::default();
        let mut replicates = 1;
        let mut seeds = vec![1];
        let mut workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        let mut k_max = 20;
        let mut output = None;

        for (key, v) in pairs {
            let key = key.as_str();
            match key {
                "data.preset" => {
                    preset = Some(Preset::parse(v).ok_or_else(|| config_err(format!("unknown preset {v:?}")))?)
                }
                "data.csv" => csv = Some(PathBuf::from(v)),
                "data.header" => header = boolean(key, v)?,
                "data.labels" => labels = Some(PathBuf::from(v)),
                "prior.family" => {
                    family = Some(
                        v.parse::<PriorFamily>()
                            .map_err(|e| config_err(format!("{key}: {e}")))?,
                    )
                }
                "mcmc.burn_in" => mcmc.burn_in = num(key, v)?,
                "mcmc.main" => mcmc.main = num(key, v)?,
                "mcmc.thin" => mcmc.thin = num(key, v)?,
                "mcmc.k_init" => mcmc.init.k_init = num(key, v)?,
                "mcmc.label_switch" => mcmc.label_switch = boolean(key, v)?,
                "alpha.shape" => alpha.shape = num(key, v)?,
                "alpha.rate" => alpha.rate = num(key, v)?,
                "run.replicates" => replicates = num(key, v)?,
                "run.seeds" => seeds = v.split(',').map(|s| num(key, s.trim())).collect::<Result<Vec<u64>>>()?,
                "run.workers" => workers = num(key, v)?,
                "run.k_max" => k_max = num(key, v)?,
                "output.dir" => output = Some(PathBuf::from(v)),
                _ => match key.strip_prefix("prior.") {
                    Some(name) => {
                        prior_overrides.insert(name.to_string(), num(key, v)?);
                    }
                    None => return Err(config_err(format!("unknown key {key:?}"))),
                },
            }
        }

        let source = match (preset, csv) {
            (Some(p), None) => DataSource::Preset(p),
            (None, Some(path)) => DataSource::Csv { path, header, labels },
            (None, None) => return Err(config_err("one of data.preset or data.csv is required")),
            (Some(_), Some(_)) => return Err(config_err("data.preset and data.csv are mutually exclusive")),
        };
        let family = family.ok_or_else(|| config_err("prior.family is required"))?;
        let output = output.unwrap_or_else(|| {
            let name = match &source {
                DataSource::Preset(p) => p.name().to_string(),
                DataSource::Csv { path, .. } => path
                    .file_stem()
                    .map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned()),
            };
            output_root.join(format!("{name}_{family}"))
        });
        let cfg = Self {
            source,
            family,
            prior_overrides,
            mcmc,
            alpha,
            replicates,
            seeds,
            workers,
            k_max,
            output,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let allowed = PRIOR_KEYS
            .iter()
            .find(|(f, _)| *f == self.family)
            .map_or(&[][..], |(_, k)| *k);
        for key in self.prior_overrides.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(config_err(format!(
                    "prior.{key} does not apply to the {} prior (expected one of {allowed:?})",
                    self.family
                )));
            }
        }
        if self.mcmc.main == 0 || self.mcmc.thin == 0 || self.mcmc.init.k_init == 0 {
            return Err(config_err("mcmc.main, mcmc.thin and mcmc.k_init must be positive"));
        }
        if !(self.alpha.shape > 0.0 && self.alpha.rate > 0.0) {
            return Err(config_err("alpha.shape and alpha.rate must be positive"));
        }
        if self.replicates == 0 || self.workers == 0 || self.k_max == 0 {
            return Err(config_err("run.replicates, run.workers and run.k_max must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(config_err("run.seeds is empty"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_err("run.seeds must be distinct"));
        }
        if matches!(self.source, DataSource::Csv { .. }) && self.replicates != 1 {
            return Err(config_err("run.replicates applies to presets only"));
        }
        Ok(())
    }

    /// Default hyperparameters for the data with the overrides applied.
    pub fn model_spec(&self, data: &FeatureMatrix) -> Result<ModelSpec> {
        let prior = apply_overrides(PriorSpec::defaults(self.family, data)?, &self.prior_overrides)
            .map_err(|e| config_err(format!("prior override: {e}")))?;
        let mut model = ModelSpec::from_data(prior, data)?;
        model.alpha = self.alpha;
        Ok(model)
    }
}

fn apply_overrides(prior: PriorSpec, o: &BTreeMap<String, f64>) -> dpmix_core::Result<PriorSpec> {
    if o.is_empty() {
        return Ok(prior);
    }
    let get = |k: &str, default: f64| o.get(k).copied().unwrap_or(default);
    Ok(match prior {
        PriorSpec::InverseWishart(s) => {
            let df = get("df", s.df);
            PriorSpec::InverseWishart(IwSpec::new(s.scale.scaled(df / s.df), df)?)
        }
        PriorSpec::Hiw1(s) => PriorSpec::Hiw1(Hiw1Spec::new(
            s.r1.clone(),
            get("kappa1", s.kappa1),
            get("alpha_kappa0", s.alpha_kappa0),
            get("beta_kappa0", s.beta_kappa0),
        )?),
        PriorSpec::Hiw2(s) => PriorSpec::Hiw2(Hiw2Spec::new(
            s.g.clone(),
            get("alpha_delta", s.alpha_delta),
            get("alpha_eps0", s.alpha_eps0),
            get("beta_eps0", s.beta_eps0),
        )?),
        PriorSpec::Separation(s) => PriorSpec::Separation(SeparationSpec::new(
            s.r_r.clone(),
            get("alpha_kappa_r", s.alpha_kappa_r),
            get("beta_kappa_r", s.beta_kappa_r),
            get("alpha_s", s.alpha_s),
            get("alpha0", s.alpha0),
            s.beta0.clone(),
        )?),
        PriorSpec::Log(s) => {
            let dim = s.dim();
            PriorSpec::Log(LogSpec::new(
                dim,
                s.mu_a.clone(),
                s.sigma_a.clone(),
                get("t_df", s.t_df),
                dim,
            )?)
        }
        PriorSpec::Sparse(s) => {
            let dim = s.m0.dim();
            let diag = get("m0_diag", s.m0.get(0, 0));
            let off = if dim > 1 { s.m0.get(1, 0) } else { 1.0 };
            PriorSpec::Sparse(SparseSpec::uniform(dim, diag, get("m0_offdiag", off))?)
        }
        PriorSpec::Independent(s) => {
            let shape = vec![get("shape", s.shape[0]); s.shape.len()];
            PriorSpec::Independent(IndependentSpec::new(shape, s.scale.clone())?)
        }
    })
}

/// Reads a config file, applies overrides and validates.
pub fn load(path: Option<&Path>, overrides: &[String], output_root: &Path) -> Result<ExperimentConfig> {
    let mut pairs = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
            parse_text(&text)?
        }
        None => Vec::new(),
    };
    for s in overrides {
        pairs.push(parse_pair(s)?);
    }
    ExperimentConfig::from_pairs(&pairs, output_root)
}
