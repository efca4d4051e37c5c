//! TOML configuration. Unknown keys are rejected; relative paths resolve
//! against the directory of the configuration file.

use std::path::{Path, PathBuf};

use netmiss_core::estimate::EstimationConfig;
use netmiss_core::experiment::{Representation, SweepParam};
use netmiss_core::missmodels::PresetOptions;
use netmiss_core::sampler::{Proposal, SamplerConfig};
use netmiss_core::{ModelSpec, Term};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub missingness: MissingnessConfig,
    #[serde(default)]
    pub estimation: EstimationSettings,
    #[serde(default)]
    pub sweep: SweepSettings,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub id: Option<String>,
    pub edges: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
    pub numeric: Option<Vec<String>>,
    pub categorical: Option<Vec<String>>,
    pub synthetic: Option<SyntheticConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    /// `clustered`, `bernoulli` or `hub_heavy`.
    pub kind: String,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    pub p: Option<f64>,
    pub hubs: Option<usize>,
    pub p_hub: Option<f64>,
    pub p_base: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub terms: Vec<String>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { terms: vec!["edges".into(), "altkstar(2)".into(), "gwesp(log(2))".into()] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissingnessConfig {
    pub models: Vec<String>,
    pub fractions: Vec<f64>,
    pub representations: Vec<String>,
    pub replicates: usize,
    /// Burn-in of the ERGM missingness sampler; defaults to `10^4 * N`.
    pub burn_in: Option<usize>,
    pub hbern_p: f64,
    pub beta_sd: f64,
    pub latent_dim: usize,
    pub latent_alpha: f64,
    pub latent_gamma: f64,
    pub blocks: usize,
    pub p_within: f64,
    pub p_between: f64,
}

impl Default for MissingnessConfig {
    fn default() -> Self {
        let o = PresetOptions::default();
        MissingnessConfig {
            models: vec!["hbern".into(), "latent".into(), "ergm_mcar_t3".into(), "ergm_mnar_t3".into()],
            fractions: vec![0.10, 0.35, 0.60],
            representations: vec!["miss".into(), "zero".into()],
            replicates: 50,
            burn_in: None,
            hbern_p: o.hbern_p,
            beta_sd: o.beta_sd,
            latent_dim: o.latent_dim,
            latent_alpha: o.latent_alpha,
            latent_gamma: o.latent_gamma,
            blocks: o.blocks,
            p_within: o.p_within,
            p_between: o.p_between,
        }
    }
}

impl MissingnessConfig {
    pub fn preset_options(&self) -> PresetOptions {
        PresetOptions {
            hbern_p: self.hbern_p,
            beta_sd: self.beta_sd,
            latent_dim: self.latent_dim,
            latent_alpha: self.latent_alpha,
            latent_gamma: self.latent_gamma,
            blocks: self.blocks,
            p_within: self.p_within,
            p_between: self.p_between,
        }
    }

    pub fn representations(&self) -> Result<Vec<Representation>, ConfigError> {
        self.representations.iter().map(|r| parse_representation(r)).collect()
    }

    pub fn sampler(&self, n: usize) -> SamplerConfig {
        let mut s = SamplerConfig::for_vertices(n);
        s.proposal = Proposal::Swap;
        if let Some(b) = self.burn_in {
            s.burn_in = b;
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationSettings {
    /// Defaults to `10^4 * N` proposals.
    pub burn_in: Option<usize>,
    /// Defaults to `N` proposals.
    pub thin: Option<usize>,
    pub draws: usize,
    pub final_draws: usize,
    pub final_rounds: usize,
    pub max_iterations: usize,
    pub t_ratio_tol: f64,
    pub ess_target: f64,
    pub condition_limit: f64,
}

impl Default for EstimationSettings {
    fn default() -> Self {
        let e = EstimationConfig::for_vertices(2);
        EstimationSettings {
            burn_in: None,
            thin: None,
            draws: e.sampler.n_draws,
            final_draws: e.final_draws,
            final_rounds: e.final_rounds,
            max_iterations: e.max_iterations,
            t_ratio_tol: e.t_ratio_tol,
            ess_target: e.ess_target,
            condition_limit: e.condition_limit,
        }
    }
}

impl EstimationSettings {
    pub fn config(&self, n: usize) -> EstimationConfig {
        let mut e = EstimationConfig::for_vertices(n);
        if let Some(b) = self.burn_in {
            e.sampler.burn_in = b;
        }
        if let Some(t) = self.thin {
            e.sampler.thin = t;
        }
        e.sampler.n_draws = self.draws;
        e.final_draws = self.final_draws;
        e.final_rounds = self.final_rounds;
        e.max_iterations = self.max_iterations;
        e.t_ratio_tol = self.t_ratio_tol;
        e.ess_target = self.ess_target;
        e.condition_limit = self.condition_limit;
        e
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSettings {
    /// `theta1` (entrainment) or `theta2` (degree covariate).
    pub param: String,
    pub levels: Vec<f64>,
    pub fraction: f64,
    pub replicates: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            param: "theta1".into(),
            levels: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            fraction: 0.35,
            replicates: 50,
        }
    }
}

pub fn parse_sweep_param(s: &str) -> Result<SweepParam, ConfigError> {
    match s {
        "theta1" | "entrainment" => Ok(SweepParam::Theta1Entrainment),
        "theta2" | "degreecov" => Ok(SweepParam::Theta2DegreeCov),
        other => Err(invalid(format!("unknown sweep parameter `{other}` (theta1 or theta2)"))),
    }
}

pub fn parse_representation(s: &str) -> Result<Representation, ConfigError> {
    match s {
        "miss" => Ok(Representation::Miss),
        "zero" => Ok(Representation::Zero),
        other => Err(invalid(format!("unknown representation `{other}` (miss or zero)"))),
    }
}

fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix("log(").and_then(|r| r.strip_suffix(')')) {
        return inner.trim().parse::<f64>().ok().filter(|x| *x > 0.0).map(f64::ln);
    }
    s.parse::<f64>().ok()
}

/// Parses `edges`, `altkstar(2)`, `gwdegree(0.69)`, `gwesp(log(2))`,
/// `nodecov(attr)`, `absdiff(attr)` or `nodematch(attr)`.
pub fn parse_term(s: &str) -> Result<Term, ConfigError> {
    let s = s.trim();
    if s == "edges" {
        return Ok(Term::Edges);
    }
    let (name, arg) = s
        .split_once('(')
        .and_then(|(n, rest)| rest.strip_suffix(')').map(|a| (n.trim(), a.trim())))
        .ok_or_else(|| invalid(format!("cannot parse term `{s}`")))?;
    let number = || parse_number(arg).ok_or_else(|| invalid(format!("bad parameter in term `{s}`")));
    Ok(match name {
        "altkstar" => Term::AltKStar(number()?),
        "gwdegree" => Term::GwDegree(number()?),
        "gwesp" => Term::Gwesp(number()?),
        "nodecov" => Term::NodeCovSum(arg.to_string()),
        "absdiff" => Term::AbsDiff(arg.to_string()),
        "nodematch" => Term::NodeMatch(arg.to_string()),
        _ => return Err(invalid(format!("unknown term `{name}`"))),
    })
}

pub fn parse_spec(terms: &[String]) -> Result<ModelSpec, ConfigError> {
    let terms = terms.iter().map(|t| parse_term(t)).collect::<Result<Vec<_>, _>>()?;
    ModelSpec::with_terms(terms).map_err(|e| invalid(e.to_string()))
}

/// Comma-separated list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| invalid(format!("`{x}` is not a number")))).collect()
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Config, ConfigError> {
        let mut cfg: Config = toml::from_str(text)
            .map_err(|e| ConfigError::Syntax { path: path.to_path_buf(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        resolve(&mut cfg.network.edges);
        resolve(&mut cfg.network.attributes);
        resolve(&mut cfg.out);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.to_path_buf(), source: e })?;
        Config::from_toml(&text, path)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    /// Checks everything that does not need the network on disk.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match (&self.network.edges, &self.network.synthetic) {
            (Some(_), Some(_)) => return Err(invalid("network: give either `edges` or `synthetic`, not both")),
            (None, None) => return Err(invalid("network: `edges` or `synthetic` required")),
            _ => {}
        }
        if let Some(s) = &self.network.synthetic {
            if !["clustered", "bernoulli", "hub_heavy"].contains(&s.kind.as_str()) {
                return Err(invalid(format!("unknown synthetic network kind `{}`", s.kind)));
            }
            if s.n < 3 {
                return Err(invalid("synthetic network needs n >= 3"));
            }
        }
        parse_spec(&self.model.terms)?;
        let m = &self.missingness;
        for name in &m.models {
            if !netmiss_core::missmodels::PRESETS.contains(&name.as_str()) {
                return Err(invalid(format!("unknown missingness model `{name}`")));
            }
        }
        if m.fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(invalid("fractions must lie in (0, 1)"));
        }
        m.representations()?;
        if m.replicates == 0 || self.sweep.replicates == 0 {
            return Err(invalid("replicates must be at least 1"));
        }
        parse_sweep_param(&self.sweep.param)?;
        if self.sweep.levels.is_empty() || !(self.sweep.fraction > 0.0 && self.sweep.fraction < 1.0) {
            return Err(invalid("sweep needs levels and a fraction in (0, 1)"));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads must be at least 1"));
        }
        self.estimation.config(3).validate().map_err(|e| invalid(e.to_string()))
    }

    /// SHA-256 of the effective configuration, hex encoded.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("configuration serialises");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_parse() {
        assert_eq!(parse_term("edges").unwrap(), Term::Edges);
        assert_eq!(parse_term("altkstar(2)").unwrap(), Term::AltKStar(2.0));
        assert_eq!(parse_term("gwesp(log(2))").unwrap(), Term::Gwesp(std::f64::consts::LN_2));
        assert_eq!(parse_term("nodematch(Prison)").unwrap(), Term::NodeMatch("Prison".into()));
        assert!(parse_term("triangles").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = Config::from_toml("seed = 1\nbogus = 2\n", Path::new("c.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { .. }));
        let err = Config::from_toml("[missingness]\nfraction = [0.1]\n", Path::new("c.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { .. }));
    }

    #[test]
    fn relative_paths_and_defaults() {
        let cfg = Config::from_toml("[network]\nedges = \"net.csv\"\n", Path::new("/data/run/c.toml")).unwrap();
        assert_eq!(cfg.network.edges.as_deref(), Some(Path::new("/data/run/net.csv")));
        cfg.validate().unwrap();
        assert_eq!(cfg.missingness.fractions, [0.10, 0.35, 0.60]);
        assert_eq!(parse_spec(&cfg.model.terms).unwrap(), ModelSpec::structural());
        assert_eq!(cfg.hash().len(), 64);
    }
}
