//! Run configuration: plain-text `key = value` files, command-line
//! overrides, a canonical serialization and its hash.

use std::path::{Path, PathBuf};

use clap::Args;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use sha2::{Digest, Sha256};
use thiserror::Error;
use thinsieve::congruence::DEFAULT_ELEMENT_BUDGET;
use thinsieve::group::{GroupElement, GroupError, GroupPresentation, DEFAULT_CUSP_WORD_CAP};
use thinsieve::orbit::{DEFAULT_BETA, DEFAULT_NODE_CAP};
use thinsieve::ratio::{self, parse_rational};
use thinsieve::spectral::gap_preset;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid {key}: {message}")]
    Invalid { key: &'static str, message: String },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, message: message.into() }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub group: GroupPresentation,
    pub height: BigRational,
    /// 0 selects sharp weights.
    pub epsilon: BigRational,
    pub beta: f64,
    pub prime_bound: u64,
    pub level_q: Option<u64>,
    pub z: Option<f64>,
    /// Overrides the fitted growth exponent.
    pub delta: Option<f64>,
    /// Empty means "use the admissible R for δ̂ and θ".
    pub r_list: Vec<u32>,
    pub theta: String,
    pub node_cap: usize,
    pub element_budget: u128,
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            group: GroupPresentation::hecke4(),
            height: BigRational::from_integer(10_000.into()),
            epsilon: BigRational::zero(),
            beta: DEFAULT_BETA,
            prime_bound: 50,
            level_q: None,
            z: None,
            delta: None,
            r_list: Vec::new(),
            theta: "selberg_conj".into(),
            node_cap: DEFAULT_NODE_CAP,
            element_budget: DEFAULT_ELEMENT_BUDGET,
            out_dir: PathBuf::from("thinsieve-out"),
            cache_dir: PathBuf::from("thinsieve-out/cache"),
            workers: None,
        }
    }
}

/// Flags shared by every subcommand. Unset flags leave the config file (or
/// the defaults) untouched.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// Plain-text `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Preset name (`hecke4`, `sl2z`) or a presentation file.
    #[arg(long, global = true)]
    pub group: Option<String>,
    /// Height T, as a decimal or fraction (`1e4`, `3/2`).
    #[arg(long, global = true)]
    pub height: Option<String>,
    #[arg(long, global = true)]
    pub epsilon: Option<String>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub prime_bound: Option<u64>,
    /// Sieve level Q, replacing the theoretical one.
    #[arg(long, global = true)]
    pub level_q: Option<u64>,
    /// Sifting range z.
    #[arg(long, global = true)]
    pub z: Option<f64>,
    /// Growth exponent, replacing the fitted one.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Comma-separated list of R values.
    #[arg(long, global = true)]
    pub r_list: Option<String>,
    /// Spectral gap preset: gamburd, kim_sarnak or selberg_conj.
    #[arg(long, global = true)]
    pub theta: Option<String>,
    #[arg(long, global = true)]
    pub node_cap: Option<usize>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

fn parse_r_list(value: &str) -> Result<Vec<u32>, ConfigError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut list: Vec<u32> = value
        .split(',')
        .map(|t| t.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| invalid("r_list", format!("`{value}` is not a comma-separated list of integers")))?;
    list.sort_unstable();
    list.dedup();
    Ok(list)
}

fn parse_height(value: &str) -> Result<BigRational, ConfigError> {
    parse_rational(value).map_err(|e| invalid("height", e.to_string()))
}

fn parse_epsilon(value: &str) -> Result<BigRational, ConfigError> {
    parse_rational(value).map_err(|e| invalid("epsilon", e.to_string()))
}

fn parse_num<T: std::str::FromStr>(key: &'static str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| invalid(key, format!("cannot parse `{value}`")))
}

fn parse_optional<T: std::str::FromStr>(key: &'static str, value: &str) -> Result<Option<T>, ConfigError> {
    if value == "none" {
        Ok(None)
    } else {
        parse_num(key, value).map(Some)
    }
}

/// Resolves `--group`: a preset name, or else a presentation file.
pub fn resolve_group(spec: &str) -> Result<GroupPresentation, ConfigError> {
    match GroupPresentation::preset(spec) {
        Ok(p) => Ok(p),
        Err(GroupError::UnknownPreset(_)) if Path::new(spec).is_file() => {
            let text = std::fs::read_to_string(spec).map_err(|source| ConfigError::Io { path: spec.into(), source })?;
            Ok(GroupPresentation::parse(&text)?)
        }
        Err(e) => Err(e.into()),
    }
}

fn fmt_optional<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |x| x.to_string())
}

impl RunConfig {
    /// Parses a config file on top of the defaults. Group keys are
    /// `group = <name>`, optionally followed by `cusp_width` and `generator`
    /// lines for a presentation given inline.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut group_name: Option<String> = None;
        let mut cusp_width: Option<u64> = None;
        let mut generators = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let value = value.trim();
            match key.trim() {
                "group" => group_name = Some(value.to_string()),
                "cusp_width" => cusp_width = Some(parse_num("cusp_width", value)?),
                "generator" => {
                    let nums: Vec<i128> = value
                        .split_whitespace()
                        .map(|t| t.parse())
                        .collect::<Result<_, _>>()
                        .map_err(|_| ConfigError::Syntax { line, message: format!("bad generator `{value}`") })?;
                    let [a, b, c, d] = nums[..] else {
                        return Err(ConfigError::Syntax { line, message: "generator needs 4 integers".into() });
                    };
                    generators.push(GroupElement::new(a, b, c, d)?);
                }
                "height" => cfg.height = parse_height(value)?,
                "epsilon" => cfg.epsilon = parse_epsilon(value)?,
                "beta" => cfg.beta = parse_num("beta", value)?,
                "prime_bound" => cfg.prime_bound = parse_num("prime_bound", value)?,
                "level_q" => cfg.level_q = parse_optional("level_q", value)?,
                "z" => cfg.z = parse_optional("z", value)?,
                "delta" => cfg.delta = parse_optional("delta", value)?,
                "r_list" => cfg.r_list = parse_r_list(value)?,
                "theta" => cfg.theta = value.to_string(),
                "node_cap" => cfg.node_cap = parse_num("node_cap", value)?,
                "element_budget" => cfg.element_budget = parse_num("element_budget", value)?,
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                "cache_dir" => cfg.cache_dir = PathBuf::from(value),
                "workers" => cfg.workers = parse_optional("workers", value)?,
                other => return Err(ConfigError::Syntax { line, message: format!("unknown key `{other}`") }),
            }
        }
        cfg.group = match (group_name, generators.is_empty()) {
            (Some(name), true) => resolve_group(&name)?,
            (None, true) => cfg.group,
            (name, false) => {
                let width = cusp_width.ok_or_else(|| invalid("cusp_width", "required with inline generators"))?;
                let name = name.unwrap_or_else(|| "custom".into());
                GroupPresentation::new(name, generators, width, DEFAULT_CUSP_WORD_CAP)?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads `--config` if given, applies the remaining flags, and validates.
    pub fn from_overrides(o: &Overrides) -> Result<Self, ConfigError> {
        let mut cfg = match &o.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
                Self::parse(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(g) = &o.group {
            cfg.group = resolve_group(g)?;
        }
        if let Some(h) = &o.height {
            cfg.height = parse_height(h)?;
        }
        if let Some(e) = &o.epsilon {
            cfg.epsilon = parse_epsilon(e)?;
        }
        if let Some(b) = o.beta {
            cfg.beta = b;
        }
        if let Some(p) = o.prime_bound {
            cfg.prime_bound = p;
        }
        if o.level_q.is_some() {
            cfg.level_q = o.level_q;
        }
        if o.z.is_some() {
            cfg.z = o.z;
        }
        if o.delta.is_some() {
            cfg.delta = o.delta;
        }
        if let Some(r) = &o.r_list {
            cfg.r_list = parse_r_list(r)?;
        }
        if let Some(t) = &o.theta {
            cfg.theta = t.clone();
        }
        if let Some(n) = o.node_cap {
            cfg.node_cap = n;
        }
        if let Some(d) = &o.out_dir {
            cfg.out_dir = d.clone();
        }
        if let Some(d) = &o.cache_dir {
            cfg.cache_dir = d.clone();
        }
        if o.workers.is_some() {
            cfg.workers = o.workers;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.height.is_positive() {
            return Err(invalid("height", "must be positive"));
        }
        let half = BigRational::new(1.into(), 2.into());
        if self.epsilon.is_negative() || self.epsilon >= half {
            return Err(invalid("epsilon", "must be 0 (sharp) or lie in (0, 1/2)"));
        }
        if !(self.beta >= 1.0 && self.beta.is_finite()) {
            return Err(invalid("beta", "must be a finite number at least 1"));
        }
        if self.prime_bound < 2 {
            return Err(invalid("prime_bound", "must be at least 2"));
        }
        if self.level_q == Some(0) {
            return Err(invalid("level_q", "must be at least 1"));
        }
        if let Some(z) = self.z {
            if !(z >= 2.0 && z.is_finite()) {
                return Err(invalid("z", "must be a finite number at least 2"));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d <= 1.0) {
                return Err(invalid("delta", "must lie in (0, 1]"));
            }
        }
        if self.r_list.contains(&0) {
            return Err(invalid("r_list", "R must be positive"));
        }
        if gap_preset(&self.theta).is_none() {
            return Err(invalid("theta", format!("unknown preset `{}`", self.theta)));
        }
        if self.node_cap == 0 {
            return Err(invalid("node_cap", "must be positive"));
        }
        if self.element_budget.is_zero() {
            return Err(invalid("element_budget", "must be positive"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be positive"));
        }
        Ok(())
    }

    /// θ of the configured preset.
    pub fn theta_value(&self) -> f64 {
        gap_preset(&self.theta).map(|p| p.theta_f64()).unwrap_or(f64::NAN)
    }

    /// The keys that determine artifact contents, in a fixed order.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("group = {}\n", self.group.name()));
        out.push_str(&format!("cusp_width = {}\n", self.group.cusp_width()));
        for g in self.group.generators() {
            let [a, b, c, d] = g.entries();
            out.push_str(&format!("generator = {a} {b} {c} {d}\n"));
        }
        out.push_str(&format!("height = {}\n", ratio::to_string(&self.height)));
        out.push_str(&format!("epsilon = {}\n", ratio::to_string(&self.epsilon)));
        out.push_str(&format!("beta = {}\n", self.beta));
        out.push_str(&format!("prime_bound = {}\n", self.prime_bound));
        out.push_str(&format!("level_q = {}\n", fmt_optional(&self.level_q)));
        out.push_str(&format!("z = {}\n", fmt_optional(&self.z)));
        out.push_str(&format!("delta = {}\n", fmt_optional(&self.delta)));
        let r: Vec<String> = self.r_list.iter().map(u32::to_string).collect();
        out.push_str(&format!("r_list = {}\n", r.join(",")));
        out.push_str(&format!("theta = {}\n", self.theta));
        out.push_str(&format!("node_cap = {}\n", self.node_cap));
        out.push_str(&format!("element_budget = {}\n", self.element_budget));
        out
    }

    /// Full serialization, including paths and the worker count.
    pub fn to_text(&self) -> String {
        let mut out = self.canonical_text();
        out.push_str(&format!("out_dir = {}\n", self.out_dir.display()));
        out.push_str(&format!("cache_dir = {}\n", self.cache_dir.display()));
        out.push_str(&format!("workers = {}\n", fmt_optional(&self.workers)));
        out
    }

    /// SHA-256 of [`RunConfig::canonical_text`]. Paths and the worker count
    /// do not change any output and are left out.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    pub fn height_f64(&self) -> f64 {
        ratio::to_f64(&self.height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn custom_config_round_trips() {
        let text = "group = theta\ncusp_width = 2\ngenerator = 1 2 0 1\ngenerator = 0 -1 1 0\n\
                    height = 3/2\nepsilon = 0.1\nbeta = 5.5\nlevel_q = 12\nz = 20\ndelta = 0.7\n\
                    r_list = 3, 1\ntheta = gamburd\nworkers = 2 # inline comment\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.group.cusp_width(), 2);
        assert_eq!(cfg.r_list, vec![1, 3]);
        assert_eq!(cfg.epsilon, parse_rational("1/10").unwrap());
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn hash_ignores_paths_but_not_science() {
        let a = RunConfig::default();
        let b = RunConfig { out_dir: "elsewhere".into(), workers: Some(3), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig { beta: 8.0, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::parse("height = 0").is_err());
        assert!(RunConfig::parse("epsilon = 1/2").is_err());
        assert!(RunConfig::parse("beta = 0.5").is_err());
        assert!(RunConfig::parse("theta = nonsense").is_err());
        assert!(RunConfig::parse("r_list = 1,x").is_err());
        assert!(RunConfig::parse("frobnicate = 1").is_err());
        assert!(RunConfig::parse("height").is_err());
        assert!(RunConfig::parse("group = nowhere").is_err());
    }

    #[test]
    fn overrides_apply_on_top_of_defaults() {
        let o = Overrides { height: Some("1.5".into()), theta: Some("kim_sarnak".into()), ..Default::default() };
        let cfg = RunConfig::from_overrides(&o).unwrap();
        assert_eq!(cfg.height, parse_rational("3/2").unwrap());
        assert_eq!(cfg.theta, "kim_sarnak");
        assert_eq!(cfg.beta, DEFAULT_BETA);
    }
}
