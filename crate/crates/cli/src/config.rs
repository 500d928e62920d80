//! Flat `key = value` sweep configuration.
//!
//! ```text
//! # multivariate sweep
//! lambda_grid = 16, 32, 64
//! mu = 0.5, 0.5
//! seed = 7
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use thiserror::Error;

use stein_lab::state_space::DEFAULT_MAX_STATES;

pub const MAX_STATES_VAR: &str = "STEIN_LAB_MAX_STATES";

#[derive(Debug, Error, PartialEq)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Section {
    Uni,
    Multi,
    Pp,
}

impl Section {
    pub fn name(self) -> &'static str {
        match self {
            Section::Uni => "uni",
            Section::Multi => "multi",
            Section::Pp => "pp",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Section::Uni => &["lambda_grid", "seed", "out", "plots", "k", "n_max"],
            Section::Multi => &["lambda_grid", "seed", "out", "plots", "d", "mu", "n_max"],
            Section::Pp => &["lambda_grid", "seed", "out", "plots", "s_size", "n_ab_max", "n_total_max"],
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub lambda_grid: Option<String>,
    pub out: Option<PathBuf>,
    pub no_plots: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub section: Section,
    pub lambda_grid: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub plots: bool,
    pub max_states: usize,
    /// Univariate perturbation point; `⌊λ⌋ ∨ 1` when absent.
    pub k: Option<u32>,
    pub mu: Vec<f64>,
    /// Truncation override: one level for `uni`, one per coordinate for `multi`.
    pub n_max: Option<Vec<u32>>,
    pub s_size: usize,
    pub n_ab_max: Option<u32>,
    pub n_total_max: Option<u32>,
}

impl SweepConfig {
    pub fn load(section: Section, path: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        let max_states = match std::env::var(MAX_STATES_VAR) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| bad(format!("{MAX_STATES_VAR} must be a positive integer, got {v:?}")))?,
            Err(_) => DEFAULT_MAX_STATES,
        };
        Self::parse(section, &text, overrides, max_states)
    }

    pub fn parse(section: Section, text: &str, overrides: &Overrides, max_states: usize) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            let key = key.trim();
            if !section.keys().contains(&key) {
                return Err(bad(format!("line {}: unknown key {key:?} for section {}", n + 1, section.name())));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(bad(format!("line {}: duplicate key {key:?}", n + 1)));
            }
        }
        let get = |k: &str| entries.get(k).map(String::as_str);

        let grid_text = overrides
            .lambda_grid
            .as_deref()
            .or(get("lambda_grid"))
            .ok_or_else(|| bad("lambda_grid is required"))?;
        let lambda_grid = parse_grid(grid_text)?;
        let seed = match overrides.seed {
            Some(s) => s,
            None => get("seed").map(|v| parse_scalar(v, "seed")).transpose()?.unwrap_or(0),
        };
        let out = overrides
            .out
            .clone()
            .or_else(|| get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("stein-lab-out"));
        let plots = !overrides.no_plots && get("plots").map(parse_bool).transpose()?.unwrap_or(true);
        if max_states == 0 {
            return Err(bad("max_states must be positive"));
        }

        let mut config = SweepConfig {
            section,
            lambda_grid,
            seed,
            out,
            plots,
            max_states,
            k: get("k").map(|v| parse_scalar(v, "k")).transpose()?,
            mu: Vec::new(),
            n_max: get("n_max").map(|v| parse_list(v, "n_max")).transpose()?,
            s_size: get("s_size").map(|v| parse_scalar(v, "s_size")).transpose()?.unwrap_or(1),
            n_ab_max: get("n_ab_max").map(|v| parse_scalar(v, "n_ab_max")).transpose()?,
            n_total_max: get("n_total_max").map(|v| parse_scalar(v, "n_total_max")).transpose()?,
        };

        match section {
            Section::Uni => {
                if let Some(n) = &config.n_max {
                    if n.len() != 1 {
                        return Err(bad("n_max takes a single level for the uni section"));
                    }
                }
            }
            Section::Multi => {
                config.mu = parse_list(get("mu").ok_or_else(|| bad("mu is required for the multi section"))?, "mu")?;
                if let Some(d) = get("d") {
                    let d: usize = parse_scalar(d, "d")?;
                    if d != config.mu.len() {
                        return Err(bad(format!("d = {d} but mu has {} entries", config.mu.len())));
                    }
                }
                if config.mu.len() < 2 {
                    return Err(bad("mu needs at least two entries"));
                }
                if config.mu[0] != config.mu[1] {
                    return Err(bad("the perturbation needs mu_1 = mu_2"));
                }
                if let Some(n) = &config.n_max {
                    if n.len() != config.mu.len() {
                        return Err(bad("n_max needs one level per coordinate"));
                    }
                }
            }
            Section::Pp => {
                if config.s_size == 0 {
                    return Err(bad("s_size must be at least 1"));
                }
                if let Some(&l) = config.lambda_grid.iter().find(|&&l| l <= std::f64::consts::SQRT_2) {
                    return Err(bad(format!("|lambda| = {l} must exceed sqrt(2)")));
                }
            }
        }
        Ok(config)
    }
}

/// Parses a comma-separated, strictly increasing list of positive reals.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, ConfigError> {
    let grid: Vec<f64> = parse_list(text, "lambda_grid")?;
    if grid.is_empty() {
        return Err(bad("lambda_grid is empty"));
    }
    if let Some(l) = grid.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(bad(format!("lambda_grid entries must be positive, got {l}")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("lambda_grid must be strictly increasing"));
    }
    Ok(grid)
}

fn parse_scalar<T: std::str::FromStr>(text: &str, key: &str) -> Result<T, ConfigError> {
    text.trim()
        .parse()
        .map_err(|_| bad(format!("{key}: cannot parse {text:?}")))
}

fn parse_list<T: std::str::FromStr>(text: &str, key: &str) -> Result<Vec<T>, ConfigError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_scalar(s, key))
        .collect()
}

fn parse_bool(text: &str) -> Result<bool, ConfigError> {
    match text {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(format!("plots: expected true or false, got {text:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(section: Section, text: &str) -> Result<SweepConfig, ConfigError> {
        SweepConfig::parse(section, text, &Overrides::default(), 20_000)
    }

    #[test]
    fn uni_defaults() {
        let c = parse(Section::Uni, "lambda_grid = 25, 50,100\n# comment\n\n").unwrap();
        assert_eq!(c.lambda_grid, vec![25.0, 50.0, 100.0]);
        assert_eq!((c.seed, c.plots, c.k, c.s_size), (0, true, None, 1));
        assert_eq!(c.out, PathBuf::from("stein-lab-out"));
    }

    #[test]
    fn overrides_win() {
        let o = Overrides {
            lambda_grid: Some("1,2".into()),
            out: Some("x".into()),
            no_plots: true,
            seed: Some(9),
        };
        let c = SweepConfig::parse(Section::Uni, "lambda_grid = 5\nseed = 3\nplots = true", &o, 100).unwrap();
        assert_eq!(c.lambda_grid, vec![1.0, 2.0]);
        assert_eq!((c.seed, c.plots, c.max_states), (9, false, 100));
        assert_eq!(c.out, PathBuf::from("x"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse(Section::Uni, "lambda_grid = 2, 1").is_err());
        assert!(parse(Section::Uni, "lambda_grid = 0, 1").is_err());
        assert!(parse(Section::Uni, "seed = 1").is_err());
        assert!(parse(Section::Uni, "lambda_grid = 1\nmu = 0.5, 0.5").is_err());
        assert!(parse(Section::Uni, "lambda_grid 1").is_err());
        assert!(parse(Section::Uni, "lambda_grid = 1\nlambda_grid = 2").is_err());
        assert!(parse(Section::Multi, "lambda_grid = 16").is_err());
        assert!(parse(Section::Multi, "lambda_grid = 16\nmu = 0.6, 0.4").is_err());
        assert!(parse(Section::Multi, "lambda_grid = 16\nmu = 0.5, 0.5\nd = 3").is_err());
        assert!(parse(Section::Pp, "lambda_grid = 1, 4").is_err());
        assert!(parse(Section::Pp, "lambda_grid = 4\ns_size = 0").is_err());
    }

    #[test]
    fn multi_and_pp_fields() {
        let m = parse(Section::Multi, "lambda_grid = 16\nmu = 0.4, 0.4, 0.2\nd = 3\nn_max = 20,20,12").unwrap();
        assert_eq!(m.mu, vec![0.4, 0.4, 0.2]);
        assert_eq!(m.n_max, Some(vec![20, 20, 12]));
        let p = parse(Section::Pp, "lambda_grid = 4, 8\ns_size = 2\nn_ab_max = 3\nn_total_max = 30").unwrap();
        assert_eq!((p.s_size, p.n_ab_max, p.n_total_max), (2, Some(3), Some(30)));
    }
}
