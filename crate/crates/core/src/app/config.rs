use std::collections::BTreeMap;
use std::path::PathBuf;

use super::registry::{find, ScenarioInfo};
use crate::error::{Error, Result};

/// A fully specified scenario run. The seed is mandatory; nothing draws on
/// ambient entropy.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub n_paths: usize,
    pub n_steps: usize,
    pub horizon: f64,
    pub seed: u64,
    pub alpha: f64,
    pub params: BTreeMap<String, String>,
    pub out: Option<PathBuf>,
}

/// Values read from a config file or the command line before defaults apply.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigOverrides {
    pub scenario: Option<String>,
    pub n_paths: Option<usize>,
    pub n_steps: Option<usize>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub params: BTreeMap<String, String>,
    pub out: Option<PathBuf>,
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Usage(format!("cannot parse {key} = {v:?}")))
}

impl ConfigOverrides {
    /// Parses `key = value` lines; `#` starts a comment. Unknown keys become
    /// scenario parameters.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut o = ConfigOverrides::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("line {}: expected key = value", n + 1)))?;
            o.set(k.trim(), v.trim())?;
        }
        Ok(o)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "scenario" => self.scenario = Some(value.to_string()),
            "paths" => self.n_paths = Some(parse(key, value)?),
            "steps" => self.n_steps = Some(parse(key, value)?),
            "horizon" => self.horizon = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "alpha" => self.alpha = Some(parse(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            _ => {
                self.params.insert(key.to_string(), value.to_string());
            }
        }
        Ok(())
    }

    /// Values in `other` win.
    pub fn merge(mut self, other: ConfigOverrides) -> Self {
        self.scenario = other.scenario.or(self.scenario);
        self.n_paths = other.n_paths.or(self.n_paths);
        self.n_steps = other.n_steps.or(self.n_steps);
        self.horizon = other.horizon.or(self.horizon);
        self.seed = other.seed.or(self.seed);
        self.alpha = other.alpha.or(self.alpha);
        self.out = other.out.or(self.out);
        self.params.extend(other.params);
        self
    }

    /// Applies the scenario defaults and validates the result.
    pub fn resolve(self) -> Result<ScenarioConfig> {
        let id = self
            .scenario
            .ok_or_else(|| Error::Usage("no scenario given".into()))?;
        let info = find(&id).ok_or_else(|| Error::Usage(format!("unknown scenario {id:?}")))?;
        let seed = self
            .seed
            .ok_or_else(|| Error::Usage("a seed is required".into()))?;
        let cfg = ScenarioConfig {
            scenario: info.id.to_string(),
            n_paths: self.n_paths.unwrap_or(info.paths),
            n_steps: self.n_steps.unwrap_or(info.steps),
            horizon: self.horizon.unwrap_or(info.horizon),
            seed,
            alpha: self.alpha.unwrap_or(0.01),
            params: self.params,
            out: self.out,
        };
        cfg.validate(info)?;
        Ok(cfg)
    }
}

impl ScenarioConfig {
    /// Defaults of scenario `id` with the given seed.
    pub fn new(id: &str, seed: u64) -> Result<Self> {
        ConfigOverrides {
            scenario: Some(id.into()),
            seed: Some(seed),
            ..Default::default()
        }
        .resolve()
    }

    pub fn with_paths(mut self, n: usize) -> Self {
        self.n_paths = n;
        self
    }

    pub fn with_steps(mut self, n: usize) -> Self {
        self.n_steps = n;
        self
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    fn validate(&self, info: &ScenarioInfo) -> Result<()> {
        if self.n_paths == 0 || self.n_steps == 0 {
            return Err(Error::Usage("paths and steps must be positive".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Usage(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Usage(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        for k in self.params.keys() {
            if !info.params.iter().any(|p| p.name == k) {
                return Err(Error::Usage(format!(
                    "scenario {} has no parameter {k:?}",
                    info.id
                )));
            }
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str).or_else(|| {
            find(&self.scenario)
                .and_then(|i| i.params.iter().find(|p| p.name == key))
                .map(|p| p.default)
        })
    }

    pub fn param<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self
            .raw(key)
            .ok_or_else(|| Error::Usage(format!("missing parameter {key:?}")))?;
        parse(key, v)
    }

    /// Comma-separated list parameter; empty means no entries.
    pub fn param_list(&self, key: &str) -> Result<Vec<f64>> {
        let v = self
            .raw(key)
            .ok_or_else(|| Error::Usage(format!("missing parameter {key:?}")))?;
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse(key, s))
            .collect()
    }

    /// `key = value` lines of every setting, parameters included with their
    /// defaults, in a fixed order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("scenario".to_string(), self.scenario.clone()),
            ("paths".to_string(), self.n_paths.to_string()),
            ("steps".to_string(), self.n_steps.to_string()),
            ("horizon".to_string(), format!("{}", self.horizon)),
            ("seed".to_string(), self.seed.to_string()),
            ("alpha".to_string(), format!("{}", self.alpha)),
        ];
        if let Some(info) = find(&self.scenario) {
            for p in info.params {
                out.push((
                    format!("param.{}", p.name),
                    self.raw(p.name).unwrap_or("").to_string(),
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_are_overridden_by_flags() {
        let file = ConfigOverrides::parse_text(
            "# run\nscenario = cox-continuous\npaths = 2000 # small\nseed=4\nlambda = 2\n",
        )
        .unwrap();
        let flags = ConfigOverrides {
            n_paths: Some(300),
            ..Default::default()
        };
        let cfg = file.merge(flags).resolve().unwrap();
        assert_eq!(cfg.n_paths, 300);
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.param::<f64>("lambda").unwrap(), 2.0);
    }

    #[test]
    fn seed_and_scenario_are_mandatory() {
        assert!(matches!(
            ConfigOverrides::parse_text("scenario = cox-continuous")
                .unwrap()
                .resolve(),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            ConfigOverrides::parse_text("seed = 1").unwrap().resolve(),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            ScenarioConfig::new("nope", 1),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        assert!(ConfigOverrides::parse_text("paths = many").is_err());
        assert!(ConfigOverrides::parse_text("just text").is_err());
        let bad =
            ConfigOverrides::parse_text("scenario = cox-continuous\nseed = 1\npaths = 0").unwrap();
        assert!(bad.resolve().is_err());
        let unknown =
            ConfigOverrides::parse_text("scenario = cox-continuous\nseed = 1\nbogus = 3").unwrap();
        assert!(unknown.resolve().is_err());
    }

    #[test]
    fn list_parameters() {
        let cfg = ScenarioConfig::new("cox-jumps", 1)
            .unwrap()
            .with_param("jump_times", "0.5, 1.5");
        assert_eq!(cfg.param_list("jump_times").unwrap(), vec![0.5, 1.5]);
        let cfg = cfg.with_param("jump_times", "");
        assert!(cfg.param_list("jump_times").unwrap().is_empty());
    }
}
