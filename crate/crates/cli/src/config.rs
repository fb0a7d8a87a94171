//! Experiment configuration files: flat `key = value` text with `#` comments.
//!
//! Keys are the experiment field names. At most one of `group_size`,
//! `loss_prob` and `rho` may hold a comma-separated list, which turns the
//! experiment into a sweep over that key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use beliefnet_core::protocol::{StrategyConfig, StrategyKind};
use beliefnet_core::sim::{ExperimentConfig, SweepAxis, Topology};
use beliefnet_core::{dsl, fixtures, SymbolId};

pub const KEYS: &[&str] = &[
    "group_size",
    "topology",
    "strategy",
    "rho",
    "backoff",
    "loss_prob",
    "delay",
    "delay_max",
    "crash_prob",
    "runs",
    "seed",
    "kb_fixture",
    "target_datum",
    "changed_justification",
];

/// Prefix naming one of the bundled fixtures instead of a file path.
pub const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: line {line}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("only one key may hold a list, found lists for `{0}` and `{1}`")]
    SeveralAxes(String, String),
    #[error("`{0}` does not accept a list")]
    NotAnAxis(String),
    #[error("unknown built-in fixture `{0}`")]
    UnknownFixture(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("fixture {path}: {source}")]
    Fixture { path: String, source: dsl::DslError },
    #[error(transparent)]
    Sim(#[from] beliefnet_core::sim::SimError),
}

/// Raw key-value settings, before interpretation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn defaults() -> Self {
        let pairs = [
            ("group_size", "10"),
            ("topology", "random_regular(4)"),
            ("strategy", "unbridled"),
            ("rho", "1"),
            ("backoff", "3"),
            ("loss_prob", "0"),
            ("delay", "1"),
            ("crash_prob", "0"),
            ("runs", "10"),
            ("seed", "42"),
            ("kb_fixture", "builtin:link_fault"),
            ("target_datum", "link_flt_det"),
            ("changed_justification", "dev_not_rcv"),
        ];
        let values = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        Self { values }
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut settings = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { path: origin.to_string(), line: i + 1 })?;
            settings.set(key.trim(), value.trim())?;
        }
        Ok(settings)
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// `other` wins wherever it has a value.
    pub fn merged(mut self, other: &Settings) -> Self {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
        self
    }

    /// Renders the settings in the file format, in key order.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .filter_map(|k| self.get(k).map(|v| format!("{k} = {v}\n")))
            .collect()
    }

    /// Interprets the settings. `base_dir` resolves relative fixture paths.
    pub fn scenario(&self, base_dir: &Path) -> Result<Scenario, ConfigError> {
        let mut axis: Option<(String, SweepAxis)> = None;
        let mut take_axis = |key: &str, a: SweepAxis| -> Result<(), ConfigError> {
            if let Some((prev, _)) = &axis {
                return Err(ConfigError::SeveralAxes(prev.clone(), key.to_string()));
            }
            axis = Some((key.to_string(), a));
            Ok(())
        };

        let group_sizes: Vec<usize> = self.list("group_size")?;
        let loss: Vec<f64> = self.list("loss_prob")?;
        let rho: Vec<f64> = self.list("rho")?;
        for key in ["topology", "strategy", "backoff", "delay", "delay_max", "crash_prob", "runs", "seed"] {
            if self.get(key).is_some_and(|v| v.contains(',')) {
                return Err(ConfigError::NotAnAxis(key.to_string()));
            }
        }
        if group_sizes.len() > 1 {
            take_axis("group_size", SweepAxis::GroupSize(group_sizes.clone()))?;
        }
        if loss.len() > 1 {
            take_axis("loss_prob", SweepAxis::LossProb(loss.clone()))?;
        }
        if rho.len() > 1 {
            take_axis("rho", SweepAxis::Rho(rho.clone()))?;
        }

        let kind = match self.required("strategy")? {
            "unbridled" => StrategyKind::Unbridled,
            "controlled" => StrategyKind::Controlled,
            other => return Err(bad("strategy", other, "expected `unbridled` or `controlled`")),
        };
        let strategy = StrategyConfig {
            kind,
            rho: rho[0],
            backoff: self.scalar("backoff")?,
        };

        let fixture = self.required("kb_fixture")?;
        let (kb_label, kb_text) = load_fixture_text(fixture, base_dir)?;
        let kb = dsl::load_str(&kb_text)
            .map_err(|source| ConfigError::Fixture { path: kb_label.clone(), source })?;

        let mut cfg = ExperimentConfig::new(
            kb,
            self.symbol("target_datum")?,
            self.symbol("changed_justification")?,
        );
        cfg.group_size = group_sizes[0];
        cfg.topology = parse_topology(self.required("topology")?)?;
        cfg.strategy = strategy;
        cfg.loss_prob = loss[0];
        cfg.delay = self.scalar("delay")?;
        cfg.delay_max = match self.get("delay_max") {
            None | Some("") | Some("none") => None,
            Some(_) => Some(self.scalar("delay_max")?),
        };
        cfg.crash_prob = self.scalar("crash_prob")?;
        cfg.runs = self.scalar("runs")?;
        cfg.seed = self.scalar("seed")?;

        let axis = axis.map(|(_, a)| a);
        // Validate every point of the sweep up front.
        match &axis {
            Some(a) => {
                for i in 0..a.len() {
                    a.configure(&cfg, i)?.validate()?;
                }
            }
            None => cfg.validate()?,
        }
        Ok(Scenario { template: cfg, axis, kb_label })
    }

    fn required(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| bad(key, "", "missing"))
    }

    fn scalar<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.required(key)?;
        v.parse().map_err(|e: T::Err| bad(key, v, &e.to_string()))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.required(key)?;
        v.split(',')
            .map(|item| item.trim().parse().map_err(|e: T::Err| bad(key, v, &e.to_string())))
            .collect()
    }

    fn symbol(&self, key: &str) -> Result<SymbolId, ConfigError> {
        let v = self.required(key)?;
        SymbolId::new(v).map_err(|e| bad(key, v, &e.to_string()))
    }
}

fn bad(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::BadValue { key: key.to_string(), value: value.to_string(), reason: reason.to_string() }
}

pub fn parse_topology(value: &str) -> Result<Topology, ConfigError> {
    let v = value.trim();
    if v == "complete" {
        return Ok(Topology::Complete);
    }
    let degree = v
        .strip_prefix("random_regular(")
        .and_then(|rest| rest.strip_suffix(')'))
        .ok_or_else(|| bad("topology", v, "expected `complete` or `random_regular(k)`"))?;
    let degree = degree.trim().parse().map_err(|e: std::num::ParseIntError| bad("topology", v, &e.to_string()))?;
    Ok(Topology::RandomRegular { degree })
}

pub fn topology_text(t: Topology) -> String {
    match t {
        Topology::Complete => "complete".to_string(),
        Topology::RandomRegular { degree } => format!("random_regular({degree})"),
    }
}

/// Returns a display label and the `.jkb` text for a `kb_fixture` value.
pub fn load_fixture_text(value: &str, base_dir: &Path) -> Result<(String, String), ConfigError> {
    if let Some(name) = value.strip_prefix(BUILTIN_PREFIX) {
        let file = format!("{name}.jkb");
        return fixtures::ALL
            .iter()
            .find(|(f, _)| *f == file)
            .map(|(_, text)| (value.to_string(), text.to_string()))
            .ok_or_else(|| ConfigError::UnknownFixture(name.to_string()));
    }
    let mut path = PathBuf::from(value);
    if path.is_relative() {
        path = base_dir.join(path);
    }
    let text = std::fs::read_to_string(&path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    Ok((path.display().to_string(), text))
}

/// An interpreted configuration: the base experiment and an optional sweep.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub template: ExperimentConfig,
    pub axis: Option<SweepAxis>,
    pub kb_label: String,
}
