//! Run configuration: a JSON object tree layered over per-experiment
//! defaults, with dotted-path overrides.
//!
//! Lines at the top of a config file that start with `#` are a header
//! comment and are skipped before parsing. All values are SI (bits, s, J,
//! W, Hz, m); the one convenience key is `params.speed_kmh`, which replaces
//! `params.speed` after conversion to m/s. Link gains follow
//! `distance^-theta` unless a link's `gain` is given explicitly.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::harness::{Algorithm, HarnessError, Sampling, ScenarioSpec};
use crate::model::{kmh_to_ms, ModelError, Mode, NetworkParams};

/// Header printed by `validate` and written atop generated configs.
pub const UNITS_HEADER: &str = "\
# units: bits (data_bits), seconds (deadline, tau_s), joules, watts (power, max_power),
# hertz (bandwidth, f_ue, f_mec), metres (l_v2v, l_i2i, l_v2i), m/s (speed);
# deadline null means no deadline";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config is not valid JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("config key `{key}`: {detail}")]
    Key { key: String, detail: String },
    #[error("override `{0}` must have the form key=value")]
    Override(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

impl ConfigError {
    /// The violated model constraint, if that is what went wrong.
    pub fn constraint_id(&self) -> Option<&'static str> {
        match self {
            ConfigError::Model(e) | ConfigError::Harness(HarnessError::Model(e)) => e.constraint_id(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SweepVehicles,
    SweepSize,
    SuccessRate,
    Convergence,
    SingleRun,
    OracleCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SweepVehicles => "sweep-vehicles",
            Experiment::SweepSize => "sweep-size",
            Experiment::SuccessRate => "success-rate",
            Experiment::Convergence => "convergence",
            Experiment::SingleRun => "single-run",
            Experiment::OracleCheck => "oracle-check",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// First seed; replications use `seed, seed + 1, ...`.
    pub seed: u64,
    pub replications: usize,
    pub max_sweeps: usize,
    pub params: NetworkParams,
    pub scenario: ScenarioSpec,
    /// Algorithms compared by the sweep and single-run experiments.
    pub algorithms: Vec<Algorithm>,
    /// Algorithm traced by the convergence experiment.
    pub algorithm: Algorithm,
    pub vehicle_counts: Vec<usize>,
    pub data_sizes: Vec<f64>,
    pub deadlines: Vec<f64>,
    /// Single-run only: evaluate this joint decision instead of running the
    /// algorithms.
    pub forced_modes: Option<Vec<u8>>,
}

impl RunConfig {
    /// Defaults for `experiment`, before any user input.
    pub fn defaults(experiment: Experiment) -> Self {
        let (scenario, replications) = match experiment {
            Experiment::SweepVehicles | Experiment::SweepSize => (ScenarioSpec::overhead_default(100), 10),
            Experiment::SuccessRate => (ScenarioSpec::success_default(100), 10),
            Experiment::Convergence => (ScenarioSpec::overhead_default(30), 1),
            Experiment::SingleRun => (
                ScenarioSpec {
                    data_bits: Sampling::Fixed(5e6),
                    ..ScenarioSpec::overhead_default(1)
                },
                1,
            ),
            Experiment::OracleCheck => (ScenarioSpec::success_default(4), 50),
        };
        RunConfig {
            experiment,
            seed: 1,
            replications,
            max_sweeps: 1000,
            params: NetworkParams::table1(),
            scenario,
            algorithms: Algorithm::ALL.to_vec(),
            algorithm: Algorithm::Tm,
            vehicle_counts: vec![20, 40, 60, 80, 100],
            data_sizes: vec![5e6, 15e6, 50e6],
            deadlines: vec![1.0, 2.0, 5.0, 10.0, 20.0, 35.0, 50.0, 100.0, 200.0, 400.0],
            forced_modes: None,
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.replications as u64).map(|i| self.seed + i).collect()
    }

    pub fn forced_decision(&self) -> Result<Option<Vec<Mode>>, ConfigError> {
        let Some(codes) = &self.forced_modes else {
            return Ok(None);
        };
        if codes.len() != self.scenario.vehicles {
            return Err(ConfigError::Key {
                key: "forced_modes".into(),
                detail: format!("{} modes given for {} vehicles", codes.len(), self.scenario.vehicles),
            });
        }
        let modes = codes
            .iter()
            .map(|&c| Mode::from_code(c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Some(modes))
    }

    /// Constraint and shape checks that serde cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate()?;
        self.scenario.validate()?;
        let key_err = |key: &str, detail: &str| ConfigError::Key {
            key: key.into(),
            detail: detail.into(),
        };
        if self.replications == 0 {
            return Err(key_err("replications", "must be at least 1"));
        }
        if self.max_sweeps == 0 {
            return Err(key_err("max_sweeps", "must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(key_err("algorithms", "must name at least one algorithm"));
        }
        match self.experiment {
            Experiment::SweepVehicles if self.vehicle_counts.is_empty() || self.vehicle_counts.contains(&0) => {
                return Err(key_err("vehicle_counts", "must be a nonempty list of positive counts"));
            }
            Experiment::SweepSize
                if self.data_sizes.is_empty() || self.data_sizes.iter().any(|&d| !(d.is_finite() && d > 0.0)) =>
            {
                return Err(key_err("data_sizes", "must be a nonempty list of positive sizes in bits"));
            }
            Experiment::SuccessRate if self.deadlines.is_empty() || self.deadlines.iter().any(|&t| !(t > 0.0)) => {
                return Err(key_err("deadlines", "must be a nonempty list of positive deadlines in seconds"));
            }
            _ => {}
        }
        self.forced_decision()?;
        Ok(())
    }
}

/// Reads a config file, skipping its leading `#` header lines.
pub fn read_config_file(path: &Path) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<Value, ConfigError> {
    let body: String = text
        .lines()
        .skip_while(|l| l.trim_start().starts_with('#') || l.trim().is_empty())
        .collect::<Vec<_>>()
        .join("\n");
    if body.trim().is_empty() {
        return Ok(Value::Object(Map::new()));
    }
    let value: Value = serde_json::from_str(&body)?;
    if !value.is_object() {
        return Err(ConfigError::Key {
            key: "<root>".into(),
            detail: "config must be a JSON object".into(),
        });
    }
    Ok(value)
}

/// Applies `key.path=value`. The value is read as JSON when it parses,
/// otherwise as a plain string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .filter(|(k, _)| !k.trim().is_empty())
        .ok_or_else(|| ConfigError::Override(assignment.to_string()))?;
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    set_path(root, key.trim(), value)
}

pub fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut node = root;
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        let last = parts.peek().is_none();
        if !node.is_object() {
            return Err(ConfigError::Key {
                key: key.into(),
                detail: format!("`{part}` is nested under a non-object value"),
            });
        }
        let map = node.as_object_mut().expect("checked above");
        if last {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("split yields at least one segment")
}

/// Recursively overlays `top` onto `base`; objects merge, everything else
/// replaces.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Command-line inputs that shape the configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub max_sweeps: Option<usize>,
    pub set: Vec<String>,
}

/// Layers defaults, the config file, `--set` overrides and flags, then
/// validates. Precedence, lowest first: experiment defaults, file, `--set`,
/// dedicated flags.
pub fn resolve(file: Option<Value>, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut user = file.unwrap_or_else(|| Value::Object(Map::new()));
    for assignment in &overrides.set {
        apply_override(&mut user, assignment)?;
    }
    if let Some(name) = &overrides.experiment {
        set_path(&mut user, "experiment", Value::String(name.clone()))?;
    }
    if let Some(seed) = overrides.seed {
        set_path(&mut user, "seed", seed.into())?;
    }
    if let Some(n) = overrides.max_sweeps {
        set_path(&mut user, "max_sweeps", n.into())?;
    }

    let experiment = match user.get("experiment") {
        None => Experiment::SingleRun,
        Some(v) => Experiment::deserialize(v).map_err(|e| ConfigError::Key {
            key: "experiment".into(),
            detail: e.to_string(),
        })?,
    };

    let explicit_gain: Vec<bool> = ["v2v_comm", "v2i_comm", "v2v_mig", "i2i_mig"]
        .iter()
        .map(|link| user.pointer(&format!("/params/{link}/gain")).is_some())
        .collect();
    if let Some(params) = user.get_mut("params").and_then(Value::as_object_mut) {
        if let Some(kmh) = params.remove("speed_kmh") {
            let kmh = kmh.as_f64().ok_or_else(|| ConfigError::Key {
                key: "params.speed_kmh".into(),
                detail: format!("expected a number, got {kmh}"),
            })?;
            params.insert("speed".into(), kmh_to_ms(kmh).into());
        }
    }

    let mut merged = serde_json::to_value(RunConfig::defaults(experiment))?;
    merge(&mut merged, user);
    let mut config: RunConfig = serde_path_to_error::deserialize(merged).map_err(|e| ConfigError::Key {
        key: e.path().to_string(),
        detail: e.inner().to_string(),
    })?;

    let p = &mut config.params;
    let theta = p.theta;
    let distances = [p.l_v2v, p.l_v2i, p.l_v2v, p.l_i2i];
    let links = [&mut p.v2v_comm, &mut p.v2i_comm, &mut p.v2v_mig, &mut p.i2i_mig];
    for ((link, distance), explicit) in links.into_iter().zip(distances).zip(explicit_gain) {
        if !explicit {
            link.gain = distance.powf(-theta);
        }
    }

    config.validate()?;
    Ok(config)
}

/// The resolved configuration as commented, pretty-printed JSON.
pub fn render(config: &RunConfig) -> String {
    let body = serde_json::to_string_pretty(config).expect("config serializes");
    format!("{UNITS_HEADER}\n{body}\n")
}
