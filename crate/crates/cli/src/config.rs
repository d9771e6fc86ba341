//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use prandtl_core::scenarios::{self, Scenario};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected key=value, got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("key '{0}' given twice")]
    Duplicate(String),
    #[error("missing required key '{0}'")]
    Missing(String),
    #[error("key '{key}': cannot parse '{value}' as {expected}")]
    Type { key: String, value: String, expected: &'static str },
    #[error("key '{key}': {reason}")]
    Invalid { key: String, reason: String },
    #[error("scenario: {0}")]
    Scenario(#[from] prandtl_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Physical,
    Crocco,
    Both,
}

impl SolverChoice {
    pub fn physical(self) -> bool {
        matches!(self, SolverChoice::Physical | SolverChoice::Both)
    }

    pub fn crocco(self) -> bool {
        matches!(self, SolverChoice::Crocco | SolverChoice::Both)
    }
}

/// Recognised keys. Keys left unset fall back to the scenario defaults.
const KEYS: &[&str] = &[
    "scenario",
    "length",
    "m",
    "alpha",
    "t0",
    "n_x",
    "n_y",
    "n_xi",
    "n_eta",
    "y_max",
    "stretch",
    "dt",
    "cfl",
    "t_end",
    "solver",
    "out",
    "snapshot_every",
    "snapshot_max_rows",
    "far_tolerance",
    "bisections",
    "shear_bound_allowance",
    "inequality_tolerance",
    "inequality_exclude",
    "curvature_tolerance",
    "cross_tolerance",
    "bound_t_sweep",
];

/// Raw key/value pairs in file order of precedence (later wins only
/// through [`RawConfig::set`]).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: k + 1, text: line.to_string() })?;
            let key = key.trim().to_string();
            check_key(&key)?;
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate(key));
            }
        }
        Ok(Self { values })
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Sets or replaces one key (command-line overrides).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        check_key(key)?;
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Parses a `key=value` override.
    pub fn apply_override(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| ConfigError::Syntax { line: 0, text: pair.to_string() })?;
        self.set(k.trim(), v)
    }

    fn get<T: std::str::FromStr>(&self, key: &str, expected: &'static str) -> Result<Option<T>, ConfigError> {
        self.values
            .get(key)
            .map(|v| v.parse().map_err(|_| ConfigError::Type { key: key.into(), value: v.clone(), expected }))
            .transpose()
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v: Option<f64> = self.get(key, "a real number")?;
        match v {
            Some(x) if !x.is_finite() => Err(invalid(key, "must be finite")),
            _ => Ok(v),
        }
    }

    fn count(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.get(key, "a non-negative integer")
    }

    /// Validates the keys and resolves them against the scenario defaults.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let name = self.values.get("scenario").ok_or_else(|| ConfigError::Missing("scenario".into()))?.clone();
        let scenario_params = ScenarioParams {
            length: self.real("length")?,
            m: self.real("m")?,
            alpha: self.real("alpha")?,
            t0: self.real("t0")?,
        };
        let scenario = scenario_params.build(&name)?;
        let d = scenario.defaults;

        let counts = [
            ("n_x", self.count("n_x")?.unwrap_or(d.n_x)),
            ("n_y", self.count("n_y")?.unwrap_or(d.n_y)),
            ("n_xi", self.count("n_xi")?.unwrap_or(d.n_xi)),
            ("n_eta", self.count("n_eta")?.unwrap_or(d.n_eta)),
        ];
        for (key, n) in counts {
            if n < 8 {
                return Err(invalid(key, &format!("count must be at least 8, got {n}")));
            }
        }
        let positive = |key: &str, v: f64| -> Result<f64, ConfigError> {
            if v > 0.0 {
                Ok(v)
            } else {
                Err(invalid(key, &format!("must be positive, got {v}")))
            }
        };
        let y_max = positive("y_max", self.real("y_max")?.unwrap_or(d.y_max))?;
        let stretch = self.real("stretch")?.unwrap_or(d.stretch);
        if !(stretch > 0.0 && stretch <= 1.0) {
            return Err(invalid("stretch", &format!("must lie in (0, 1], got {stretch}")));
        }
        let cfl = self.real("cfl")?;
        if let Some(c) = cfl {
            if !(c > 0.0 && c <= 1.0) {
                return Err(invalid("cfl", &format!("CFL factor must lie in (0, 1], got {c}")));
            }
            if self.values.contains_key("dt") {
                return Err(invalid("cfl", "give either dt or cfl, not both"));
            }
        }
        let dt = positive("dt", self.real("dt")?.unwrap_or(d.dt))?;
        let t_end = self.real("t_end")?.unwrap_or(d.t_end);
        if t_end < 0.0 {
            return Err(invalid("t_end", &format!("must be non-negative, got {t_end}")));
        }
        if t_end > scenario.model.horizon() {
            return Err(invalid("t_end", &format!("exceeds the model horizon {}", scenario.model.horizon())));
        }
        let solver = match self.values.get("solver").map(String::as_str) {
            None | Some("both") => SolverChoice::Both,
            Some("physical") => SolverChoice::Physical,
            Some("crocco") => SolverChoice::Crocco,
            Some(other) => return Err(invalid("solver", &format!("expected physical, crocco or both, got '{other}'"))),
        };
        let bisections: u32 = self.get("bisections", "a non-negative integer")?.unwrap_or(20);
        if bisections == 0 || bisections > 60 {
            return Err(invalid("bisections", &format!("must lie in 1..=60, got {bisections}")));
        }
        let bound_t_sweep = match self.values.get("bound_t_sweep") {
            None => Vec::new(),
            Some(list) => list
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().ok().filter(|t| *t > 0.0).ok_or_else(|| ConfigError::Type {
                        key: "bound_t_sweep".into(),
                        value: s.to_string(),
                        expected: "a comma-separated list of positive reals",
                    })
                })
                .collect::<Result<_, _>>()?,
        };
        let snapshot_max_rows = self.count("snapshot_max_rows")?.unwrap_or(1025);
        if snapshot_max_rows < 2 {
            return Err(invalid("snapshot_max_rows", "must be at least 2"));
        }

        Ok(RunConfig {
            scenario: name,
            scenario_params,
            n_x: counts[0].1,
            n_y: counts[1].1,
            n_xi: counts[2].1,
            n_eta: counts[3].1,
            y_max,
            stretch,
            dt,
            cfl,
            t_end,
            solver,
            out: self.values.get("out").map(PathBuf::from),
            snapshot_every: self.count("snapshot_every")?.unwrap_or(0),
            snapshot_max_rows,
            far_tolerance: positive("far_tolerance", self.real("far_tolerance")?.unwrap_or(1e-3))?,
            bisections,
            shear_bound_allowance: positive(
                "shear_bound_allowance",
                self.real("shear_bound_allowance")?.unwrap_or(0.05),
            )?,
            inequality_tolerance: positive("inequality_tolerance", self.real("inequality_tolerance")?.unwrap_or(0.05))?,
            inequality_exclude: self.count("inequality_exclude")?.unwrap_or(10),
            curvature_tolerance: positive("curvature_tolerance", self.real("curvature_tolerance")?.unwrap_or(0.1))?,
            cross_tolerance: positive("cross_tolerance", self.real("cross_tolerance")?.unwrap_or(0.02))?,
            bound_t_sweep,
        })
    }
}

fn check_key(key: &str) -> Result<(), ConfigError> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(ConfigError::UnknownKey(key.to_string()))
    }
}

fn invalid(key: &str, reason: &str) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.to_string() }
}

/// Optional scenario parameters; unset ones take the built-in values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ScenarioParams {
    pub length: Option<f64>,
    pub m: Option<f64>,
    pub alpha: Option<f64>,
    pub t0: Option<f64>,
}

impl ScenarioParams {
    pub fn build(&self, name: &str) -> Result<Scenario, ConfigError> {
        let unused = |key: &str, v: Option<f64>| match v {
            Some(_) => Err(invalid(key, &format!("not a parameter of scenario '{name}'"))),
            None => Ok(()),
        };
        let s = match name {
            "example4.1" => {
                unused("m", self.m)?;
                unused("alpha", self.alpha)?;
                unused("t0", self.t0)?;
                scenarios::decelerating_outer_flow(self.length.unwrap_or(3.0))?
            }
            "example4.2" => {
                unused("length", self.length)?;
                unused("t0", self.t0)?;
                scenarios::slow_growth_profile(self.m.unwrap_or(50.0), self.alpha.unwrap_or(0.01))?
            }
            "favourable" => {
                for (k, v) in [("length", self.length), ("m", self.m), ("alpha", self.alpha), ("t0", self.t0)] {
                    unused(k, v)?;
                }
                scenarios::favourable_control()?
            }
            "heat-oracle" => {
                unused("length", self.length)?;
                unused("m", self.m)?;
                unused("alpha", self.alpha)?;
                scenarios::heat_oracle(self.t0.unwrap_or(0.05))?
            }
            other => {
                return Err(invalid(
                    "scenario",
                    &format!("unknown scenario '{other}', expected one of {}", scenarios::NAMES.join(", ")),
                ))
            }
        };
        Ok(s)
    }
}

/// Validated run settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: String,
    pub scenario_params: ScenarioParams,
    pub n_x: usize,
    pub n_y: usize,
    pub n_xi: usize,
    pub n_eta: usize,
    pub y_max: f64,
    pub stretch: f64,
    /// Scenario or configured step; replaced by `cfl` times the stability
    /// limit when a CFL factor is given.
    pub dt: f64,
    pub cfl: Option<f64>,
    pub t_end: f64,
    pub solver: SolverChoice,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Snapshot every this many steps; 0 writes only the first and last level.
    pub snapshot_every: usize,
    /// Largest number of `y` or `eta` rows per snapshot file.
    pub snapshot_max_rows: usize,
    pub far_tolerance: f64,
    pub bisections: u32,
    pub shear_bound_allowance: f64,
    pub inequality_tolerance: f64,
    pub inequality_exclude: usize,
    pub curvature_tolerance: f64,
    pub cross_tolerance: f64,
    pub bound_t_sweep: Vec<f64>,
}

impl RunConfig {
    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        self.scenario_params.build(&self.scenario)
    }
}
