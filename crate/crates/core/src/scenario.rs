//! Scenario files: flat `key = value` text, one setting per line, `#`
//! comments. Units are part of the key names. File paths are resolved
//! relative to the scenario file; when both network files are omitted the
//! built-in 33-bus feeder is used.
//!
//! ```text
//! branch_file = ../crates/core/data/ieee33_branches.csv
//! load_file = ../crates/core/data/ieee33_loads.csv
//! base_kv = 11
//! optimizer = csa
//! seed = 7
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csa::CsaConfig;
use crate::data;
use crate::error::NetworkError;
use crate::loadflow::SolverSettings;
use crate::network::{parse_network, Network};
use crate::objective::ObjectiveWeights;
use crate::pso::PsoConfig;
use crate::search::{Algorithm, PlanSpace};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("scenario line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("scenario line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("scenario key {key}: {message}")]
    InvalidValue { key: String, message: String },
    #[error("network file {0} does not exist")]
    MissingFile(PathBuf),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub branch_file: Option<PathBuf>,
    pub load_file: Option<PathBuf>,
    pub base_kv: f64,
    pub base_mva: f64,
    pub solver: SolverSettings,
    pub weights: ObjectiveWeights,
    pub optimizer: Algorithm,
    pub seed: u64,
    pub n_capacitors: usize,
    /// Upper end of the size range per capacitor; defaults to total load kvar.
    pub cap_max_kvar: Option<f64>,
    pub parallel: bool,
    pub csa: CsaConfig,
    pub pso: PsoConfig,
}

impl Default for Scenario {
    /// Built-in 33-bus feeder on an 11 kV / 1 MVA base with default settings.
    fn default() -> Self {
        Self {
            name: "ieee33-11kv".into(),
            branch_file: None,
            load_file: None,
            base_kv: 11.0,
            base_mva: 1.0,
            solver: SolverSettings::default(),
            weights: ObjectiveWeights::default(),
            optimizer: Algorithm::Csa,
            seed: 1,
            n_capacitors: 1,
            cap_max_kvar: None,
            parallel: true,
            csa: CsaConfig::default(),
            pso: PsoConfig::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "name",
    "branch_file",
    "load_file",
    "base_kv",
    "base_mva",
    "tolerance_pu",
    "max_iterations",
    "p_cost_per_kw",
    "q_cost_per_kvar",
    "cap_cost_per_kvar",
    "penalty_voltage_per_pu",
    "penalty_capsize_per_kvar",
    "optimizer",
    "seed",
    "n_capacitors",
    "cap_max_kvar",
    "parallel",
    "csa_n_crows",
    "csa_max_iter",
    "csa_flight_length",
    "csa_awareness_probability",
    "pso_n_particles",
    "pso_max_iter",
    "pso_inertia",
    "pso_cognitive",
    "pso_social",
    "pso_v_max_fraction",
];

fn value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, ScenarioError>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>().map_err(|e| ScenarioError::InvalidValue {
        key: key.to_string(),
        message: format!("{raw:?}: {e}"),
    })
}

impl Scenario {
    pub fn ieee33(base_kv: f64) -> Self {
        Self { name: format!("ieee33-{base_kv}kv"), base_kv, ..Self::default() }
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let mut scenario = Self::parse(&text, dir)?;
        if scenario.name == Scenario::default().name {
            if let Some(stem) = path.file_stem() {
                scenario.name = stem.to_string_lossy().into_owned();
            }
        }
        Ok(scenario)
    }

    /// Parses scenario text, resolving relative paths against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ScenarioError> {
        let mut s = Scenario::default();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, val)) = content.split_once('=') else {
                return Err(ScenarioError::Syntax { line, message: format!("expected key = value, got {content:?}") });
            };
            let (key, val) = (key.trim(), val.trim());
            if !KEYS.contains(&key) {
                return Err(ScenarioError::UnknownKey { line, key: key.to_string() });
            }
            if !seen.insert(key.to_string()) {
                return Err(ScenarioError::Syntax { line, message: format!("duplicate key {key}") });
            }
            match key {
                "name" => s.name = val.to_string(),
                "branch_file" => s.branch_file = Some(base_dir.join(val)),
                "load_file" => s.load_file = Some(base_dir.join(val)),
                "base_kv" => s.base_kv = value(key, val)?,
                "base_mva" => s.base_mva = value(key, val)?,
                "tolerance_pu" => s.solver.tolerance_pu = value(key, val)?,
                "max_iterations" => s.solver.max_iterations = value(key, val)?,
                "p_cost_per_kw" => s.weights.p_cost_per_kw = value(key, val)?,
                "q_cost_per_kvar" => s.weights.q_cost_per_kvar = value(key, val)?,
                "cap_cost_per_kvar" => s.weights.cap_cost_per_kvar = value(key, val)?,
                "penalty_voltage_per_pu" => s.weights.penalty_voltage_per_pu = value(key, val)?,
                "penalty_capsize_per_kvar" => s.weights.penalty_capsize_per_kvar = value(key, val)?,
                "optimizer" => s.optimizer = value(key, val)?,
                "seed" => s.seed = value(key, val)?,
                "n_capacitors" => s.n_capacitors = value(key, val)?,
                "cap_max_kvar" => s.cap_max_kvar = Some(value(key, val)?),
                "parallel" => s.parallel = value(key, val)?,
                "csa_n_crows" => s.csa.n_crows = value(key, val)?,
                "csa_max_iter" => s.csa.max_iter = value(key, val)?,
                "csa_flight_length" => s.csa.flight_length = value(key, val)?,
                "csa_awareness_probability" => s.csa.awareness_probability = value(key, val)?,
                "pso_n_particles" => s.pso.n_particles = value(key, val)?,
                "pso_max_iter" => s.pso.max_iter = value(key, val)?,
                "pso_inertia" => s.pso.inertia = value(key, val)?,
                "pso_cognitive" => s.pso.cognitive = value(key, val)?,
                "pso_social" => s.pso.social = value(key, val)?,
                "pso_v_max_fraction" => s.pso.v_max_fraction = value(key, val)?,
                _ => unreachable!("key list and match arms disagree"),
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |key: &str, message: String| ScenarioError::InvalidValue { key: key.into(), message };
        if self.branch_file.is_some() != self.load_file.is_some() {
            return Err(invalid("branch_file", "branch_file and load_file must be given together".into()));
        }
        for path in self.branch_file.iter().chain(&self.load_file) {
            if !path.is_file() {
                return Err(ScenarioError::MissingFile(path.clone()));
            }
        }
        if !(self.base_kv.is_finite() && self.base_kv > 0.0) {
            return Err(invalid("base_kv", format!("must be positive, got {}", self.base_kv)));
        }
        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            return Err(invalid("base_mva", format!("must be positive, got {}", self.base_mva)));
        }
        self.solver.validate().map_err(|e| invalid("tolerance_pu", e.to_string()))?;
        self.weights.validate().map_err(|e| invalid("weights", e))?;
        if self.n_capacitors == 0 {
            return Err(invalid("n_capacitors", "must be at least 1".into()));
        }
        if let Some(k) = self.cap_max_kvar {
            if !(k.is_finite() && k >= 0.0) {
                return Err(invalid("cap_max_kvar", format!("must be >= 0, got {k}")));
            }
        }
        self.csa_config().validate().map_err(|e| invalid("csa", e))?;
        self.pso_config().validate().map_err(|e| invalid("pso", e))?;
        Ok(())
    }

    pub fn load_network(&self) -> Result<Network, ScenarioError> {
        match (&self.branch_file, &self.load_file) {
            (Some(b), Some(l)) => {
                let read = |p: &PathBuf| {
                    fs::read_to_string(p).map_err(|source| ScenarioError::Io { path: p.clone(), source })
                };
                Ok(parse_network(&read(b)?, &read(l)?, self.base_kv, self.base_mva)?)
            }
            _ => Ok(data::ieee33(self.base_kv, self.base_mva)?),
        }
    }

    pub fn plan_space(&self, network: &Network) -> PlanSpace {
        let space = PlanSpace::for_network(network, self.n_capacitors);
        match self.cap_max_kvar {
            Some(k) => space.with_max_kvar(k),
            None => space,
        }
    }

    pub fn csa_config(&self) -> CsaConfig {
        CsaConfig { seed: self.seed, parallel: self.parallel, ..self.csa.clone() }
    }

    pub fn pso_config(&self) -> PsoConfig {
        PsoConfig { seed: self.seed, parallel: self.parallel, ..self.pso.clone() }
    }
}
