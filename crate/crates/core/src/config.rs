//! Experiment configuration files.
//!
//! A config is TOML with one table per module:
//!
//! ```toml
//! [experiment]
//! world = "../worlds/open_40x24.txt"   # relative to this file
//! planner = "sniffysquad"              # or "surge_cast", "infotaxis"
//! n_trials = 50
//! base_seed = 1
//!
//! [plume]
//! release_rate = 10.0
//!
//! [team]
//! temperatures = [0.01, 0.1, 1.0]
//! ```
//!
//! Every section is optional and every key has a default except
//! `experiment.world`.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::baselines::{InfotaxisParams, SurgeCastParams};
use crate::error::{Error, Result};
use crate::estimator::EstimatorParams;
use crate::geom::Vec2;
use crate::langevin::PlannerParams;
use crate::plume::PlumeParams;
use crate::sensors::SensorNoise;
use crate::sim::{PlannerKind, Scenario};
use crate::team::TeamConfig;
use crate::world::GridWorld;

const SECTIONS: [&str; 8] = ["experiment", "plume", "sensors", "estimator", "langevin", "team", "surge_cast", "infotaxis"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub world: PathBuf,
    /// Overrides the source marked in the world file.
    #[serde(default)]
    pub source: Option<[f64; 2]>,
    #[serde(default = "default_planner")]
    pub planner: PlannerKind,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Keep every n-th trajectory point in trial records.
    #[serde(default = "default_stride")]
    pub trajectory_stride: usize,
}

fn default_planner() -> PlannerKind {
    PlannerKind::SniffySquad
}
fn default_trials() -> usize {
    50
}
fn default_seed() -> u64 {
    1
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_workers() -> usize {
    1
}
fn default_stride() -> usize {
    10
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// File the config came from, for error messages.
    pub path: PathBuf,
    pub experiment: ExperimentSection,
    pub scenario: Scenario,
    raw: Table,
    base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, path, &base)
    }

    /// Parses config text. Relative world paths resolve against `base_dir`.
    pub fn parse(text: &str, path: &Path, base_dir: &Path) -> Result<Self> {
        let raw: Table = text.parse().map_err(|e: toml::de::Error| Error::config(path, "", e.message()))?;
        Self::from_table(raw, path, base_dir)
    }

    fn from_table(raw: Table, path: &Path, base_dir: &Path) -> Result<Self> {
        for key in raw.keys() {
            if !SECTIONS.contains(&key.as_str()) {
                return Err(Error::config(path, key, "unknown section"));
            }
        }
        let experiment: ExperimentSection = section(&raw, "experiment", path)?
            .ok_or_else(|| Error::config(path, "experiment.world", "missing"))?;
        if experiment.n_trials == 0 {
            return Err(Error::config(path, "experiment.n_trials", "must be at least 1"));
        }
        if experiment.workers == 0 || experiment.trajectory_stride == 0 {
            return Err(Error::config(path, "experiment", "workers and trajectory_stride must be at least 1"));
        }
        let world_path = base_dir.join(&experiment.world);
        let mut world = GridWorld::load(&world_path).map_err(|e| match e {
            Error::Io { .. } => Error::config(path, "experiment.world", format!("cannot read {}", world_path.display())),
            other => Error::config(path, "experiment.world", other.to_string()),
        })?;
        if let Some(src) = experiment.source {
            world = world
                .with_source(Vec2::from(src))
                .map_err(|e| Error::config(path, "experiment.source", e.to_string()))?;
        }
        let mut team: TeamConfig = section(&raw, "team", path)?.unwrap_or_default();
        // A bare robot count without a ladder gets a geometric one.
        let team_tbl = raw.get("team").and_then(Value::as_table);
        if team_tbl.is_some_and(|t| t.contains_key("robots") && !t.contains_key("temperatures")) {
            team.temperatures = default_ladder(team.robots);
        }
        let scenario = Scenario {
            world,
            plume: section(&raw, "plume", path)?.unwrap_or_default(),
            sensors: section::<SensorNoise>(&raw, "sensors", path)?.unwrap_or_default(),
            estimator: section::<EstimatorParams>(&raw, "estimator", path)?.unwrap_or_default(),
            planner: section::<PlannerParams>(&raw, "langevin", path)?.unwrap_or_default(),
            team,
            kind: experiment.planner,
            surge_cast: section::<SurgeCastParams>(&raw, "surge_cast", path)?.unwrap_or_default(),
            infotaxis: section::<InfotaxisParams>(&raw, "infotaxis", path)?.unwrap_or_default(),
        };
        validate_sections(&scenario, path)?;
        Ok(Self { path: path.to_path_buf(), experiment, scenario, raw, base_dir: base_dir.to_path_buf() })
    }

    /// Returns a copy with one dotted key replaced. `team.tau` sets a
    /// homogeneous ladder at the given temperature.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        let parsed = parse_value(value);
        let mut raw = self.raw.clone();
        if key == "team.tau" {
            let robots = self.scenario.team.robots;
            let ladder = Value::Array(vec![parsed; robots]);
            set_dotted(&mut raw, "team.temperatures", ladder, &self.path)?;
        } else {
            set_dotted(&mut raw, key, parsed, &self.path)?;
        }
        let mut c = Self::from_table(raw, &self.path, &self.base_dir)?;
        // Edits made on the struct (command-line flags, with_planner) are not
        // in the raw table; keep them unless this override replaces them.
        let (mine, e) = (&self.experiment, &mut c.experiment);
        let keep = |field: &str| key != format!("experiment.{field}");
        if keep("planner") {
            e.planner = mine.planner;
        }
        if keep("n_trials") {
            e.n_trials = mine.n_trials;
        }
        if keep("base_seed") {
            e.base_seed = mine.base_seed;
        }
        if keep("output") {
            e.output = mine.output.clone();
        }
        if keep("workers") {
            e.workers = mine.workers;
        }
        if keep("trajectory_stride") {
            e.trajectory_stride = mine.trajectory_stride;
        }
        c.scenario.kind = e.planner;
        Ok(c)
    }

    pub fn with_planner(&self, kind: PlannerKind) -> Self {
        let mut c = self.clone();
        c.experiment.planner = kind;
        c.scenario.kind = kind;
        c
    }

    pub fn with_world(&self, world_path: &Path) -> Result<Self> {
        let mut raw = self.raw.clone();
        let abs = std::path::absolute(world_path).map_err(|e| Error::io(world_path, e))?;
        set_dotted(&mut raw, "experiment.world", Value::String(abs.display().to_string()), &self.path)?;
        Self::from_table(raw, &self.path, &self.base_dir)
    }

    /// The config as TOML, with every default filled in.
    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Full<'a> {
            experiment: &'a ExperimentSection,
            plume: &'a PlumeParams,
            sensors: &'a SensorNoise,
            estimator: &'a EstimatorParams,
            langevin: &'a PlannerParams,
            team: &'a TeamConfig,
            surge_cast: &'a SurgeCastParams,
            infotaxis: &'a InfotaxisParams,
        }
        let s = &self.scenario;
        let full = Full {
            experiment: &self.experiment,
            plume: &s.plume,
            sensors: &s.sensors,
            estimator: &s.estimator,
            langevin: &s.planner,
            team: &s.team,
            surge_cast: &s.surge_cast,
            infotaxis: &s.infotaxis,
        };
        toml::to_string(&full).unwrap_or_default()
    }
}

/// Geometric temperatures from 0.01 upward by factors of ten.
pub fn default_ladder(m: usize) -> Vec<f64> {
    (0..m).map(|i| 0.01 * 10f64.powi(i as i32)).collect()
}

fn section<T: DeserializeOwned>(raw: &Table, name: &str, path: &Path) -> Result<Option<T>> {
    match raw.get(name) {
        None => Ok(None),
        Some(v) => T::deserialize(v.clone())
            .map(Some)
            .map_err(|e| Error::config(path, name, e.message())),
    }
}

fn validate_sections(s: &Scenario, path: &Path) -> Result<()> {
    let checks: [(&str, Result<()>); 7] = [
        ("plume", s.plume.validate()),
        ("sensors", s.sensors.validate()),
        ("estimator", s.estimator.validate()),
        ("langevin", s.planner.validate()),
        ("team", s.team.validate()),
        ("surge_cast", s.surge_cast.validate()),
        ("infotaxis", s.infotaxis.validate()),
    ];
    for (name, r) in checks {
        if let Err(e) = r {
            return Err(Error::config(path, name, e.to_string()));
        }
    }
    Ok(())
}

/// Interprets override text as a TOML value, falling back to a string.
fn parse_value(text: &str) -> Value {
    let doc = format!("v = {text}");
    doc.parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

fn set_dotted(raw: &mut Table, key: &str, value: Value, path: &Path) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.len() < 2 || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(path, key, "override keys look like section.field"));
    }
    let mut tbl = raw;
    for p in &parts[..parts.len() - 1] {
        let entry = tbl.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        tbl = entry.as_table_mut().ok_or_else(|| Error::config(path, key, format!("'{p}' is not a table")))?;
    }
    tbl.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
