//! Scenario files: a TOML description of a platform, its comparisons and
//! run settings.
//!
//! ```toml
//! spec = 1
//!
//! [platform]
//! accrual_rate = 500.0
//! time_unit = "year"
//!
//! [[comparison]]
//! id = "E1"
//! alpha = 0.025
//! power = 0.9
//! allocation_ratio = 1.0
//! open_time = 0.0
//! e0 = 264
//! outcome = { type = "survival", lambda0 = 0.693, hazard_ratio = 0.75 }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::correlation::{build_correlation_matrix, OverlapNormalization};
use crate::error::Error;
use crate::matrix::CorrelationMatrix;
use crate::model::{AccrualModel, ComparisonSpec, ControlTarget, OutcomeSpec, OverlapInfo, PlatformSchedule};
use crate::sim::{predict_timeline, ArrivalProcess, SimConfig, Truth, DEFAULT_REPLICATIONS};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
}

impl From<Error> for ScenarioError {
    fn from(e: Error) -> Self {
        ScenarioError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformSection {
    pub accrual_rate: f64,
    #[serde(default = "default_time_unit")]
    pub time_unit: String,
    #[serde(default)]
    pub accrual_model: AccrualModel,
    #[serde(default)]
    pub arrivals: ArrivalProcess,
    #[serde(default)]
    pub normalization: OverlapNormalization,
}

fn default_time_unit() -> String {
    "year".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonSection {
    pub id: String,
    pub alpha: f64,
    pub power: f64,
    pub allocation_ratio: f64,
    #[serde(default)]
    pub open_time: f64,
    pub e0: Option<u64>,
    pub n0: Option<u64>,
    pub accrual_duration: Option<f64>,
    /// Data-generating effect for simulation.
    #[serde(default)]
    pub truth: Option<Truth>,
    pub outcome: OutcomeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapSection {
    pub pair: [String; 2],
    pub shared: f64,
    /// Control totals of the two comparisons; defaults to their targets.
    pub totals: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub truth: Truth,
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

fn default_seed() -> u64 {
    1
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self { replications: default_replications(), seed: default_seed(), truth: Truth::Null }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub target_fwer: Option<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
}

fn default_max_iter() -> usize {
    50
}

fn default_damping() -> f64 {
    1.0
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { target_fwer: None, max_iter: default_max_iter(), damping: default_damping() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    spec: u32,
    platform: PlatformSection,
    #[serde(rename = "comparison")]
    comparisons: Vec<ComparisonSection>,
    #[serde(default, rename = "overlap")]
    overlaps: Vec<OverlapSection>,
    #[serde(default)]
    simulation: SimulationSection,
    #[serde(default)]
    solver: SolverSection,
}

/// A parsed and validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub schedule: PlatformSchedule,
    pub platform: PlatformSection,
    /// Explicit overlaps; when empty they are predicted from the timeline.
    pub overlaps: Vec<OverlapInfo>,
    pub truths: Vec<Truth>,
    pub simulation: SimulationSection,
    pub solver: SolverSection,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        if file.spec != SCHEMA_VERSION {
            return Err(ScenarioError::Invalid(format!(
                "unsupported scenario version spec = {} (expected {SCHEMA_VERSION})",
                file.spec
            )));
        }
        let mut comparisons = Vec::with_capacity(file.comparisons.len());
        let mut truths = Vec::with_capacity(file.comparisons.len());
        for c in &file.comparisons {
            let target = match (c.e0, c.n0) {
                (Some(e), None) => ControlTarget::Events(e),
                (None, Some(n)) => ControlTarget::Patients(n),
                _ => {
                    return Err(ScenarioError::Invalid(format!(
                        "comparison {}: give exactly one of e0 or n0",
                        c.id
                    )))
                }
            };
            comparisons.push(ComparisonSpec {
                id: c.id.clone(),
                alpha: c.alpha,
                power: c.power,
                allocation_ratio: c.allocation_ratio,
                outcome: c.outcome,
                open_time: c.open_time,
                target,
                accrual_duration: c.accrual_duration,
            });
            truths.push(c.truth.unwrap_or(file.simulation.truth));
        }
        let schedule = PlatformSchedule::new(file.platform.accrual_rate, file.platform.accrual_model, comparisons)?;

        let mut overlaps = Vec::with_capacity(file.overlaps.len());
        for o in &file.overlaps {
            let index = |id: &str| {
                schedule
                    .index_of(id)
                    .ok_or_else(|| ScenarioError::Invalid(format!("overlap refers to unknown comparison {id}")))
            };
            let (i, j) = (index(&o.pair[0])?, index(&o.pair[1])?);
            if i == j {
                return Err(ScenarioError::Invalid(format!("overlap pairs {} with itself", o.pair[0])));
            }
            let [ti, tj] = o.totals.unwrap_or([
                schedule.comparisons[i].target.count() as f64,
                schedule.comparisons[j].target.count() as f64,
            ]);
            overlaps.push(OverlapInfo::new(i, j, o.shared, ti, tj)?);
        }
        if file.simulation.replications == 0 {
            return Err(ScenarioError::Invalid("simulation.replications must be at least 1".into()));
        }

        Ok(Self {
            schedule,
            platform: file.platform,
            overlaps,
            truths,
            simulation: file.simulation,
            solver: file.solver,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text).map_err(|e| match e {
            ScenarioError::Parse(msg) => ScenarioError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Moves a comparison's opening time, for sweeping arm timings.
    pub fn set_open_time(&mut self, id: &str, time: f64) -> Result<(), ScenarioError> {
        let i = self
            .schedule
            .index_of(id)
            .ok_or_else(|| ScenarioError::Invalid(format!("unknown comparison {id}")))?;
        self.schedule.comparisons[i].open_time = time;
        self.schedule.validate()?;
        Ok(())
    }

    pub fn normalization(&self) -> OverlapNormalization {
        self.platform.normalization
    }

    /// Overlaps given in the file, or predicted from the timeline.
    pub fn resolved_overlaps(&self) -> crate::Result<Vec<OverlapInfo>> {
        if !self.overlaps.is_empty() || self.schedule.len() == 1 {
            return Ok(self.overlaps.clone());
        }
        Ok(predict_timeline(&self.schedule)?.overlaps())
    }

    pub fn correlation(&self) -> crate::Result<CorrelationMatrix> {
        build_correlation_matrix(&self.schedule, &self.resolved_overlaps()?, self.normalization())
    }

    pub fn sim_config(&self) -> crate::Result<SimConfig> {
        Ok(SimConfig::new(self.schedule.clone(), self.truths.clone(), self.simulation.replications, self.simulation.seed)?
            .with_arrivals(self.platform.arrivals))
    }
}
