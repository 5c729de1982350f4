//! Exact and anytime branch-and-bound.
//!
//! The three model variants share one search and one feasible set; they
//! differ in how batch sizes are propagated:
//!
//! * `IA` checks per-family job counts exactly: the jobs left for a family
//!   must still split into batches within the size bounds.
//! * `G` only checks that the open batch can still reach its minimum size,
//!   but bounds its end time from the jobs it still has to absorb and uses
//!   that as the machine frontier.
//! * `H` combines the exact counts of `IA` with the span part of that end
//!   bound, applied to the open batch under batch availability.

mod search;
pub mod state;
pub mod symmetry;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Duration;
use thiserror::Error;

use crate::instance::{structural_violations, Violation};
use crate::schedule::Schedule;
use crate::variation::{Availability, Initiation, VariationConfig};
use crate::{Instance, Time};

pub use state::{lower_bound, MachineState, SearchContext, SearchState, StateBatch};
pub use symmetry::{apply_symmetry_breaking, SymmetryCut};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    #[default]
    IA,
    G,
    H,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 3] = [ModelVariant::IA, ModelVariant::G, ModelVariant::H];
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelVariant::IA => "ia",
            ModelVariant::G => "g",
            ModelVariant::H => "h",
        })
    }
}

impl FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ia" => Ok(ModelVariant::IA),
            "g" => Ok(ModelVariant::G),
            "h" => Ok(ModelVariant::H),
            other => Err(format!("unknown model variant `{other}` (expected ia, g or h)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub model_variant: ModelVariant,
    pub variation: VariationConfig,
    pub sizing_enabled: bool,
    /// Batch-label symmetry breaking (SB1 to SB3).
    pub sb: bool,
    /// Release-ordered jobs inside batches; batch availability with complete
    /// initiation only.
    pub sbt: bool,
    pub time_limit: Duration,
    pub node_limit: Option<u64>,
    /// Perturbs the tie-break between equally ranked children; 0 keeps job order.
    pub seed: u64,
    pub workers: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            model_variant: ModelVariant::IA,
            variation: VariationConfig::IPF,
            sizing_enabled: true,
            sb: false,
            sbt: false,
            time_limit: Duration::from_secs(10),
            node_limit: None,
            seed: 0,
            workers: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unknown,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unknown => "unknown",
        })
    }
}

/// An incumbent improvement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TracePoint {
    pub elapsed: Duration,
    pub objective: Time,
}

/// A lower-bound improvement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundPoint {
    pub elapsed: Duration,
    pub bound: Time,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub schedule: Option<Schedule>,
    pub objective: Option<Time>,
    pub lower_bound: Time,
    pub nodes: u64,
    pub elapsed: Duration,
    pub trace: Vec<TracePoint>,
    pub bound_trace: Vec<BoundPoint>,
}

impl SolveResult {
    pub fn to_json(&self) -> serde_json::Value {
        let points = |v: &mut dyn Iterator<Item = (Duration, Time)>, key: &str| {
            v.map(|(t, x)| serde_json::json!({ "ms": t.as_millis() as u64, key: x }))
                .collect::<Vec<_>>()
        };
        serde_json::json!({
            "status": self.status,
            "objective": self.objective,
            "lower_bound": self.lower_bound,
            "nodes": self.nodes,
            "elapsed_ms": self.elapsed.as_millis() as u64,
            "trace": points(&mut self.trace.iter().map(|p| (p.elapsed, p.objective)), "obj"),
            "bound_trace": points(&mut self.bound_trace.iter().map(|p| (p.elapsed, p.bound)), "bound"),
            "schedule": self.schedule.as_ref().map(|s| s.to_doc()),
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("invalid instance: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidInstance(Vec<Violation>),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("family {family} has {jobs} jobs, which cannot be split into batches of {min} to {max}")]
    InfeasibleInstance {
        family: usize,
        jobs: usize,
        min: usize,
        max: usize,
    },
}

pub fn validate_config(cfg: &SolverConfig) -> Result<(), SolveError> {
    if cfg.sbt && !(cfg.variation.availability == Availability::Batch && cfg.variation.initiation == Initiation::Complete) {
        return Err(SolveError::InvalidConfig(
            "sbt requires batch availability and complete initiation".into(),
        ));
    }
    if cfg.time_limit.is_zero() {
        return Err(SolveError::InvalidConfig("time limit must be positive".into()));
    }
    if cfg.workers == 0 {
        return Err(SolveError::InvalidConfig("at least one worker is required".into()));
    }
    Ok(())
}

/// Minimises TWCT within the configured limits.
pub fn solve(inst: &Instance, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    validate_config(cfg)?;
    let violations = structural_violations(inst);
    if !violations.is_empty() {
        return Err(SolveError::InvalidInstance(violations));
    }
    if cfg.sizing_enabled {
        for f in 0..inst.num_families {
            let (jobs, min, max) = (inst.family_size(f), inst.bounds.min[f], inst.bounds.max[f]);
            if !crate::instance::splittable(jobs, min, max) {
                return Err(SolveError::InfeasibleInstance { family: f, jobs, min, max });
            }
        }
    }
    let ctx = SearchContext::new(inst, cfg);
    Ok(search::run(&ctx))
}
