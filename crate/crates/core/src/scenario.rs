//! Experiment scenario: topology, request classes, load schedule and
//! hyperparameters, stored as a versioned JSON document. An empty object
//! deserializes to the full reference defaults, so scenario files only carry
//! what they change.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::Hyper;
use crate::load::LoadSchedule;
use crate::slice::NsprClass;
use crate::topology::TopologyConfig;

pub const SCENARIO_VERSION: u32 = 1;

fn default_version() -> u32 {
    SCENARIO_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_version")]
    pub version: u32,
    pub topology: TopologyConfig,
    pub classes: Vec<NsprClass>,
    pub schedule: LoadSchedule,
    pub hyper: Hyper,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            version: SCENARIO_VERSION,
            topology: TopologyConfig::default(),
            classes: vec![NsprClass::volatile(), NsprClass::long_term()],
            schedule: LoadSchedule::default(),
            hyper: Hyper::default(),
        }
    }
}

impl Scenario {
    /// Desk-scale scenario: one core DC of four servers plus two edge DCs of
    /// two servers each, 40% baseline load, and learning rates sized for the
    /// small substrate.
    pub fn reduced() -> Self {
        Scenario {
            version: SCENARIO_VERSION,
            topology: TopologyConfig {
                edc_count: 2,
                cdc_count: 1,
                ccp_count: 0,
                servers_per_edc: 2,
                servers_per_cdc: 4,
                ..TopologyConfig::default()
            },
            classes: vec![NsprClass::volatile(), NsprClass::long_term()],
            schedule: LoadSchedule::default(),
            hyper: Hyper {
                actor_lr: 2e-3,
                critic_lr: 1e-2,
                ..Hyper::default()
            },
        }
    }

    /// Every violation across all sections; `Ok` carries non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>, Vec<String>> {
        let mut errs = Vec::new();
        let mut warnings = Vec::new();
        if self.version != SCENARIO_VERSION {
            errs.push(format!(
                "scenario: unsupported version {} (expected {SCENARIO_VERSION})",
                self.version
            ));
        }
        if let Err(mut e) = self.topology.validate() {
            errs.append(&mut e);
        }
        if self.classes.is_empty() {
            errs.push("scenario: at least one request class is required".into());
        }
        let mut names = std::collections::HashSet::new();
        for class in &self.classes {
            if let Err(mut e) = class.validate() {
                errs.append(&mut e);
            }
            if !names.insert(class.name.clone()) {
                errs.push(format!("scenario: duplicate class name '{}'", class.name));
            }
        }
        if let Err(mut e) = self.schedule.validate(&self.classes) {
            errs.append(&mut e);
        }
        match self.hyper.validate() {
            Ok(mut w) => warnings.append(&mut w),
            Err(mut e) => errs.append(&mut e),
        }
        if errs.is_empty() {
            Ok(warnings)
        } else {
            Err(errs)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        Ok(scenario)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

/// Reads and fully validates a scenario file. Validation problems are
/// enumerated, not reported one at a time. Warnings go to stderr.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let scenario = Scenario::from_json(&text)?;
    match scenario.validate() {
        Ok(warnings) => {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            Ok(scenario)
        }
        Err(errs) => Err(ScenarioError::Invalid(errs)),
    }
}

pub fn dump_scenario(scenario: &Scenario, path: &Path) -> Result<(), ScenarioError> {
    std::fs::write(path, scenario.to_json()).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}
