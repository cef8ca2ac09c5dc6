//! Scenario runner: builds a window family, runs experiments and assembles a
//! report with CSV evidence.

mod experiments;
mod scenario;

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::doubled::DoubledError;
use crate::functions::FunctionError;
use crate::hochschild::HochschildError;
use crate::operators::OperatorError;
use crate::space::SpaceError;

pub use experiments::Outcome;
pub use scenario::{Experiment, FamilySpec, FunctionSpec, MetricSpec, OperatorSpec, PointRef, Scenario, WindowContext};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
/// JSON schema for scenario files.
pub const SCENARIO_SCHEMA: &str = include_str!("../../schema/scenario.schema.json");

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {message}")]
    Config {
        message: String,
        line: Option<usize>,
        column: Option<usize>,
    },
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Doubled(#[from] DoubledError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error(transparent)]
    Hochschild(#[from] HochschildError),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl HarnessError {
    pub fn config(message: impl Into<String>) -> Self {
        HarnessError::Config {
            message: message.into(),
            line: None,
            column: None,
        }
    }

    fn is_nonconvergence(&self) -> bool {
        matches!(
            self,
            HarnessError::Operator(OperatorError::NoConvergence { .. })
                | HarnessError::Hochschild(HochschildError::NoConvergence { .. })
                | HarnessError::Hochschild(HochschildError::Operator(OperatorError::NoConvergence { .. }))
                | HarnessError::Function(FunctionError::InconclusiveHorizon(_))
                | HarnessError::Hochschild(HochschildError::Function(FunctionError::InconclusiveHorizon(_)))
        )
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_nonconvergence() {
            EXIT_NONCONVERGENCE
        } else {
            EXIT_CONFIG
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config { .. } => "config",
            HarnessError::Io(_) => "io",
            _ if self.is_nonconvergence() => "nonconvergence",
            HarnessError::Space(_) => "space",
            HarnessError::Doubled(_) => "doubled",
            HarnessError::Operator(_) => "operator",
            HarnessError::Function(_) => "function",
            HarnessError::Hochschild(_) => "hochschild",
        }
    }

    /// Machine-readable form for stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let (line, column) = match self {
            HarnessError::Config { line, column, .. } => (*line, *column),
            _ => (None, None),
        };
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "line": line,
            "column": column,
            "exit_code": self.exit_code(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub id: String,
    pub kind: &'static str,
    pub verdict: Option<String>,
    /// Every invariant checked by the experiment held.
    pub passed: bool,
    pub tol: f64,
    /// CSV files relative to the output directory.
    pub evidence: Vec<String>,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    InvariantViolation,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub scenario: Scenario,
    pub seed: u64,
    pub status: RunStatus,
    pub experiments: Vec<ExperimentReport>,
    /// Seconds since the Unix epoch; the only field that varies between runs.
    pub generated_at: u64,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            RunStatus::Ok => 0,
            RunStatus::InvariantViolation => EXIT_INVARIANT,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs every experiment. With an output directory, CSV evidence and
/// `report.json` are written there.
pub fn run(scenario: &Scenario, out: Option<&Path>) -> Result<Report, HarnessError> {
    scenario.validate()?;
    let family = if scenario.experiments.is_empty() {
        Vec::new()
    } else {
        scenario.build_family()?
    };
    let outcomes: Vec<Result<Outcome, HarnessError>> = scenario
        .experiments
        .par_iter()
        .map(|e| experiments::run_experiment(scenario, &family, e))
        .collect();
    let mut reports = Vec::with_capacity(outcomes.len());
    for (e, outcome) in scenario.experiments.iter().zip(outcomes) {
        let outcome = outcome?;
        let mut evidence = Vec::new();
        for (name, bytes) in &outcome.files {
            let rel = format!("{}/{}", e.id(), name);
            if let Some(dir) = out {
                let path = dir.join(&rel);
                std::fs::create_dir_all(path.parent().expect("nested path"))?;
                std::fs::write(&path, bytes)?;
            }
            evidence.push(rel);
        }
        reports.push(ExperimentReport {
            id: e.id().to_string(),
            kind: e.kind(),
            verdict: outcome.verdict,
            passed: outcome.passed,
            tol: outcome.tol,
            evidence,
            details: outcome.details,
        });
    }
    let status = if reports.iter().all(|r| r.passed) {
        RunStatus::Ok
    } else {
        RunStatus::InvariantViolation
    };
    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        scenario: scenario.clone(),
        seed: scenario.seed,
        status,
        experiments: reports,
        generated_at: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), report.to_json())?;
    }
    Ok(report)
}

/// Runs a single experiment against a prepared family.
pub fn run_one(scenario: &Scenario, family: &[WindowContext], e: &Experiment) -> Result<Outcome, HarnessError> {
    experiments::run_experiment(scenario, family, e)
}

/// Scenarios shipped with the crate, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("outer_tent", include_str!("../../scenarios/outer_tent.json")),
    ("commutator_bound", include_str!("../../scenarios/commutator_bound.json")),
    ("classification", include_str!("../../scenarios/classification.json")),
    ("hochschild_identities", include_str!("../../scenarios/hochschild_identities.json")),
    ("metrics", include_str!("../../scenarios/metrics.json")),
    ("empty", include_str!("../../scenarios/empty.json")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse() {
        for (name, text) in BUNDLED {
            let s = Scenario::from_json(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&s.name, name);
        }
    }

    #[test]
    fn empty_scenario_reports_ok() {
        let dir = tempfile::tempdir().unwrap();
        let s = Scenario::from_json(bundled("empty").unwrap()).unwrap();
        let report = run(&s, Some(dir.path())).unwrap();
        assert_eq!(report.exit_code(), 0);
        assert!(report.experiments.is_empty());
        assert!(dir.path().join("report.json").exists());
    }

    #[test]
    fn errors_map_to_exit_codes() {
        let e = HarnessError::Function(FunctionError::InconclusiveHorizon("short".into()));
        assert_eq!(e.exit_code(), EXIT_NONCONVERGENCE);
        assert_eq!(e.to_json()["error"], "nonconvergence");
        assert_eq!(HarnessError::config("x").exit_code(), EXIT_CONFIG);
    }
}
