//! Versioned JSON report shared by the command-line tool and the tests.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ergodicity::AnalysisReport;
use crate::netmodel::Regime;
use crate::ssa::GrowthCheck;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "aicert";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Certified,
    Refuted,
    OracleDisagreement,
    WithinTolerance,
    OutOfTolerance,
}

impl Outcome {
    /// Process exit code: 0 success, 1 refuted or off target, 3 disagreement.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Certified | Outcome::WithinTolerance => 0,
            Outcome::Refuted | Outcome::OutOfTolerance => 1,
            Outcome::OracleDisagreement => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub mu: f64,
    pub theta: f64,
    pub eta: f64,
    pub k: f64,
    pub setpoint: f64,
    pub controlled: String,
    pub horizon: f64,
    pub replicates: usize,
    pub burn_in: f64,
    pub seed: u64,
    pub events: u64,
    pub mean: f64,
    /// Absent when undefined (a single replicate).
    pub stderr: Option<f64>,
    pub relative_error: f64,
    /// `max(0.05 setpoint, 3 stderr)`; absent with `stderr`.
    pub tolerance: Option<f64>,
    pub within_tolerance: bool,
    pub second_moment: f64,
    pub growth: GrowthCheck,
    /// Certified lower bound on `mu / theta`, when the open loop admits one.
    pub certified_bound: Option<f64>,
    pub warnings: Vec<String>,
}

/// Wall-clock seconds; excluded from determinism comparisons.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub analysis_seconds: f64,
    pub simulation_seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub input: InputInfo,
    pub regime: Regime,
    pub outcome: Outcome,
    pub analysis: Option<AnalysisReport>,
    pub simulation: Option<SimulationSummary>,
    pub timing: Timing,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ReportDocument {
    pub fn new(path: &str, input: &[u8], regime: Regime, outcome: Outcome) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: ToolInfo { name: TOOL_NAME.into(), version: TOOL_VERSION.into() },
            input: InputInfo { path: path.into(), sha256: sha256_hex(input) },
            regime,
            outcome,
            analysis: None,
            simulation: None,
            timing: Timing::default(),
        }
    }

    /// Outcome implied by an analysis report.
    pub fn outcome_of(report: &AnalysisReport) -> Outcome {
        if report.oracle_crosschecks.iter().any(|c| !c.agrees) {
            Outcome::OracleDisagreement
        } else if report.verdicts.overall {
            Outcome::Certified
        } else {
            Outcome::Refuted
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the timing block zeroed, for byte comparisons.
    pub fn to_json_untimed(&self) -> String {
        let mut copy = self.clone();
        copy.timing = Timing::default();
        copy.to_json()
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
