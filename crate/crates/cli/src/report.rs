//! Versioned run reports: what was run, with which configuration, and what
//! came out.

use serde::{Deserialize, Serialize};
use spp_core::spp::{AlphaChoice, MuChoice};
use spp_core::{CpReport, DistBoundReport, ProjectionResult, SharpnessReport, SppReport, SubtransReport, Vector};

use crate::problem::ProblemFile;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: CommandEcho,
    pub config: Config,
    pub seed: u64,
    /// `ok`, or `certificate_failed` when the run finished but its
    /// certificate did not pass.
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemFile>,
    /// Original row norms; the solvers work with unit-normalized rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_scales: Option<Vec<f64>>,
    pub report: Body,
    /// Wall-clock time, only with `--timing` (it would break byte-identical reruns).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    CertificateFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandEcho {
    pub name: String,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub tol: f64,
    pub active_tol: f64,
    pub mu: MuChoice,
    pub alpha: AlphaChoice,
    pub samples: usize,
    pub max_doublings: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Body {
    Project {
        z: Vector,
        result: ProjectionResult,
    },
    Sharpness(SharpnessReport),
    SolveLp {
        /// `||c||`; the solve uses `x* = c / ||c||`.
        objective_scale: f64,
        /// `<c, solution>` in the units of the input objective.
        objective_value: f64,
        spp: SppReport,
    },
    SolveCp(CpReport),
    /// A solve whose final certificate failed; the attempt is kept for inspection.
    Failed {
        reason: String,
        spp: Option<SppReport>,
    },
    DistBound(DistBoundReport),
    Subtrans(SubtransReport),
    Verify(VerifySummary),
    Bench(BenchSummary),
    Gen {
        index: u64,
        instance_seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub target: String,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchFailure {
    pub index: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub n: usize,
    pub m: usize,
    pub count: u64,
    pub matches: u64,
    pub failures: Vec<BenchFailure>,
    pub max_value_gap: f64,
    pub max_projection_gap: f64,
    pub total_doublings: u64,
    pub fallbacks: u64,
}
