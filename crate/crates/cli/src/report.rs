//! Report payloads. Every report serializes as `{"schema": 1, "command":
//! ..., ...}` and parses back into the same types.

use maxent_core::counter::CountEstimate;
use maxent_core::sampler::SampleBatch;
use maxent_core::solver::SolveResult;
use serde::{Deserialize, Serialize};

use crate::atsp::AtspReport;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub schema: u32,
    #[serde(flatten)]
    pub report: Report,
}

impl Envelope {
    pub fn new(report: Report) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            report,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Report {
    Solve(SolveReport),
    SolveKl(SolveReport),
    Count(CountReport),
    CountMu(CountReport),
    Sample(SampleReport),
    Verify(VerifyReport),
    AtspDemo(AtspReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub m: usize,
    pub theta: Vec<f64>,
    pub eta: f64,
    /// `"given"` or `"certified"`.
    pub eta_source: String,
    pub solver: String,
    pub result: SolveResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub m: usize,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    pub estimate: CountEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub method: String,
    /// Ground-set indices of each drawn member.
    pub member_indices: Vec<Vec<usize>>,
    pub batch: SampleBatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub gap: f64,
    pub bound: f64,
    pub f_value: f64,
}
