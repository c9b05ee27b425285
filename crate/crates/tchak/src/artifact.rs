//! Self-describing JSON artifacts.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use tchak_core::caratheodory::ReduceOptions;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Feasibility threshold for cone and span tests.
    pub tol: f64,
    pub rank_tol: f64,
    pub weight_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol: tchak_core::DEFAULT_FEASIBILITY_TOL,
            rank_tol: tchak_core::DEFAULT_RANK_TOL,
            weight_tol: tchak_core::DEFAULT_WEIGHT_TOL,
        }
    }
}

impl Tolerances {
    pub fn reduce(&self) -> ReduceOptions {
        ReduceOptions { weight_tol: self.weight_tol, rank_tol: self.rank_tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// A certificate proves that no solution exists.
    Infeasible,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Infeasible => 2,
        }
    }
}

/// Everything needed to recompute a result.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub kind: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub inputs: Value,
    pub params: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub kind: String,
    pub version: String,
    pub status: Status,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub params: Value,
    pub inputs: Value,
    pub result: Value,
}

impl Artifact {
    pub fn new(job: &Job, status: Status, result: Value) -> Self {
        Self {
            kind: job.kind.clone(),
            version: VERSION.to_string(),
            status,
            seed: job.seed,
            tolerances: job.tolerances,
            params: job.params.clone(),
            inputs: job.inputs.clone(),
            result,
        }
    }

    pub fn job(&self) -> Job {
        Job {
            kind: self.kind.clone(),
            seed: self.seed,
            tolerances: self.tolerances,
            inputs: self.inputs.clone(),
            params: self.params.clone(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec_pretty(self).context("cannot serialize artifact")?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        let art = serde_json::from_slice(&bytes)
            .map_err(|e| anyhow!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))?;
        Ok((art, bytes))
    }
}
