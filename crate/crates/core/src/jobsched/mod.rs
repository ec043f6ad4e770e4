//! Batches of two-phase jobs: a sequential phase that progresses at unit
//! rate whatever it is allotted, then a parallel phase that progresses at
//! its processor allocation. Includes Equi, Equi∘A, the per-batch job
//! reductions, and the delayed-schedule construction.

mod delayed;
mod engine;
mod profile;
mod reduce;
mod trace;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

pub use delayed::construct_delayed_schedule;
pub use engine::{simulate_equi, simulate_equi_compose_a, EquiJobs, JobPolicy, MinIdxJobs};
pub use profile::{CapacityProfile, Piece};
pub use reduce::{build_jdoubleprime, build_jprime, feasible_for, Feasibility};
pub use trace::{JobTrace, JobTraceFile};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeqParJob {
    pub id: String,
    pub seq: Rational,
    pub par: Rational,
    /// Keeps the job alive after its parallel work is done, until the
    /// policy's release time.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub sticky: bool,
}

impl SeqParJob {
    pub fn new(id: impl Into<String>, seq: Rational, par: Rational) -> Self {
        SeqParJob { id: id.into(), seq, par, sticky: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Batch {
    pub id: String,
    pub arrival: Rational,
    pub jobs: Vec<SeqParJob>,
}

/// The batch-instance file: processor count plus batches.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchInstance {
    pub processors: Rational,
    pub batches: Vec<Batch>,
}

impl BatchInstance {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("batch instance serializes")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JobError {
    #[error("invalid batches: {0}")]
    Invalid(String),
    #[error("processor count must be > 0, got {0}")]
    NonPositiveProcessors(Rational),
    #[error("inner policy broke its contract for batch {batch} at {at}: {reason}")]
    PolicyContract { batch: usize, at: Rational, reason: String },
    #[error("sticky job {job} of batch {batch} has no release time")]
    NoRelease { batch: usize, job: usize },
    #[error("simulation stalled at {0}")]
    Stalled(Rational),
    #[error("trace does not match the batches: {0}")]
    Mismatch(String),
    #[error("construction violated for job {job}: {reason}")]
    ConstructionViolated { job: usize, reason: String },
}

/// Checks arrival and work signs, non-empty batches, and id uniqueness.
pub fn validate_batches(batches: &[Batch]) -> Result<(), JobError> {
    let mut batch_ids = HashSet::new();
    for (b, batch) in batches.iter().enumerate() {
        if !batch_ids.insert(&batch.id) {
            return Err(JobError::Invalid(format!("duplicate batch id {}", batch.id)));
        }
        if batch.arrival.is_negative() {
            return Err(JobError::Invalid(format!("batch {b} has negative arrival")));
        }
        if batch.jobs.is_empty() {
            return Err(JobError::Invalid(format!("batch {} is empty", batch.id)));
        }
        let mut ids = HashSet::new();
        for job in &batch.jobs {
            if !ids.insert(&job.id) {
                return Err(JobError::Invalid(format!("duplicate job id {} in batch {}", job.id, batch.id)));
            }
            if job.seq.is_negative() || job.par.is_negative() {
                return Err(JobError::Invalid(format!("job {} of batch {} has negative work", job.id, batch.id)));
            }
        }
    }
    Ok(())
}

/// Wraps each `(arrival, job)` as a singleton batch named after the job.
pub fn singleton_batches(jobs: &[(Rational, SeqParJob)]) -> Vec<Batch> {
    jobs.iter().map(|(a, j)| Batch { id: j.id.clone(), arrival: a.clone(), jobs: vec![j.clone()] }).collect()
}
