//! Exact simulation of pull-based broadcast scheduling with request
//! dependencies: B-EquiSet and its variants, the batch-scheduling reduction,
//! brute-force optimal schedules, and adversarial workloads.

#![allow(clippy::result_large_err)]

pub mod broadcast_sim;
pub mod checks;
pub mod instance;
pub mod jobsched;
pub mod oracle;
pub mod rational;
pub mod reduction;
pub mod schedule;
pub mod trace;
pub mod workloads;

pub use instance::{BroadcastInstance, Item, ItemId, Request, RequestId};
pub use rational::{rat, Rational};
pub use schedule::{RateSchedule, Segment};
pub use trace::{BroadcastTrace, TraceFile};
