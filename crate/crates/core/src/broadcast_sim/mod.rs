//! Event-driven broadcast simulators producing exact traces.
//!
//! Rates are piecewise constant and only change at request arrivals and at
//! broadcast completions, so every simulator advances from event to event in
//! closed form. At a shared timestamp completions are applied first, then
//! arrivals, then rates are recomputed; a request arriving exactly when a
//! broadcast completes is therefore not served by it.

mod baseline;
mod edf;
mod equiset;
mod state;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::instance::{InvalidInstance, ItemIdx, ReqIdx};
use crate::rational::Rational;

pub use baseline::{simulate_ignore_deps, Baseline};
pub use edf::{simulate_b_equiset_edf, EdfOutcome, VirtualRelease};
pub use equiset::{equiset_allocation, simulate_b_equiset};
pub use state::SimState;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Invalid(#[from] InvalidInstance),
    #[error("parameter {name} must be > 0, got {value}")]
    NonPositive { name: &'static str, value: Rational },
    #[error("inner policy broke its contract for request {request} at {at}: {reason}")]
    PolicyContract { request: ReqIdx, at: Rational, reason: String },
    #[error("simulation stalled at {0}: alive requests but no positive rate and no pending arrival")]
    Stalled(Rational),
}

pub(crate) fn require_positive(name: &'static str, value: &Rational) -> Result<(), SimError> {
    if value.is_positive() {
        Ok(())
    } else {
        Err(SimError::NonPositive { name, value: value.clone() })
    }
}

/// A caller-supplied split of a request's share over its alive items. Must be
/// deterministic and depend only on its arguments.
pub type SplitFn = dyn Fn(&[ItemIdx], &Rational) -> Vec<Rational> + Send + Sync;

/// How B-EquiSet divides a request's share among the request's alive items.
#[derive(Clone, Default)]
pub enum InnerPolicy {
    /// Even split over the alive items.
    #[default]
    EquiWithin,
    /// Whole share to the lowest-indexed alive item.
    MinIdx,
    Custom(Arc<SplitFn>),
}

impl fmt::Debug for InnerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InnerPolicy::EquiWithin => f.write_str("EquiWithin"),
            InnerPolicy::MinIdx => f.write_str("MinIdx"),
            InnerPolicy::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl InnerPolicy {
    /// Per-item rates for a request with the given alive items (sorted) and
    /// share. Custom splits are checked against the contract.
    pub fn split(&self, alive: &[ItemIdx], share: &Rational) -> Result<Vec<Rational>, String> {
        match self {
            InnerPolicy::EquiWithin => {
                let each = share / Rational::from(alive.len() as i64);
                Ok(vec![each; alive.len()])
            }
            InnerPolicy::MinIdx => {
                let mut v = vec![Rational::zero(); alive.len()];
                v[0] = share.clone();
                Ok(v)
            }
            InnerPolicy::Custom(f) => {
                let v = f(alive, share);
                if v.len() != alive.len() {
                    return Err(format!("returned {} rates for {} items", v.len(), alive.len()));
                }
                if v.iter().any(Rational::is_negative) {
                    return Err("negative rate".into());
                }
                let total: Rational = v.iter().sum();
                if &total != share {
                    return Err(format!("rates sum to {total}, share is {share}"));
                }
                Ok(v)
            }
        }
    }
}
