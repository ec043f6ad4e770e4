//! Reference schedules: a verifier that rederives everything from raw rates,
//! exact optima over slot-aligned sequential schedules, a greedy upper
//! bound, and exact optima for tiny batch instances.
//!
//! Oracle optima range over schedules that broadcast one item at full rate
//! in each slot, so they are upper bounds on the continuous optimum.

mod batch;
mod greedy;
mod search;
mod verify;

use thiserror::Error;

use crate::instance::{BroadcastInstance, InvalidInstance, ItemIdx};
use crate::rational::Rational;
use crate::schedule::{RateSchedule, Segment};
use crate::trace::{BroadcastTrace, TraceError};

pub use batch::{batch_opt_micro, priority_schedule, MicroOptimum};
pub use greedy::greedy_upper_bound;
pub use search::{brute_force_bopt, default_horizon, exhaustive_bopt, SearchLimits, DEFAULT_BUDGET};
pub use verify::verify_schedule;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Invalid(#[from] InvalidInstance),
    #[error("slot {slot} does not divide {what}")]
    NotSlotted { slot: Rational, what: String },
    #[error("oracle scale exceeded: {0}")]
    Scale(String),
    #[error("no schedule within {horizon} slots serves every request")]
    Infeasible { horizon: usize },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// A sequential full-rate schedule: each slot broadcasts at most one item.
/// An item's broadcasts are its consecutive groups of `length / slot`
/// occupied slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteSchedule {
    pub slot: Rational,
    pub slots: Vec<Option<ItemIdx>>,
}

impl DiscreteSchedule {
    /// Horizon in slots.
    pub fn horizon(&self) -> usize {
        self.slots.len()
    }

    /// The equivalent speed-1 rate schedule, merging runs of equal slots.
    pub fn to_rate_schedule(&self, n_items: usize) -> RateSchedule {
        let mut sched = RateSchedule::new(Rational::one(), n_items, false, Rational::zero());
        let mut k = 0;
        while k < self.slots.len() {
            let mut end = k + 1;
            while end < self.slots.len() && self.slots[end] == self.slots[k] {
                end += 1;
            }
            let mut seg = Segment::idle(n_items);
            if let Some(i) = self.slots[k] {
                seg.item_rates[i] = Rational::one();
            }
            sched.push(&self.slot * Rational::from(end as i64), seg);
            k = end;
        }
        sched
    }

    /// Verified trace of this schedule on `inst`.
    pub fn to_trace(&self, inst: &BroadcastInstance) -> Result<BroadcastTrace, TraceError> {
        verify_schedule(&self.to_rate_schedule(inst.items.len()), inst, &Rational::one())
    }
}

/// Outcome of an oracle run: the best flow found and a witness schedule.
#[derive(Clone, Debug)]
pub struct OracleResult {
    pub flow: Rational,
    pub schedule: DiscreteSchedule,
    /// Search nodes expanded (zero for constructive bounds).
    pub nodes: u64,
}

/// Largest slot dividing every item length and every arrival.
pub fn default_slot(inst: &BroadcastInstance) -> Rational {
    let g = inst
        .items
        .iter()
        .map(|i| &i.length)
        .chain(inst.requests.iter().map(|r| &r.arrival))
        .fold(Rational::zero(), |g, x| g.gcd(x));
    if g.is_zero() {
        Rational::one()
    } else {
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Item, Request};
    use crate::rational::rat;

    #[test]
    fn slot_is_gcd_of_lengths_and_arrivals() {
        let inst = BroadcastInstance {
            items: vec![Item { id: "A".into(), length: rat(3, 2) }, Item { id: "B".into(), length: rat(1, 1) }],
            requests: vec![Request { id: "S".into(), arrival: rat(1, 4), items: vec!["A".into()] }],
        };
        assert_eq!(default_slot(&inst), rat(1, 4));
    }

    #[test]
    fn discrete_runs_merge() {
        let d = DiscreteSchedule { slot: rat(1, 2), slots: vec![Some(0), Some(0), None, Some(1)] };
        let s = d.to_rate_schedule(2);
        assert_eq!(s.breakpoints, vec![rat(0, 1), rat(1, 1), rat(3, 2), rat(2, 1)]);
    }
}
