use crate::instance::{BroadcastInstance, ItemIdx};
use crate::rational::Rational;
use crate::schedule::{RateSchedule, Segment};
use crate::trace::BroadcastTrace;

use super::equiset::drive;
use super::{require_positive, SimError, SimState};

/// Dependency-ignoring schedulers: they see only which items are wanted,
/// never which requests need them together.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Baseline {
    /// Equal bandwidth for every alive item.
    EquiPerItem,
    /// Full bandwidth to one alive item at a time, cycling in index order.
    /// A slice lasts until `quantum` units of work are done or the item's
    /// broadcast completes.
    RoundRobin { quantum: Rational },
}

impl Default for Baseline {
    fn default() -> Self {
        Baseline::RoundRobin { quantum: Rational::one() }
    }
}

fn equi_per_item(state: &SimState<'_>, speed: &Rational) -> Segment {
    let alive = state.alive_items();
    let mut seg = Segment::idle(state.resolved().n_items());
    if !alive.is_empty() {
        let each = speed / Rational::from(alive.len() as i64);
        for i in alive {
            seg.item_rates[i] = each.clone();
        }
    }
    seg
}

/// Next alive item strictly after `last` in cyclic index order.
fn next_in_cycle(alive: &[ItemIdx], last: Option<ItemIdx>) -> Option<ItemIdx> {
    let first = *alive.first()?;
    Some(match last {
        Some(l) => alive.iter().copied().find(|&i| i > l).unwrap_or(first),
        None => first,
    })
}

fn round_robin(inst: &BroadcastInstance, speed: &Rational, quantum: &Rational) -> Result<BroadcastTrace, SimError> {
    require_positive("speed", speed)?;
    require_positive("quantum", quantum)?;
    let res = inst.resolve()?;
    let n = res.n_items();
    let mut state = SimState::new(&res);
    let mut schedule = RateSchedule::new(speed.clone(), n, false, Rational::zero());
    let mut current: Option<ItemIdx> = None;
    let mut last: Option<ItemIdx> = None;
    let mut slice_left = Rational::zero();
    state.admit_arrivals();
    while !state.finished() {
        if current.is_none() {
            current = next_in_cycle(&state.alive_items(), last);
            slice_left = quantum.clone();
        }
        let mut seg = Segment::idle(n);
        if let Some(i) = current {
            seg.item_rates[i] = speed.clone();
        }
        let mut next = state.next_event(&seg.item_rates).ok_or_else(|| SimError::Stalled(state.now.clone()))?;
        if current.is_some() {
            next = next.min(&state.now + &slice_left / speed);
        }
        if current.is_some() {
            slice_left -= speed * (&next - &state.now);
        }
        state.advance_to(&next, &seg.item_rates);
        schedule.push(next, seg);
        let done = state.complete_broadcasts();
        state.admit_arrivals();
        if let Some(i) = current {
            if slice_left.is_zero() || done.contains(&i) {
                last = Some(i);
                current = None;
            }
        }
    }
    Ok(BroadcastTrace::from_parts(inst, schedule, state.broadcasts, state.completions))
}

/// Simulates a dependency-ignoring baseline at `speed`. Request completions
/// still follow the dependency-aware rule. The schedule is not attributed
/// to requests.
pub fn simulate_ignore_deps(
    inst: &BroadcastInstance,
    speed: &Rational,
    baseline: &Baseline,
) -> Result<BroadcastTrace, SimError> {
    match baseline {
        Baseline::EquiPerItem => drive(inst, speed, false, |st| Ok(equi_per_item(st, speed))),
        Baseline::RoundRobin { quantum } => round_robin(inst, speed, quantum),
    }
}
