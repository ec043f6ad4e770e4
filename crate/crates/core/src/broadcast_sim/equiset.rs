use crate::instance::BroadcastInstance;
use crate::rational::Rational;
use crate::schedule::{RateSchedule, Segment};
use crate::trace::BroadcastTrace;

use super::{require_positive, InnerPolicy, SimError, SimState};

/// B-EquiSet rates for the current state: each alive request gets
/// `speed / #alive` and the inner policy spreads it over its alive items.
/// Per-item rates are the sums of the per-request contributions.
pub fn equiset_allocation(state: &SimState<'_>, speed: &Rational, policy: &InnerPolicy) -> Result<Segment, SimError> {
    let n = state.resolved().n_items();
    let alive = state.alive_requests();
    let mut seg = Segment::idle(n);
    if alive.is_empty() {
        return Ok(seg);
    }
    let share = speed / Rational::from(alive.len() as i64);
    for j in alive {
        let items = state.alive_items_of(j);
        let rates = policy.split(&items, &share).map_err(|reason| SimError::PolicyContract {
            request: j,
            at: state.now.clone(),
            reason,
        })?;
        for (i, r) in items.into_iter().zip(rates) {
            if r.is_positive() {
                seg.item_rates[i] += &r;
                seg.pair_rates.push((j, i, r));
            }
        }
    }
    Ok(seg)
}

/// Runs the event loop with a state-dependent allocation rule until every
/// request is served.
pub(crate) fn drive<F>(
    inst: &BroadcastInstance,
    speed: &Rational,
    attributed: bool,
    mut allocate: F,
) -> Result<BroadcastTrace, SimError>
where
    F: FnMut(&SimState<'_>) -> Result<Segment, SimError>,
{
    require_positive("speed", speed)?;
    let res = inst.resolve()?;
    let mut state = SimState::new(&res);
    let mut schedule = RateSchedule::new(speed.clone(), res.n_items(), attributed, Rational::zero());
    state.admit_arrivals();
    while !state.finished() {
        let seg = allocate(&state)?;
        let next = state.next_event(&seg.item_rates).ok_or_else(|| SimError::Stalled(state.now.clone()))?;
        state.advance_to(&next, &seg.item_rates);
        schedule.push(next, seg);
        state.complete_broadcasts();
        state.admit_arrivals();
    }
    Ok(BroadcastTrace::from_parts(inst, schedule, state.broadcasts, state.completions))
}

/// Simulates B-EquiSet at `speed` with the given inner policy.
pub fn simulate_b_equiset(
    inst: &BroadcastInstance,
    speed: &Rational,
    policy: &InnerPolicy,
) -> Result<BroadcastTrace, SimError> {
    drive(inst, speed, true, |st| equiset_allocation(st, speed, policy))
}
