use super::{default_slot, DiscreteSchedule, OracleError, OracleResult};
use crate::instance::{BroadcastInstance, ItemIdx};
use crate::rational::Rational;

/// A feasible speed-1 schedule of whole back-to-back broadcasts. At each
/// decision it serves the alive request with the fewest missing items
/// (earliest arrival, then index, on ties) by broadcasting its item wanted
/// by the most alive requests (lowest index on ties); with nothing alive it
/// idles until the next arrival.
pub fn greedy_upper_bound(inst: &BroadcastInstance) -> Result<OracleResult, OracleError> {
    let res = inst.resolve()?;
    let slot = default_slot(inst);
    let q = res.n_requests();
    let mut remaining: Vec<Vec<ItemIdx>> = res.sets.clone();
    let mut now = Rational::zero();
    let mut slots: Vec<Option<ItemIdx>> = Vec::new();
    let to_slots = |t: &Rational| t.as_multiple_of(&slot).expect("greedy times are multiples of the slot") as usize;
    loop {
        let alive: Vec<usize> = (0..q).filter(|&j| res.arrivals[j] <= now && !remaining[j].is_empty()).collect();
        if alive.is_empty() {
            let next = (0..q).filter(|&j| !remaining[j].is_empty()).map(|j| &res.arrivals[j]).min();
            match next {
                Some(t) => {
                    now = t.clone();
                    continue;
                }
                None => break,
            }
        }
        let target = *alive
            .iter()
            .min_by(|&&x, &&y| {
                remaining[x].len().cmp(&remaining[y].len()).then(res.arrivals[x].cmp(&res.arrivals[y])).then(x.cmp(&y))
            })
            .expect("non-empty");
        let wanted = |i: ItemIdx| alive.iter().filter(|&&j| remaining[j].contains(&i)).count();
        let item = *remaining[target]
            .iter()
            .max_by(|&&a, &&b| wanted(a).cmp(&wanted(b)).then(b.cmp(&a)))
            .expect("target is alive");
        let end = &now + &res.lengths[item];
        slots.resize(to_slots(&now), None);
        slots.resize(to_slots(&end), Some(item));
        for &j in &alive {
            remaining[j].retain(|&i| i != item);
        }
        now = end;
    }
    let schedule = DiscreteSchedule { slot, slots };
    let trace = schedule.to_trace(inst)?;
    let flow = trace.flow.expect("verified trace serves every request");
    Ok(OracleResult { flow, schedule, nodes: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Item, Request};
    use crate::oracle::{brute_force_bopt, SearchLimits};
    use crate::rational::rat;

    #[test]
    fn single_request_matches_search() {
        let inst = BroadcastInstance {
            items: vec![Item { id: "A".into(), length: rat(2, 1) }, Item { id: "B".into(), length: rat(1, 1) }],
            requests: vec![Request { id: "S".into(), arrival: rat(1, 1), items: vec!["A".into(), "B".into()] }],
        };
        let g = greedy_upper_bound(&inst).unwrap();
        let b = brute_force_bopt(&inst, &rat(1, 1), 6, SearchLimits::default()).unwrap();
        assert_eq!(g.flow, rat(3, 1));
        assert_eq!(g.flow, b.flow);
    }
}
