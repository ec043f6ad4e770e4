use crate::instance::BroadcastInstance;
use crate::rational::Rational;
use crate::schedule::RateSchedule;
use crate::trace::{completion_from_intervals, Broadcast, BroadcastTrace, TraceError};

/// Rederives broadcasts, completions and flow from raw rates alone.
///
/// An item's broadcast begins at the first instant with positive rate after
/// its previous broadcast ended and ends when its accumulated rate reaches
/// the item length. Fails on capacity or rate-shape violations and on any
/// request left unserved by the end of the schedule.
pub fn verify_schedule(
    rates: &RateSchedule,
    inst: &BroadcastInstance,
    speed: &Rational,
) -> Result<BroadcastTrace, TraceError> {
    let res = inst.resolve().map_err(|e| TraceError::Mismatch(e.to_string()))?;
    if rates.n_items != res.n_items() {
        return Err(TraceError::Mismatch(format!("schedule has {} items, instance {}", rates.n_items, res.n_items())));
    }
    let mut checked = rates.clone();
    checked.speed = speed.clone();
    checked.check()?;

    let mut broadcasts: Vec<Vec<Broadcast>> = vec![Vec::new(); res.n_items()];
    for (i, len) in res.lengths.iter().enumerate() {
        let mut acc = Rational::zero();
        let mut begin: Option<Rational> = None;
        for (k, seg) in rates.segments.iter().enumerate() {
            let r = &seg.item_rates[i];
            if !r.is_positive() {
                continue;
            }
            let (start, end) = rates.interval(k);
            let mut t = start.clone();
            while &t < end {
                if begin.is_none() {
                    begin = Some(t.clone());
                }
                let finish = &t + (len - &acc) / r;
                if &finish <= end {
                    broadcasts[i].push(Broadcast::new(begin.take().expect("set above"), finish.clone()));
                    acc = Rational::zero();
                    t = finish;
                } else {
                    acc += r * (end - &t);
                    t = end.clone();
                }
            }
        }
    }

    let mut completions = Vec::with_capacity(res.n_requests());
    for j in 0..res.n_requests() {
        let c = completion_from_intervals(&broadcasts, &res.sets[j], &res.arrivals[j]);
        if c.is_none() {
            return Err(TraceError::Unserved(inst.requests[j].id.clone()));
        }
        completions.push(c);
    }
    let mut out = rates.clone();
    out.speed = speed.clone();
    Ok(BroadcastTrace::from_parts(inst, out, broadcasts, completions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Item, Request};
    use crate::rational::rat;
    use crate::schedule::Segment;

    fn inst() -> BroadcastInstance {
        BroadcastInstance {
            items: vec![Item { id: "A".into(), length: rat(1, 1) }],
            requests: vec![Request { id: "S".into(), arrival: rat(0, 1), items: vec!["A".into()] }],
        }
    }

    fn seg(r: Rational) -> Segment {
        Segment { item_rates: vec![r], pair_rates: vec![] }
    }

    #[test]
    fn capacity_violation_reported() {
        let mut s = RateSchedule::new(rat(1, 1), 1, false, rat(0, 1));
        s.push(rat(1, 1), seg(rat(11, 10)));
        assert!(matches!(verify_schedule(&s, &inst(), &rat(1, 1)), Err(TraceError::Schedule(_))));
    }

    #[test]
    fn unserved_request_reported() {
        let mut s = RateSchedule::new(rat(1, 1), 1, false, rat(0, 1));
        s.push(rat(1, 2), seg(rat(1, 1)));
        assert!(matches!(verify_schedule(&s, &inst(), &rat(1, 1)), Err(TraceError::Unserved(_))));
    }

    #[test]
    fn back_to_back_broadcasts_within_one_segment() {
        let mut s = RateSchedule::new(rat(1, 1), 1, false, rat(0, 1));
        s.push(rat(5, 2), seg(rat(1, 1)));
        let tr = verify_schedule(&s, &inst(), &rat(1, 1)).unwrap();
        assert_eq!(tr.broadcasts[0].len(), 2);
        assert_eq!(tr.broadcasts[0][1], Broadcast::new(rat(1, 1), rat(2, 1)));
        assert_eq!(tr.flow, Some(rat(1, 1)));
    }
}
