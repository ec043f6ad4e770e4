use crate::instance::{BroadcastInstance, ItemIdx};
use crate::rational::Rational;
use crate::schedule::{RateSchedule, Segment};
use crate::trace::{completion_from_intervals, Broadcast, BroadcastTrace};

use super::equiset::simulate_b_equiset;
use super::{require_positive, InnerPolicy, SimError};

/// A virtual item released by the internal simulation when one of its
/// broadcasts completes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VirtualRelease {
    pub item: ItemIdx,
    /// Begin of the internal broadcast that produced this copy.
    pub internal_begin: Rational,
    pub release: Rational,
    pub deadline: Rational,
    /// End of the real broadcast that retired this copy.
    pub completion: Option<Rational>,
}

impl VirtualRelease {
    pub fn met_deadline(&self) -> bool {
        self.completion.as_ref().is_some_and(|c| c <= &self.deadline)
    }
}

#[derive(Clone, Debug)]
pub struct EdfOutcome {
    /// Real schedule at speed `(4+ε)(1+δ)²`, one item at a time.
    pub trace: BroadcastTrace,
    /// Internal B-EquiSet run at speed `(4+ε)(1+δ)`.
    pub internal: BroadcastTrace,
    pub releases: Vec<VirtualRelease>,
    /// Times a deadline-driven broadcast was interrupted before completing.
    pub preemptions: usize,
    /// Times an idle-fill broadcast was interrupted by a released copy.
    pub fill_interruptions: usize,
    /// Indices into `releases` of copies that missed their deadline.
    pub deadline_misses: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Running {
    Copy(ItemIdx),
    Fill(ItemIdx),
}

impl Running {
    fn item(self) -> ItemIdx {
        match self {
            Running::Copy(i) | Running::Fill(i) => i,
        }
    }
}

/// B-EquiSet-Edf: an internal B-EquiSet run releases one virtual copy per
/// completed internal broadcast, with deadline `t + (t - t')/δ` for an
/// internal broadcast over `[t', t]`. The real channel serves copies
/// earliest-deadline-first at full speed and otherwise broadcasts the
/// lowest-indexed item alive in the internal run.
///
/// A completed real broadcast that began at `b` retires the pending copy of
/// its item with the earliest deadline among those whose internal broadcast
/// began no later than `b`, so every request the copy stands for can
/// download it.
pub fn simulate_b_equiset_edf(
    inst: &BroadcastInstance,
    eps: &Rational,
    delta: &Rational,
) -> Result<EdfOutcome, SimError> {
    require_positive("eps", eps)?;
    require_positive("delta", delta)?;
    let res = inst.resolve()?;
    let n = res.n_items();
    let base = Rational::from(4) + eps;
    let one_d = Rational::one() + delta;
    let inner_speed = &base * &one_d;
    let speed = &inner_speed * &one_d;
    let internal = simulate_b_equiset(inst, &inner_speed, &InnerPolicy::EquiWithin)?;

    let mut releases: Vec<VirtualRelease> = Vec::new();
    for (i, list) in internal.broadcasts.iter().enumerate() {
        for b in list {
            releases.push(VirtualRelease {
                item: i,
                internal_begin: b.begin.clone(),
                release: b.end.clone(),
                deadline: &b.end + (&b.end - &b.begin) / delta,
                completion: None,
            });
        }
    }
    releases.sort_by(|x, y| (&x.release, x.item, &x.internal_begin).cmp(&(&y.release, y.item, &y.internal_begin)));

    let mut schedule = RateSchedule::new(speed.clone(), n, false, Rational::zero());
    let mut now = Rational::zero();
    let mut work = vec![Rational::zero(); n];
    let mut begin: Vec<Option<Rational>> = vec![None; n];
    let mut broadcasts: Vec<Vec<Broadcast>> = vec![Vec::new(); n];
    let mut pending: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut next_release = 0;
    let mut running: Option<Running> = None;
    let mut preemptions = 0;
    let mut fill_interruptions = 0;

    loop {
        while next_release < releases.len() && releases[next_release].release <= now {
            pending[releases[next_release].item].push(next_release);
            next_release += 1;
        }
        let min_deadline = |i: ItemIdx| pending[i].iter().map(|&k| &releases[k].deadline).min();
        let mut choice: Option<Running> = None;
        let mut best: Option<&Rational> = None;
        for i in 0..n {
            if let Some(d) = min_deadline(i) {
                if best.is_none_or(|b| d < b) {
                    best = Some(d);
                    choice = Some(Running::Copy(i));
                }
            }
        }
        if let (Some(Running::Copy(p)), Some(b)) = (running, best) {
            if min_deadline(p) == Some(b) {
                choice = Some(Running::Copy(p));
            }
        }
        if choice.is_none() {
            if let Some(k) = internal.schedule.segment_at(&now) {
                let seg = &internal.schedule.segments[k];
                choice = (0..n).find(|&i| seg.item_rates[i].is_positive()).map(Running::Fill);
            }
        }
        if let Some(prev) = running {
            let p = prev.item();
            if begin[p].is_some() && choice.map(Running::item) != Some(p) {
                match prev {
                    Running::Copy(_) => preemptions += 1,
                    Running::Fill(_) => fill_interruptions += 1,
                }
            }
        }
        running = choice;

        let mut next = releases.get(next_release).map(|r| r.release.clone());
        let mut consider = |t: Rational| {
            if next.as_ref().is_none_or(|x| &t < x) {
                next = Some(t);
            }
        };
        match choice {
            Some(Running::Copy(i)) => consider(&now + (&res.lengths[i] - &work[i]) / &speed),
            Some(Running::Fill(i)) => {
                consider(&now + (&res.lengths[i] - &work[i]) / &speed);
                let bp = &internal.schedule.breakpoints;
                if let Some(t) = bp.get(bp.partition_point(|b| b <= &now)) {
                    consider(t.clone());
                }
            }
            None => {}
        }
        let Some(next) = next else { break };

        let mut seg = Segment::idle(n);
        if let Some(r) = choice {
            let i = r.item();
            seg.item_rates[i] = speed.clone();
            if begin[i].is_none() {
                begin[i] = Some(now.clone());
            }
            work[i] += &speed * (&next - &now);
        }
        schedule.push(next.clone(), seg);
        now = next;

        if let Some(r) = choice {
            let i = r.item();
            if work[i] == res.lengths[i] {
                let b = begin[i].take().expect("running item has a begin");
                work[i] = Rational::zero();
                let eligible = pending[i]
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| releases[k].internal_begin <= b)
                    .min_by(|(_, &x), (_, &y)| (&releases[x].deadline, x).cmp(&(&releases[y].deadline, y)))
                    .map(|(pos, _)| pos);
                if let Some(pos) = eligible {
                    let k = pending[i].swap_remove(pos);
                    releases[k].completion = Some(now.clone());
                }
                broadcasts[i].push(Broadcast::new(b, now.clone()));
                running = None;
            }
        }
    }

    let completions =
        (0..res.n_requests()).map(|j| completion_from_intervals(&broadcasts, &res.sets[j], &res.arrivals[j])).collect();
    let trace = BroadcastTrace::from_parts(inst, schedule, broadcasts, completions);
    let deadline_misses = (0..releases.len()).filter(|&k| !releases[k].met_deadline()).collect();
    Ok(EdfOutcome { trace, internal, releases, preemptions, fill_interruptions, deadline_misses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Item, Request};
    use crate::rational::rat;

    #[test]
    fn single_request_meets_deadline() {
        let inst = BroadcastInstance {
            items: vec![Item { id: "I".into(), length: rat(1, 1) }],
            requests: vec![Request { id: "S".into(), arrival: rat(0, 1), items: vec!["I".into()] }],
        };
        let out = simulate_b_equiset_edf(&inst, &rat(1, 1), &rat(1, 1)).unwrap();
        assert_eq!(out.trace.schedule.speed, rat(20, 1));
        assert_eq!(out.internal.broadcasts[0], vec![Broadcast::new(rat(0, 1), rat(1, 10))]);
        assert_eq!(out.releases.len(), 1);
        assert_eq!(out.releases[0].deadline, rat(1, 5));
        assert_eq!(out.releases[0].completion, Some(rat(3, 20)));
        assert!(out.trace.broadcasts[0].contains(&Broadcast::new(rat(1, 10), rat(3, 20))));
        assert_eq!(out.preemptions, 0);
        assert!(out.deadline_misses.is_empty());
        out.trace.check_invariants(&inst).unwrap();
    }

    #[test]
    fn empty_instance() {
        let inst = BroadcastInstance { items: vec![], requests: vec![] };
        let out = simulate_b_equiset_edf(&inst, &rat(1, 1), &rat(1, 1)).unwrap();
        assert_eq!(out.trace.n_broadcasts(), 0);
        assert_eq!(out.preemptions, 0);
        assert_eq!(out.trace.flow, Some(rat(0, 1)));
    }
}
