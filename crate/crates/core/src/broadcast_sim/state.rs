use std::collections::BTreeSet;

use crate::instance::{ItemIdx, ReqIdx, Resolved};
use crate::rational::Rational;
use crate::trace::Broadcast;

/// Mutable simulation state shared by the broadcast simulators.
///
/// A request is alive while some requested item has not been downloaded by
/// a broadcast beginning at or after its arrival. An item has an in-progress
/// broadcast iff `begin[i]` is set.
#[derive(Clone, Debug)]
pub struct SimState<'a> {
    res: &'a Resolved,
    pub now: Rational,
    next_arrival: usize,
    /// `None` until arrival, then the items still missing.
    pub remaining: Vec<Option<BTreeSet<ItemIdx>>>,
    pub completions: Vec<Option<Rational>>,
    /// Work accumulated by each item's in-progress broadcast.
    pub work: Vec<Rational>,
    pub begin: Vec<Option<Rational>>,
    pub broadcasts: Vec<Vec<Broadcast>>,
}

impl<'a> SimState<'a> {
    pub fn new(res: &'a Resolved) -> Self {
        let n = res.n_items();
        let q = res.n_requests();
        SimState {
            res,
            now: Rational::zero(),
            next_arrival: 0,
            remaining: vec![None; q],
            completions: vec![None; q],
            work: vec![Rational::zero(); n],
            begin: vec![None; n],
            broadcasts: vec![Vec::new(); n],
        }
    }

    pub fn resolved(&self) -> &'a Resolved {
        self.res
    }

    /// Admits every request with arrival `<= now`; returns the admitted ones.
    pub fn admit_arrivals(&mut self) -> Vec<ReqIdx> {
        let mut admitted = Vec::new();
        while let Some(&j) = self.res.arrival_order.get(self.next_arrival) {
            if self.res.arrivals[j] > self.now {
                break;
            }
            self.remaining[j] = Some(self.res.sets[j].iter().copied().collect());
            admitted.push(j);
            self.next_arrival += 1;
        }
        admitted
    }

    pub fn next_arrival_time(&self) -> Option<&Rational> {
        self.res.arrival_order.get(self.next_arrival).map(|&j| &self.res.arrivals[j])
    }

    pub fn is_alive(&self, j: ReqIdx) -> bool {
        self.remaining[j].as_ref().is_some_and(|s| !s.is_empty())
    }

    /// Alive requests in index order.
    pub fn alive_requests(&self) -> Vec<ReqIdx> {
        (0..self.remaining.len()).filter(|&j| self.is_alive(j)).collect()
    }

    /// Items alive for request `j`, sorted.
    pub fn alive_items_of(&self, j: ReqIdx) -> Vec<ItemIdx> {
        self.remaining[j].as_ref().map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    /// Items alive for at least one request, sorted.
    pub fn alive_items(&self) -> Vec<ItemIdx> {
        let mut set = BTreeSet::new();
        for s in self.remaining.iter().flatten() {
            set.extend(s.iter().copied());
        }
        set.into_iter().collect()
    }

    /// True once every request has arrived and been served.
    pub fn finished(&self) -> bool {
        self.next_arrival_time().is_none() && self.remaining.iter().all(|s| s.as_ref().is_some_and(|s| s.is_empty()))
    }

    /// Earliest time `>= now` at which a request arrives or an item's
    /// in-progress broadcast reaches its length under constant `item_rates`.
    /// `None` means no future event.
    pub fn next_event(&self, item_rates: &[Rational]) -> Option<Rational> {
        let mut best = self.next_arrival_time().cloned();
        for (i, r) in item_rates.iter().enumerate() {
            if r.is_positive() {
                let t = &self.now + (&self.res.lengths[i] - &self.work[i]) / r;
                if best.as_ref().is_none_or(|b| &t < b) {
                    best = Some(t);
                }
            }
        }
        best
    }

    /// Moves time forward to `t` under constant `item_rates`. A broadcast
    /// begins at the current time for any item that receives positive rate
    /// without one in progress.
    pub fn advance_to(&mut self, t: &Rational, item_rates: &[Rational]) {
        let dt = t - &self.now;
        debug_assert!(!dt.is_negative());
        for (i, r) in item_rates.iter().enumerate() {
            if r.is_positive() {
                if self.begin[i].is_none() {
                    self.begin[i] = Some(self.now.clone());
                }
                self.work[i] += r * &dt;
                debug_assert!(self.work[i] <= self.res.lengths[i]);
            }
        }
        self.now = t.clone();
    }

    /// Closes every broadcast whose work reached the item length and serves
    /// the requests that arrived no later than its begin. Returns the items
    /// whose broadcast completed.
    pub fn complete_broadcasts(&mut self) -> Vec<ItemIdx> {
        let mut done = Vec::new();
        for i in 0..self.work.len() {
            if self.begin[i].is_none() || self.work[i] != self.res.lengths[i] {
                continue;
            }
            let begin = self.begin[i].take().expect("checked above");
            for j in 0..self.remaining.len() {
                if self.res.arrivals[j] > begin {
                    continue;
                }
                if let Some(set) = self.remaining[j].as_mut() {
                    if set.remove(&i) && set.is_empty() {
                        self.completions[j] = Some(self.now.clone());
                    }
                }
            }
            self.broadcasts[i].push(Broadcast::new(begin, self.now.clone()));
            self.work[i] = Rational::zero();
            done.push(i);
        }
        done
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{BroadcastInstance, Item, Request};
    use crate::rational::rat;

    fn one_item(len: Rational, arrivals: &[Rational]) -> BroadcastInstance {
        BroadcastInstance {
            items: vec![Item { id: "I".into(), length: len }],
            requests: arrivals
                .iter()
                .enumerate()
                .map(|(k, a)| Request {
                    id: format!("S{k}").as_str().into(),
                    arrival: a.clone(),
                    items: vec!["I".into()],
                })
                .collect(),
        }
    }

    #[test]
    fn next_event_is_linear_solve() {
        let inst = one_item(rat(1, 1), &[rat(0, 1)]);
        let res = inst.resolve().unwrap();
        let mut st = SimState::new(&res);
        st.admit_arrivals();
        st.work[0] = rat(1, 2);
        st.begin[0] = Some(rat(0, 1));
        st.now = rat(2, 1);
        assert_eq!(st.next_event(&[rat(1, 3)]), Some(rat(2, 1) + rat(3, 2)));
    }

    #[test]
    fn arrival_preempts_far_completion() {
        let inst = one_item(rat(5, 1), &[rat(0, 1), rat(1, 1)]);
        let res = inst.resolve().unwrap();
        let mut st = SimState::new(&res);
        st.admit_arrivals();
        assert_eq!(st.next_event(&[rat(1, 1)]), Some(rat(1, 1)));
    }

    #[test]
    fn no_future_event() {
        let inst = one_item(rat(1, 1), &[rat(0, 1)]);
        let res = inst.resolve().unwrap();
        let mut st = SimState::new(&res);
        st.admit_arrivals();
        assert_eq!(st.next_event(&[rat(0, 1)]), None);
    }

    #[test]
    fn late_arrival_not_served_by_running_broadcast() {
        let inst = one_item(rat(1, 1), &[rat(0, 1), rat(1, 2)]);
        let res = inst.resolve().unwrap();
        let mut st = SimState::new(&res);
        st.admit_arrivals();
        st.advance_to(&rat(1, 2), &[rat(1, 1)]);
        st.admit_arrivals();
        st.advance_to(&rat(1, 1), &[rat(1, 1)]);
        assert_eq!(st.complete_broadcasts(), vec![0]);
        assert_eq!(st.completions, vec![Some(rat(1, 1)), None]);
        assert!(st.is_alive(1));
    }
}
