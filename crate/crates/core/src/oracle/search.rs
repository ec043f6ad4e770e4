use std::collections::HashMap;

use super::{DiscreteSchedule, OracleError, OracleResult};
use crate::instance::{BroadcastInstance, ItemIdx};
use crate::rational::Rational;

pub const DEFAULT_BUDGET: u64 = 20_000_000;
const MEMO_CAP: usize = 4_000_000;

/// Node budget for the branch-and-bound search.
#[derive(Clone, Copy, Debug)]
pub struct SearchLimits {
    pub budget: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { budget: DEFAULT_BUDGET }
    }
}

/// Instance in slot units: lengths, first admissible begin slots, item masks.
struct Slotted {
    lens: Vec<u64>,
    first: Vec<u64>,
    sets: Vec<u64>,
}

fn slotted(inst: &BroadcastInstance, slot: &Rational) -> Result<Slotted, OracleError> {
    let res = inst.resolve()?;
    if !slot.is_positive() {
        return Err(OracleError::NotSlotted { slot: slot.clone(), what: "anything (slot must be > 0)".into() });
    }
    if res.n_items() > 64 {
        return Err(OracleError::Scale(format!("{} items (at most 64)", res.n_items())));
    }
    let lens = res
        .lengths
        .iter()
        .zip(&inst.items)
        .map(|(l, it)| {
            l.as_multiple_of(slot)
                .map(|x| x as u64)
                .ok_or_else(|| OracleError::NotSlotted { slot: slot.clone(), what: format!("length of {}", it.id) })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let first = res
        .arrivals
        .iter()
        .map(|a| {
            let q = a / slot;
            u64::try_from(q.ceil()).map_err(|_| OracleError::Scale("arrival too far out".into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sets = res.sets.iter().map(|s| s.iter().fold(0u64, |m, &i| m | (1 << i))).collect();
    Ok(Slotted { lens, first, sets })
}

/// Safe horizon: the last admissible begin slot plus every demanded length,
/// enough for any instance.
pub fn default_horizon(inst: &BroadcastInstance, slot: &Rational) -> Result<usize, OracleError> {
    let s = slotted(inst, slot)?;
    let last = s.first.iter().max().copied().unwrap_or(0);
    let demand: u64 = s.sets.iter().map(|&m| bits(m).map(|i| s.lens[i]).sum::<u64>()).sum();
    usize::try_from(last + demand).map_err(|_| OracleError::Scale("horizon".into()))
}

fn bits(mut m: u64) -> impl Iterator<Item = ItemIdx> {
    std::iter::from_fn(move || {
        if m == 0 {
            return None;
        }
        let i = m.trailing_zeros() as usize;
        m &= m - 1;
        Some(i)
    })
}

#[derive(Clone, Hash, PartialEq, Eq)]
struct State {
    k: u64,
    prog: Vec<u64>,
    rem: Vec<u64>,
    att: Vec<u64>,
}

struct Search<'a> {
    s: &'a Slotted,
    horizon: u64,
    budget: u64,
    nodes: u64,
    best: Option<u64>,
    best_path: Vec<Option<ItemIdx>>,
    path: Vec<Option<ItemIdx>>,
    memo: HashMap<State, u64>,
}

impl Search<'_> {
    /// Admissible bound on the completion slot-end of request `j`.
    fn lower_bound(&self, st: &State, j: usize) -> u64 {
        let arrived = self.s.first[j] <= st.k;
        let need: u64 = bits(st.rem[j])
            .map(|i| {
                let l = self.s.lens[i];
                if st.att[j] >> i & 1 == 1 {
                    l - st.prog[i]
                } else if arrived && st.prog[i] > 0 {
                    2 * l - st.prog[i]
                } else {
                    l
                }
            })
            .sum();
        st.k.max(self.s.first[j]) + need
    }

    fn step(&self, st: &State, item: Option<ItemIdx>, g: u64) -> (State, u64) {
        let mut nx = st.clone();
        let mut g = g;
        if let Some(i) = item {
            if nx.prog[i] == 0 {
                for j in 0..nx.rem.len() {
                    if self.s.first[j] <= st.k && nx.rem[j] >> i & 1 == 1 {
                        nx.att[j] |= 1 << i;
                    }
                }
            }
            nx.prog[i] += 1;
            if nx.prog[i] == self.s.lens[i] {
                nx.prog[i] = 0;
                for j in 0..nx.rem.len() {
                    if nx.att[j] >> i & 1 == 1 {
                        nx.att[j] &= !(1 << i);
                        nx.rem[j] &= !(1 << i);
                        if nx.rem[j] == 0 {
                            g += st.k + 1;
                        }
                    }
                }
            }
        }
        nx.k += 1;
        (nx, g)
    }

    fn dfs(&mut self, st: State, g: u64) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(OracleError::Scale(format!("node budget {} exhausted", self.budget)));
        }
        let open: Vec<usize> = (0..st.rem.len()).filter(|&j| st.rem[j] != 0).collect();
        if open.is_empty() {
            if self.best.is_none_or(|b| g < b) {
                self.best = Some(g);
                self.best_path = self.path.clone();
            }
            return Ok(());
        }
        if st.k >= self.horizon {
            return Ok(());
        }
        let lb = g + open.iter().map(|&j| self.lower_bound(&st, j)).sum::<u64>();
        if self.best.is_some_and(|b| lb >= b) {
            return Ok(());
        }
        match self.memo.get(&st) {
            Some(&seen) if seen <= g => return Ok(()),
            _ => {
                if self.memo.len() < MEMO_CAP || self.memo.contains_key(&st) {
                    self.memo.insert(st.clone(), g);
                }
            }
        }

        let n = self.s.lens.len();
        let mut wanted = vec![0usize; n];
        let mut future = false;
        for &j in &open {
            if self.s.first[j] <= st.k {
                for i in bits(st.rem[j]) {
                    wanted[i] += 1;
                }
            } else {
                future = true;
            }
        }
        let mut items: Vec<ItemIdx> = (0..n).filter(|&i| wanted[i] > 0).collect();
        items.sort_by(|&a, &b| wanted[b].cmp(&wanted[a]).then(a.cmp(&b)));

        if items.is_empty() {
            let next = open.iter().map(|&j| self.s.first[j]).min().expect("open requests exist");
            let mut nx = st;
            let skipped = next - nx.k;
            nx.k = next;
            self.path.extend(std::iter::repeat_n(None, skipped as usize));
            let r = self.dfs(nx, g);
            self.path.truncate(self.path.len() - skipped as usize);
            return r;
        }
        let mut choices: Vec<Option<ItemIdx>> = items.into_iter().map(Some).collect();
        if future {
            choices.push(None);
        }
        for c in choices {
            let (nx, g2) = self.step(&st, c, g);
            self.path.push(c);
            let r = self.dfs(nx, g2);
            self.path.pop();
            r?;
        }
        Ok(())
    }
}

fn result(
    inst: &BroadcastInstance,
    slot: &Rational,
    slots: Vec<Option<ItemIdx>>,
    nodes: u64,
) -> Result<OracleResult, OracleError> {
    let schedule = DiscreteSchedule { slot: slot.clone(), slots };
    let trace = schedule.to_trace(inst)?;
    let flow = trace.flow.expect("verified trace serves every request");
    Ok(OracleResult { flow, schedule, nodes })
}

/// Minimum flow over slot-aligned sequential speed-1 schedules within
/// `horizon` slots, by depth-first branch and bound. Branches try items
/// wanted by the most alive requests first and idling last; states reached
/// again with no smaller accumulated cost are cut.
pub fn brute_force_bopt(
    inst: &BroadcastInstance,
    slot: &Rational,
    horizon: usize,
    limits: SearchLimits,
) -> Result<OracleResult, OracleError> {
    let s = slotted(inst, slot)?;
    let q = s.sets.len();
    let mut search = Search {
        s: &s,
        horizon: horizon as u64,
        budget: limits.budget,
        nodes: 0,
        best: None,
        best_path: Vec::new(),
        path: Vec::new(),
        memo: HashMap::new(),
    };
    let start = State { k: 0, prog: vec![0; s.lens.len()], rem: s.sets.clone(), att: vec![0; q] };
    search.dfs(start, 0)?;
    let nodes = search.nodes;
    match search.best {
        Some(_) => result(inst, slot, search.best_path, nodes),
        None => Err(OracleError::Infeasible { horizon }),
    }
}

/// Minimum flow by enumerating every assignment of an item or idle to each
/// of `horizon` slots and verifying each one from its rates. No pruning;
/// meant for tiny instances.
pub fn exhaustive_bopt(inst: &BroadcastInstance, slot: &Rational, horizon: usize) -> Result<OracleResult, OracleError> {
    slotted(inst, slot)?;
    let n = inst.items.len();
    let base = n as u64 + 1;
    let total = (0..horizon).try_fold(1u64, |acc, _| acc.checked_mul(base).filter(|&x| x <= 2_000_000));
    let total = total.ok_or_else(|| OracleError::Scale(format!("{base}^{horizon} assignments")))?;
    let mut best: Option<(Rational, Vec<Option<ItemIdx>>)> = None;
    for code in 0..total {
        let mut c = code;
        let slots: Vec<Option<ItemIdx>> = (0..horizon)
            .map(|_| {
                let d = (c % base) as usize;
                c /= base;
                d.checked_sub(1)
            })
            .collect();
        let sched = DiscreteSchedule { slot: slot.clone(), slots };
        if let Ok(tr) = sched.to_trace(inst) {
            let flow = tr.flow.expect("verified");
            if best.as_ref().is_none_or(|(b, _)| &flow < b) {
                best = Some((flow, sched.slots));
            }
        }
    }
    let (flow, slots) = best.ok_or(OracleError::Infeasible { horizon })?;
    Ok(OracleResult { flow, schedule: DiscreteSchedule { slot: slot.clone(), slots }, nodes: total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Item, Request};
    use crate::rational::rat;

    fn unit_items(n: usize) -> Vec<Item> {
        (0..n).map(|i| Item { id: format!("I{i}").as_str().into(), length: rat(1, 1) }).collect()
    }

    fn req(id: &str, a: Rational, items: &[&str]) -> Request {
        Request { id: id.into(), arrival: a, items: items.iter().map(|&s| s.into()).collect() }
    }

    #[test]
    fn single_item() {
        let inst = BroadcastInstance { items: unit_items(1), requests: vec![req("S", rat(0, 1), &["I0"])] };
        let r = brute_force_bopt(&inst, &rat(1, 1), 4, SearchLimits::default()).unwrap();
        assert_eq!(r.flow, rat(1, 1));
        assert_eq!(r.schedule.slots, vec![Some(0)]);
    }

    #[test]
    fn two_distinct_singletons() {
        let inst = BroadcastInstance {
            items: unit_items(2),
            requests: vec![req("S1", rat(0, 1), &["I0"]), req("S2", rat(0, 1), &["I1"])],
        };
        let r = brute_force_bopt(&inst, &rat(1, 1), 4, SearchLimits::default()).unwrap();
        assert_eq!(r.flow, rat(3, 1));
        assert_eq!(exhaustive_bopt(&inst, &rat(1, 1), 4).unwrap().flow, rat(3, 1));
    }

    #[test]
    fn waiting_can_beat_greed() {
        // One long item: starting at once forces the late requests onto a
        // second broadcast.
        let inst = BroadcastInstance {
            items: vec![Item { id: "A".into(), length: rat(2, 1) }],
            requests: vec![
                req("S1", rat(0, 1), &["A"]),
                req("S2", rat(1, 1), &["A"]),
                req("S3", rat(1, 1), &["A"]),
                req("S4", rat(1, 1), &["A"]),
            ],
        };
        let r = brute_force_bopt(&inst, &rat(1, 1), 8, SearchLimits::default()).unwrap();
        assert_eq!(r.flow, rat(9, 1));
        assert_eq!(exhaustive_bopt(&inst, &rat(1, 1), 6).unwrap().flow, rat(9, 1));
    }

    #[test]
    fn short_horizon_is_infeasible() {
        let inst = BroadcastInstance { items: unit_items(2), requests: vec![req("S", rat(0, 1), &["I0", "I1"])] };
        assert!(matches!(
            brute_force_bopt(&inst, &rat(1, 1), 1, SearchLimits::default()),
            Err(OracleError::Infeasible { .. })
        ));
    }

    #[test]
    fn budget_exhaustion_reported() {
        let inst = BroadcastInstance {
            items: unit_items(4),
            requests: (0..4).map(|k| req(&format!("S{k}"), rat(k, 1), &["I0", "I1", "I2", "I3"])).collect(),
        };
        assert!(matches!(
            brute_force_bopt(&inst, &rat(1, 1), 30, SearchLimits { budget: 5 }),
            Err(OracleError::Scale(_))
        ));
    }

    #[test]
    fn unslotted_length_rejected() {
        let inst = BroadcastInstance {
            items: vec![Item { id: "A".into(), length: rat(3, 2) }],
            requests: vec![req("S", rat(0, 1), &["A"])],
        };
        assert!(matches!(
            brute_force_bopt(&inst, &rat(1, 1), 4, SearchLimits::default()),
            Err(OracleError::NotSlotted { .. })
        ));
    }
}
