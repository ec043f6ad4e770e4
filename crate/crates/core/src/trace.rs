//! Broadcast traces: the schedule plus the broadcast intervals and request
//! completions it induces, and the flow-time metric.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{BroadcastInstance, ItemId, ItemIdx, ReqIdx, RequestId};
use crate::rational::Rational;
use crate::schedule::{RateSchedule, ScheduleViolation, Segment};

/// One completed broadcast `[begin, end]` of an item.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Broadcast {
    pub begin: Rational,
    pub end: Rational,
}

impl Broadcast {
    pub fn new(begin: Rational, end: Rational) -> Self {
        Broadcast { begin, end }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("unknown item id {0}")]
    UnknownItem(ItemId),
    #[error("unknown request id {0}")]
    UnknownRequest(RequestId),
    #[error("request {0} is not served within the trace horizon")]
    Unserved(RequestId),
    #[error("trace does not match the instance: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleViolation),
    #[error("item {item}: broadcast {index} overlaps or precedes the previous one")]
    Unordered { item: ItemId, index: usize },
    #[error("item {item}: broadcast {index} integrates to {got}, expected {expected}")]
    WrongIntegral { item: ItemId, index: usize, got: Rational, expected: Rational },
    #[error("request {request}: stored completion {stored:?} but intervals give {derived:?}")]
    WrongCompletion { request: RequestId, stored: Option<Rational>, derived: Option<Rational> },
    #[error("stored flow {stored:?} differs from recomputed {derived:?}")]
    WrongFlow { stored: Option<Rational>, derived: Option<Rational> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BroadcastTrace {
    pub item_ids: Vec<ItemId>,
    pub request_ids: Vec<RequestId>,
    pub schedule: RateSchedule,
    /// Completed broadcasts per item, in time order.
    pub broadcasts: Vec<Vec<Broadcast>>,
    /// Completion time per request, `None` if not served within the horizon.
    pub completions: Vec<Option<Rational>>,
    /// Total flow time; `None` when some request is unserved.
    pub flow: Option<Rational>,
}

/// First broadcast in `list` whose begin is `>= t`.
pub fn first_at_or_after<'a>(list: &'a [Broadcast], t: &Rational) -> Option<&'a Broadcast> {
    let k = list.partition_point(|b| &b.begin < t);
    list.get(k)
}

/// Completion of a request arriving at `arrival` for `items`, following the
/// max-over-items of the first qualifying broadcast end.
pub fn completion_from_intervals(
    broadcasts: &[Vec<Broadcast>],
    items: &[ItemIdx],
    arrival: &Rational,
) -> Option<Rational> {
    let mut latest: Option<Rational> = None;
    for &i in items {
        let end = first_at_or_after(&broadcasts[i], arrival)?.end.clone();
        latest = Some(match latest {
            Some(l) => l.max(end),
            None => end,
        });
    }
    latest
}

fn total_flow(inst: &BroadcastInstance, completions: &[Option<Rational>]) -> Option<Rational> {
    let mut acc = Rational::zero();
    for (req, c) in inst.requests.iter().zip(completions) {
        acc += c.as_ref()? - &req.arrival;
    }
    Some(acc)
}

impl BroadcastTrace {
    /// Assembles a trace from simulator-tracked parts; the flow is summed
    /// from the supplied completions.
    pub fn from_parts(
        inst: &BroadcastInstance,
        schedule: RateSchedule,
        broadcasts: Vec<Vec<Broadcast>>,
        completions: Vec<Option<Rational>>,
    ) -> Self {
        let flow = total_flow(inst, &completions);
        BroadcastTrace {
            item_ids: inst.items.iter().map(|i| i.id.clone()).collect(),
            request_ids: inst.requests.iter().map(|r| r.id.clone()).collect(),
            schedule,
            broadcasts,
            completions,
            flow,
        }
    }

    pub fn item_index(&self, id: &ItemId) -> Result<ItemIdx, TraceError> {
        self.item_ids.iter().position(|x| x == id).ok_or_else(|| TraceError::UnknownItem(id.clone()))
    }

    /// `B(I, t)` together with its end `C(I, t)`: the first broadcast of the
    /// item beginning at or after `t`, if one completes within the horizon.
    pub fn first_broadcast_after(
        &self,
        item: &ItemId,
        t: &Rational,
    ) -> Result<Option<(Rational, Rational)>, TraceError> {
        let i = self.item_index(item)?;
        Ok(first_at_or_after(&self.broadcasts[i], t).map(|b| (b.begin.clone(), b.end.clone())))
    }

    pub fn n_broadcasts(&self) -> usize {
        self.broadcasts.iter().map(Vec::len).sum()
    }

    /// Verifies every trace invariant against `inst`: schedule capacity and
    /// aggregation, ordered disjoint broadcasts, exact per-broadcast
    /// integrals, completions rederived from intervals, and the flow total.
    pub fn check_invariants(&self, inst: &BroadcastInstance) -> Result<(), TraceError> {
        let res = inst.resolve().map_err(|e| TraceError::Mismatch(e.to_string()))?;
        if res.n_items() != self.broadcasts.len()
            || res.n_requests() != self.completions.len()
            || self.schedule.n_items != res.n_items()
        {
            return Err(TraceError::Mismatch("item or request count differs".into()));
        }
        self.schedule.check()?;
        for (i, list) in self.broadcasts.iter().enumerate() {
            let id = &self.item_ids[i];
            let mut prev_end: Option<&Rational> = None;
            for (k, b) in list.iter().enumerate() {
                if b.end <= b.begin || prev_end.is_some_and(|p| &b.begin < p) {
                    return Err(TraceError::Unordered { item: id.clone(), index: k });
                }
                let got = self.schedule.item_integral(i, &b.begin, &b.end);
                if got != res.lengths[i] {
                    return Err(TraceError::WrongIntegral {
                        item: id.clone(),
                        index: k,
                        got,
                        expected: res.lengths[i].clone(),
                    });
                }
                prev_end = Some(&b.end);
            }
        }
        for j in 0..res.n_requests() {
            let derived = completion_from_intervals(&self.broadcasts, &res.sets[j], &res.arrivals[j]);
            if derived != self.completions[j] {
                return Err(TraceError::WrongCompletion {
                    request: self.request_ids[j].clone(),
                    stored: self.completions[j].clone(),
                    derived,
                });
            }
        }
        let derived = total_flow(inst, &self.completions);
        if derived != self.flow {
            return Err(TraceError::WrongFlow { stored: self.flow.clone(), derived });
        }
        Ok(())
    }

    pub fn to_file(&self) -> TraceFile {
        let name = |j: ReqIdx, i: ItemIdx| format!("{}:{}", self.request_ids[j], self.item_ids[i]);
        TraceFile {
            speed: self.schedule.speed.clone(),
            attributed: self.schedule.attributed,
            breakpoints: self.schedule.breakpoints.clone(),
            rates: self
                .schedule
                .segments
                .iter()
                .map(|s| s.pair_rates.iter().map(|(j, i, r)| (name(*j, *i), r.clone())).collect())
                .collect(),
            item_rates: self
                .schedule
                .segments
                .iter()
                .map(|s| {
                    s.item_rates
                        .iter()
                        .enumerate()
                        .filter(|(_, r)| !r.is_zero())
                        .map(|(i, r)| (self.item_ids[i].0.clone(), r.clone()))
                        .collect()
                })
                .collect(),
            broadcasts: self
                .broadcasts
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    (self.item_ids[i].0.clone(), l.iter().map(|b| [b.begin.clone(), b.end.clone()]).collect())
                })
                .collect(),
            completions: self
                .completions
                .iter()
                .enumerate()
                .map(|(j, c)| (self.request_ids[j].0.clone(), c.clone()))
                .collect(),
            flow: self.flow.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("trace serialization cannot fail")
    }

    /// Rebuilds a trace from its file form, resolving ids against `inst`.
    pub fn from_file(file: &TraceFile, inst: &BroadcastInstance) -> Result<Self, TraceError> {
        let n = inst.items.len();
        if file.rates.len() + 1 != file.breakpoints.len() && !file.rates.is_empty() {
            return Err(TraceError::Mismatch("rates and breakpoints disagree".into()));
        }
        if file.item_rates.len() + 1 != file.breakpoints.len() {
            return Err(TraceError::Mismatch("item_rates and breakpoints disagree".into()));
        }
        let item = |id: &str| {
            inst.item_index(&ItemId(id.to_string())).ok_or_else(|| TraceError::UnknownItem(ItemId(id.to_string())))
        };
        let request = |id: &str| {
            inst.request_index(&RequestId(id.to_string()))
                .ok_or_else(|| TraceError::UnknownRequest(RequestId(id.to_string())))
        };
        let attributed = file.attributed || file.rates.iter().any(|m| !m.is_empty());
        let mut schedule = RateSchedule {
            speed: file.speed.clone(),
            n_items: n,
            attributed,
            breakpoints: file.breakpoints.clone(),
            segments: Vec::new(),
        };
        for (k, irates) in file.item_rates.iter().enumerate() {
            let mut seg = Segment::idle(n);
            for (id, r) in irates {
                seg.item_rates[item(id)?] = r.clone();
            }
            if let Some(prates) = file.rates.get(k) {
                for (key, r) in prates {
                    let (rq, it) =
                        key.split_once(':').ok_or_else(|| TraceError::Mismatch(format!("bad rate key {key}")))?;
                    seg.pair_rates.push((request(rq)?, item(it)?, r.clone()));
                }
                seg.pair_rates.sort_by_key(|a| (a.0, a.1));
            }
            schedule.segments.push(seg);
        }
        let mut broadcasts = vec![Vec::new(); n];
        for (id, list) in &file.broadcasts {
            broadcasts[item(id)?] = list.iter().map(|[b, e]| Broadcast::new(b.clone(), e.clone())).collect();
        }
        let mut completions = vec![None; inst.requests.len()];
        for (id, c) in &file.completions {
            completions[request(id)?] = c.clone();
        }
        let mut trace = BroadcastTrace::from_parts(inst, schedule, broadcasts, completions);
        trace.flow = file.flow.clone();
        Ok(trace)
    }
}

/// Serialized trace: all rationals as strings, rate maps keyed by
/// `"request:item"` (attributed) and by item id (aggregate).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    pub speed: Rational,
    /// Whether `rates` attributes bandwidth to requests.
    #[serde(default)]
    pub attributed: bool,
    pub breakpoints: Vec<Rational>,
    pub rates: Vec<BTreeMap<String, Rational>>,
    pub item_rates: Vec<BTreeMap<String, Rational>>,
    pub broadcasts: BTreeMap<String, Vec<[Rational; 2]>>,
    pub completions: BTreeMap<String, Option<Rational>>,
    pub flow: Option<Rational>,
}

/// Exact flow time `sum_j (c_j - a_j)` of `trace` on `inst`, checked against
/// the trace's stored total.
pub fn flow_time(trace: &BroadcastTrace, inst: &BroadcastInstance) -> Result<Rational, TraceError> {
    if trace.completions.len() != inst.requests.len() {
        return Err(TraceError::Mismatch("request count differs".into()));
    }
    let mut acc = Rational::zero();
    for (req, c) in inst.requests.iter().zip(&trace.completions) {
        let c = c.as_ref().ok_or_else(|| TraceError::Unserved(req.id.clone()))?;
        acc += c - &req.arrival;
    }
    if trace.flow.as_ref() != Some(&acc) {
        return Err(TraceError::WrongFlow { stored: trace.flow.clone(), derived: Some(acc) });
    }
    Ok(acc)
}
