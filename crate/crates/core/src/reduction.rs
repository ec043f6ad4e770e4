//! From a broadcast instance plus two traces (the algorithm's run `E` at
//! speed `s` and a reference run `O` at speed 1) to a batch instance: one
//! batch per request and one job per (request, item) pair. Also the mirror
//! policy replaying `E`'s split inside each batch and the 2-speed schedule
//! built from `O`'s broadcast windows.

use serde::Serialize;
use thiserror::Error;

use crate::instance::{BroadcastInstance, ItemId, ItemIdx, ReqIdx, RequestId};
use crate::jobsched::{Batch, CapacityProfile, JobError, JobPolicy, JobTrace, Piece, SeqParJob};
use crate::oracle::verify_schedule;
use crate::rational::Rational;
use crate::trace::{first_at_or_after, BroadcastTrace, TraceError};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("trace {which} does not verify: {reason}")]
    Unverified { which: &'static str, reason: String },
    #[error("trace E must attribute rates to requests")]
    NotAttributed,
    #[error("request {0} is never served in trace {1}")]
    Unserved(RequestId, &'static str),
    #[error("item {item}, class {class}: W- + W+ = {total} exceeds 2l = {bound}")]
    CapacityBound { item: ItemId, class: usize, total: Rational, bound: Rational },
    #[error("2-speed packing failed: {0}")]
    Packing(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Job(#[from] JobError),
}

/// The (request, item) pair behind a job, with its times in both traces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobLink {
    pub request: ReqIdx,
    pub item: ItemIdx,
    /// `C^E(I, a_j)`: when `E` delivers the item to the request.
    pub e_completion: Rational,
    /// Begin of the `E` broadcast that delivers it.
    pub e_begin: Rational,
    /// `B^O(I, a_j)`: begin of the `O` broadcast that delivers it.
    pub o_begin: Rational,
}

/// Requests served by one `O` broadcast of an item, split by whether the
/// `E` broadcast that served them began before (`minus`) or at/after
/// (`plus`) the `O` broadcast. Only jobs with parallel work enter the split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ItemClass {
    /// 1-based broadcast number in `O`.
    pub k: usize,
    pub begin: Rational,
    pub end: Rational,
    pub members: Vec<RequestId>,
    pub minus: Vec<RequestId>,
    pub plus: Vec<RequestId>,
    pub w_minus: Rational,
    pub w_plus: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ItemClasses {
    pub item: ItemId,
    pub length: Rational,
    pub classes: Vec<ItemClass>,
}

#[derive(Clone, Debug)]
pub struct ReductionOutput {
    pub batches: Vec<Batch>,
    /// Per batch, per job.
    pub links: Vec<Vec<JobLink>>,
    pub classes: Vec<ItemClasses>,
    pub e_trace: BroadcastTrace,
    pub speed: Rational,
}

fn check_verified(
    which: &'static str,
    trace: &BroadcastTrace,
    inst: &BroadcastInstance,
    speed: &Rational,
) -> Result<(), ReductionError> {
    let unverified = |reason: String| ReductionError::Unverified { which, reason };
    trace.check_invariants(inst).map_err(|e| unverified(e.to_string()))?;
    let v = verify_schedule(&trace.schedule, inst, speed).map_err(|e| unverified(e.to_string()))?;
    if v.broadcasts != trace.broadcasts || v.completions != trace.completions {
        return Err(unverified("recorded broadcasts differ from the rates".into()));
    }
    Ok(())
}

/// Builds the batch instance. A job's sequential work runs from the
/// request's arrival to the earlier of `C^E` and `B^O`; when `E` delivers
/// after `O` starts its broadcast, the job's parallel work is the rate `E`
/// gave the pair over `[B^O, C^E]` and the job stays alive until `C^E`.
pub fn build_batch_instance(
    inst: &BroadcastInstance,
    e_trace: &BroadcastTrace,
    o_trace: &BroadcastTrace,
) -> Result<ReductionOutput, ReductionError> {
    if !e_trace.schedule.attributed {
        return Err(ReductionError::NotAttributed);
    }
    check_verified("E", e_trace, inst, &e_trace.schedule.speed)?;
    check_verified("O", o_trace, inst, &Rational::one())?;
    let res = inst.resolve().map_err(|e| ReductionError::Unverified { which: "instance", reason: e.to_string() })?;

    let mut batches = Vec::with_capacity(res.n_requests());
    let mut links = Vec::with_capacity(res.n_requests());
    for (j, req) in inst.requests.iter().enumerate() {
        let a = &res.arrivals[j];
        let mut jobs = Vec::new();
        let mut blinks = Vec::new();
        for &i in &res.sets[j] {
            let e =
                first_at_or_after(&e_trace.broadcasts[i], a).ok_or(ReductionError::Unserved(req.id.clone(), "E"))?;
            let o =
                first_at_or_after(&o_trace.broadcasts[i], a).ok_or(ReductionError::Unserved(req.id.clone(), "O"))?;
            let seq = (&e.end).min(&o.begin).clone() - a;
            let mut job = SeqParJob::new(inst.items[i].id.0.clone(), seq, Rational::zero());
            if e.end > o.begin {
                job.par = e_trace.schedule.pair_integral(j, i, &o.begin, &e.end);
                job.sticky = true;
            }
            jobs.push(job);
            blinks.push(JobLink {
                request: j,
                item: i,
                e_completion: e.end.clone(),
                e_begin: e.begin.clone(),
                o_begin: o.begin.clone(),
            });
        }
        batches.push(Batch { id: req.id.0.clone(), arrival: a.clone(), jobs });
        links.push(blinks);
    }

    let mut classes = Vec::with_capacity(res.n_items());
    for (i, it) in inst.items.iter().enumerate() {
        let mut list = Vec::new();
        let obs = &o_trace.broadcasts[i];
        for (k, ob) in obs.iter().enumerate() {
            let lower = k.checked_sub(1).map(|p| &obs[p].begin);
            let mut class = ItemClass {
                k: k + 1,
                begin: ob.begin.clone(),
                end: ob.end.clone(),
                members: Vec::new(),
                minus: Vec::new(),
                plus: Vec::new(),
                w_minus: Rational::zero(),
                w_plus: Rational::zero(),
            };
            for (j, blinks) in links.iter().enumerate() {
                let Some(pos) = blinks.iter().position(|l| l.item == i) else { continue };
                let a = &res.arrivals[j];
                if lower.is_some_and(|l| a <= l) || a > &ob.begin {
                    continue;
                }
                let id = inst.requests[j].id.clone();
                class.members.push(id.clone());
                let par = &batches[j].jobs[pos].par;
                if par.is_positive() {
                    if blinks[pos].e_begin < ob.begin {
                        class.minus.push(id);
                        class.w_minus += par;
                    } else {
                        class.plus.push(id);
                        class.w_plus += par;
                    }
                }
            }
            list.push(class);
        }
        classes.push(ItemClasses { item: it.id.clone(), length: it.length.clone(), classes: list });
    }

    Ok(ReductionOutput { batches, links, classes, e_trace: e_trace.clone(), speed: e_trace.schedule.speed.clone() })
}

impl ReductionOutput {
    /// The per-item class report as JSON.
    pub fn class_report_json(&self) -> String {
        serde_json::to_string_pretty(&self.classes).expect("class report serializes")
    }

    /// Every class satisfies `W- + W+ <= 2l`; the first offending class
    /// otherwise.
    pub fn check_class_capacity(&self) -> Result<(), ReductionError> {
        for ic in &self.classes {
            let bound = Rational::from(2) * &ic.length;
            for c in &ic.classes {
                let total = &c.w_minus + &c.w_plus;
                if total > bound {
                    return Err(ReductionError::CapacityBound { item: ic.item.clone(), class: c.k, total, bound });
                }
            }
        }
        Ok(())
    }

    pub fn mirror_policy(&self) -> MirrorPolicy<'_> {
        MirrorPolicy { red: self }
    }
}

/// Inner policy replaying `E`: a batch's share is split among its alive
/// jobs in proportion to the rates `E` gave the corresponding (request,
/// item) pairs at the same instant (evenly when those are all zero).
/// Sticky jobs are released when `E` delivers their item.
pub struct MirrorPolicy<'a> {
    red: &'a ReductionOutput,
}

impl JobPolicy for MirrorPolicy<'_> {
    fn split(&self, batch: usize, t: &Rational, alive: &[usize], share: &Rational) -> Vec<Rational> {
        let sched = &self.red.e_trace.schedule;
        let weights: Vec<Rational> = match sched.segment_at(t) {
            Some(k) => alive
                .iter()
                .map(|&job| {
                    let l = &self.red.links[batch][job];
                    sched.segments[k].pair_rate(l.request, l.item).cloned().unwrap_or_default()
                })
                .collect(),
            None => vec![Rational::zero(); alive.len()],
        };
        let total: Rational = weights.iter().sum();
        if total.is_zero() {
            return vec![share / Rational::from(alive.len() as i64); alive.len()];
        }
        weights.into_iter().map(|w| share * w / &total).collect()
    }

    fn release_time(&self, batch: usize, job: usize) -> Option<Rational> {
        Some(self.red.links[batch][job].e_completion.clone())
    }

    fn next_change_after(&self, t: &Rational) -> Option<Rational> {
        let bp = &self.red.e_trace.schedule.breakpoints;
        bp.get(bp.partition_point(|b| b <= t)).cloned()
    }
}

/// The 2-speed schedule: for every item and every `O` broadcast of it, the
/// parallel work of that broadcast's class is packed into the broadcast's
/// window at twice `O`'s rate for the item, earliest arrival first. Jobs
/// without parallel work finish when their sequential phase ends.
pub fn construct_upsilon2(red: &ReductionOutput, o_trace: &BroadcastTrace) -> Result<JobTrace, ReductionError> {
    red.check_class_capacity()?;
    let two = Rational::from(2);
    let batches = &red.batches;
    let offsets: Vec<usize> = batches
        .iter()
        .scan(0, |acc, b| {
            let o = *acc;
            *acc += b.jobs.len();
            Some(o)
        })
        .collect();
    let n_jobs: usize = batches.iter().map(|b| b.jobs.len()).sum();
    let mut pieces: Vec<Vec<Piece>> = vec![Vec::new(); n_jobs];
    let mut completions: Vec<Rational> = Vec::with_capacity(n_jobs);
    for b in batches {
        for job in &b.jobs {
            completions.push(&b.arrival + &job.seq);
        }
    }
    let sched = &o_trace.schedule;
    for (i, ic) in red.classes.iter().enumerate() {
        for class in &ic.classes {
            let mut cap = Vec::new();
            for (k, seg) in sched.segments.iter().enumerate() {
                let (s, e) = sched.interval(k);
                let from = s.max(&class.begin);
                let to = e.min(&class.end);
                if from < to && seg.item_rates[i].is_positive() {
                    cap.push(Piece { from: from.clone(), to: to.clone(), rate: &two * &seg.item_rates[i] });
                }
            }
            let mut profile = CapacityProfile::from_pieces(sched.start().clone(), &cap);
            let mut members: Vec<(usize, usize)> = Vec::new();
            for (j, links) in red.links.iter().enumerate() {
                for (pos, l) in links.iter().enumerate() {
                    let id = &o_trace.request_ids[j];
                    if l.item == i && batches[j].jobs[pos].par.is_positive() && class.members.contains(id) {
                        members.push((j, pos));
                    }
                }
            }
            members.sort_by(|x, y| batches[x.0].arrival.cmp(&batches[y.0].arrival).then(x.cmp(y)));
            for (j, pos) in members {
                let job = &batches[j].jobs[pos];
                let start = &batches[j].arrival + &job.seq;
                let (used, finish) = profile.pack(&start, &job.par, None).ok_or_else(|| {
                    ReductionError::Packing(format!(
                        "item {}, class {}: no room for request {}",
                        ic.item, class.k, batches[j].id
                    ))
                })?;
                if finish > class.end {
                    return Err(ReductionError::Packing(format!(
                        "item {}, class {} overruns its window",
                        ic.item, class.k
                    )));
                }
                pieces[offsets[j] + pos] = used;
                completions[offsets[j] + pos] = finish;
            }
        }
    }
    let trace = JobTrace::from_pieces(two, batches, &pieces, completions);
    for (j, t) in trace.batch_completions.iter().enumerate() {
        let c = o_trace.completions[j].as_ref().ok_or(ReductionError::Unserved(o_trace.request_ids[j].clone(), "O"))?;
        if t > c {
            return Err(ReductionError::Packing(format!(
                "batch {} completes at {t}, after O serves it at {c}",
                batches[j].id
            )));
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broadcast_sim::{simulate_b_equiset, InnerPolicy};
    use crate::jobsched::simulate_equi_compose_a;
    use crate::oracle::{brute_force_bopt, SearchLimits};
    use crate::rational::rat;
    use crate::workloads::gen_figure1;

    fn figure1_reduction() -> (BroadcastInstance, BroadcastTrace, ReductionOutput) {
        let inst = gen_figure1();
        let e = simulate_b_equiset(&inst, &rat(3, 2), &InnerPolicy::EquiWithin).unwrap();
        let o =
            brute_force_bopt(&inst, &rat(1, 2), 14, SearchLimits::default()).unwrap().schedule.to_trace(&inst).unwrap();
        let red = build_batch_instance(&inst, &e, &o).unwrap();
        (inst, o, red)
    }

    #[test]
    fn figure1_fields_follow_definitions() {
        let (_, o, red) = figure1_reduction();
        assert_eq!(red.batches.len(), 4);
        let b2 = &red.batches[1];
        assert_eq!(b2.jobs.len(), 1);
        let link = &red.links[1][0];
        let o_begin = o.first_broadcast_after(&"A".into(), &rat(1, 1)).unwrap().unwrap().0;
        assert_eq!(link.o_begin, o_begin);
        assert_eq!(b2.jobs[0].seq, link.e_completion.clone().min(o_begin.clone()) - rat(1, 1));
        if link.e_completion > o_begin {
            assert!(b2.jobs[0].sticky);
            assert_eq!(b2.jobs[0].par, red.e_trace.schedule.pair_integral(1, 0, &o_begin, &link.e_completion));
        }
    }

    #[test]
    fn figure1_mirror_and_upsilon2() {
        let (_, o, red) = figure1_reduction();
        let eq = simulate_equi_compose_a(&red.batches, &red.speed, &red.mirror_policy()).unwrap();
        for (j, t) in eq.batch_completions.iter().enumerate() {
            assert_eq!(Some(t), red.e_trace.completions[j].as_ref());
        }
        red.check_class_capacity().unwrap();
        let up = construct_upsilon2(&red, &o).unwrap();
        up.check_invariants(&red.batches).unwrap();
        assert!(up.flow <= rat(11, 1));
    }

    #[test]
    fn single_request_mirror_is_trivial() {
        let inst = BroadcastInstance {
            items: vec![crate::instance::Item { id: "A".into(), length: rat(1, 1) }],
            requests: vec![crate::instance::Request { id: "S".into(), arrival: rat(0, 1), items: vec!["A".into()] }],
        };
        let e = simulate_b_equiset(&inst, &rat(2, 1), &InnerPolicy::EquiWithin).unwrap();
        let o =
            brute_force_bopt(&inst, &rat(1, 1), 2, SearchLimits::default()).unwrap().schedule.to_trace(&inst).unwrap();
        let red = build_batch_instance(&inst, &e, &o).unwrap();
        assert_eq!(red.batches[0].jobs[0].par, rat(1, 1));
        assert!(red.batches[0].jobs[0].sticky);
        let p = red.mirror_policy();
        assert_eq!(p.split(0, &rat(0, 1), &[0], &rat(2, 1)), vec![rat(2, 1)]);
    }
}
