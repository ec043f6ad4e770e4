use super::{singleton_batches, validate_batches, Batch, JobError, JobTrace, SeqParJob};
use crate::rational::Rational;

/// How a batch's share is split among its alive jobs.
///
/// Implementations must be deterministic. `split` receives the batch
/// index, the current time, the alive jobs of the batch (indices within the
/// batch, sorted) and the batch's share, and must return one non-negative
/// rate per alive job summing exactly to the share.
pub trait JobPolicy {
    fn split(&self, batch: usize, t: &Rational, alive: &[usize], share: &Rational) -> Vec<Rational>;

    /// Release time of a sticky job; it stays alive until then.
    fn release_time(&self, _batch: usize, _job: usize) -> Option<Rational> {
        None
    }

    /// Next time after `t` at which `split` may change its answer for an
    /// unchanged alive set.
    fn next_change_after(&self, _t: &Rational) -> Option<Rational> {
        None
    }
}

/// Equal split over the batch's alive jobs.
#[derive(Clone, Copy, Debug, Default)]
pub struct EquiJobs;

impl JobPolicy for EquiJobs {
    fn split(&self, _batch: usize, _t: &Rational, alive: &[usize], share: &Rational) -> Vec<Rational> {
        vec![share / Rational::from(alive.len() as i64); alive.len()]
    }
}

/// Whole share to the lowest-indexed alive job.
#[derive(Clone, Copy, Debug, Default)]
pub struct MinIdxJobs;

impl JobPolicy for MinIdxJobs {
    fn split(&self, _batch: usize, _t: &Rational, alive: &[usize], share: &Rational) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); alive.len()];
        v[0] = share.clone();
        v
    }
}

fn check_split(rates: &[Rational], alive: &[usize], share: &Rational) -> Result<(), String> {
    if rates.len() != alive.len() {
        return Err(format!("returned {} rates for {} jobs", rates.len(), alive.len()));
    }
    if rates.iter().any(Rational::is_negative) {
        return Err("negative rate".into());
    }
    let total: Rational = rates.iter().sum();
    if &total != share {
        return Err(format!("rates sum to {total}, share is {share}"));
    }
    Ok(())
}

/// Equi∘A on `p` processors: every alive batch gets `p / #alive batches`,
/// split among its alive jobs by `policy`. Allocation to a job still in its
/// sequential phase, or to a sticky job with no parallel work left, is
/// spent without effect.
pub fn simulate_equi_compose_a(batches: &[Batch], p: &Rational, policy: &dyn JobPolicy) -> Result<JobTrace, JobError> {
    validate_batches(batches)?;
    if !p.is_positive() {
        return Err(JobError::NonPositiveProcessors(p.clone()));
    }
    let mut trace = JobTrace::skeleton(p.clone(), batches);
    let n = trace.n_jobs();
    let job = |f: usize| -> &SeqParJob {
        let (b, _) = trace.jobs[f];
        &batches[b].jobs[f - trace.offsets[b]]
    };
    let mut release: Vec<Option<Rational>> = vec![None; n];
    for (f, slot) in release.iter_mut().enumerate() {
        let (b, _) = trace.jobs[f];
        if job(f).sticky {
            let k = f - trace.offsets[b];
            *slot = Some(policy.release_time(b, k).ok_or(JobError::NoRelease { batch: b, job: k })?);
        }
    }
    let mut done = vec![Rational::zero(); n];
    let mut completion: Vec<Option<Rational>> = vec![None; n];
    let mut remaining_jobs = n;
    let mut now = batches.iter().map(|b| b.arrival.clone()).min().unwrap_or_default();
    let mut breakpoints = vec![now.clone()];
    let mut allocations: Vec<Vec<(usize, Rational)>> = Vec::new();

    loop {
        for f in 0..n {
            let (b, _) = trace.jobs[f];
            if completion[f].is_none()
                && batches[b].arrival <= now
                && trace.par_starts[f] <= now
                && done[f] >= job(f).par
                && release[f].as_ref().is_none_or(|r| r <= &now)
            {
                completion[f] = Some(now.clone());
                remaining_jobs -= 1;
            }
        }
        if remaining_jobs == 0 {
            break;
        }
        let alive: Vec<usize> = (0..batches.len())
            .filter(|&b| {
                batches[b].arrival <= now && (trace.offsets[b]..trace.offsets[b + 1]).any(|f| completion[f].is_none())
            })
            .collect();
        let mut rates = vec![Rational::zero(); n];
        if !alive.is_empty() {
            let share = p / Rational::from(alive.len() as i64);
            for &b in &alive {
                let jobs: Vec<usize> =
                    (0..batches[b].jobs.len()).filter(|&k| completion[trace.offsets[b] + k].is_none()).collect();
                let split = policy.split(b, &now, &jobs, &share);
                check_split(&split, &jobs, &share).map_err(|reason| JobError::PolicyContract {
                    batch: b,
                    at: now.clone(),
                    reason,
                })?;
                for (k, r) in jobs.into_iter().zip(split) {
                    rates[trace.offsets[b] + k] = r;
                }
            }
        }

        let mut next: Option<Rational> = None;
        let mut consider = |t: Rational| {
            if t > now && next.as_ref().is_none_or(|x| &t < x) {
                next = Some(t);
            }
        };
        for b in batches {
            consider(b.arrival.clone());
        }
        for f in 0..n {
            if completion[f].is_some() || batches[trace.jobs[f].0].arrival > now {
                continue;
            }
            consider(trace.par_starts[f].clone());
            if let Some(r) = &release[f] {
                consider(r.clone());
            }
            if trace.par_starts[f] <= now && rates[f].is_positive() && done[f] < job(f).par {
                consider(&now + (&job(f).par - &done[f]) / &rates[f]);
            }
        }
        if let Some(t) = policy.next_change_after(&now) {
            consider(t);
        }
        let next = next.ok_or_else(|| JobError::Stalled(now.clone()))?;
        let dt = &next - &now;
        for f in 0..n {
            if trace.par_starts[f] <= now && rates[f].is_positive() && done[f] < job(f).par {
                done[f] += &rates[f] * &dt;
                debug_assert!(done[f] <= job(f).par);
            }
        }
        allocations.push(rates.into_iter().enumerate().filter(|(_, r)| r.is_positive()).collect());
        breakpoints.push(next.clone());
        now = next;
    }
    if allocations.is_empty() {
        breakpoints.clear();
    }
    trace.breakpoints = breakpoints;
    trace.allocations = allocations;
    trace.finish(completion.into_iter().map(|c| c.expect("all jobs complete")).collect());
    Ok(trace)
}

/// Equi on `p` processors: each uncompleted job gets `p / #uncompleted`.
pub fn simulate_equi(jobs: &[(Rational, SeqParJob)], p: &Rational) -> Result<JobTrace, JobError> {
    simulate_equi_compose_a(&singleton_batches(jobs), p, &EquiJobs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn job(id: &str, s: i64, p: i64) -> SeqParJob {
        SeqParJob::new(id, rat(s, 1), rat(p, 1))
    }

    #[test]
    fn single_job_equi() {
        let tr = simulate_equi(&[(rat(0, 1), job("J", 1, 2))], &rat(1, 1)).unwrap();
        assert_eq!(tr.job_completions, vec![rat(3, 1)]);
        assert_eq!(tr.flow, rat(3, 1));
    }

    #[test]
    fn two_parallel_jobs_share() {
        let tr = simulate_equi(&[(rat(0, 1), job("a", 0, 1)), (rat(0, 1), job("b", 0, 1))], &rat(1, 1)).unwrap();
        assert_eq!(tr.job_completions, vec![rat(2, 1), rat(2, 1)]);
        assert_eq!(tr.flow, rat(4, 1));
    }

    #[test]
    fn sequential_jobs_ignore_allocation() {
        let jobs = [(rat(0, 1), job("a", 1, 0)), (rat(0, 1), job("b", 1, 0))];
        let tr = simulate_equi(&jobs, &rat(1, 1)).unwrap();
        assert_eq!(tr.flow, rat(2, 1));
    }

    #[test]
    fn min_idx_batch() {
        let batches = vec![Batch { id: "B".into(), arrival: rat(0, 1), jobs: vec![job("1", 1, 1), job("2", 2, 0)] }];
        let tr = simulate_equi_compose_a(&batches, &rat(1, 1), &MinIdxJobs).unwrap();
        assert_eq!(tr.job_completions, vec![rat(2, 1), rat(2, 1)]);
        assert_eq!(tr.flow, rat(2, 1));
        assert_eq!(tr.job_integral(0, &rat(1, 1), &rat(2, 1)), rat(1, 1));
        tr.check_invariants(&batches).unwrap();
    }

    #[test]
    fn two_batches_split_evenly() {
        let batches = vec![
            Batch { id: "X".into(), arrival: rat(0, 1), jobs: vec![job("a", 0, 1)] },
            Batch { id: "Y".into(), arrival: rat(0, 1), jobs: vec![job("a", 0, 1)] },
        ];
        let tr = simulate_equi_compose_a(&batches, &rat(1, 1), &MinIdxJobs).unwrap();
        assert_eq!(tr.flow, rat(4, 1));
    }

    struct Broken;
    impl JobPolicy for Broken {
        fn split(&self, _: usize, _: &Rational, alive: &[usize], _: &Rational) -> Vec<Rational> {
            vec![Rational::zero(); alive.len()]
        }
    }

    #[test]
    fn policy_contract_enforced() {
        let batches = vec![Batch { id: "B".into(), arrival: rat(0, 1), jobs: vec![job("a", 0, 1)] }];
        assert!(matches!(simulate_equi_compose_a(&batches, &rat(1, 1), &Broken), Err(JobError::PolicyContract { .. })));
    }

    #[test]
    fn sticky_without_release_rejected() {
        let mut j = job("a", 0, 1);
        j.sticky = true;
        let batches = vec![Batch { id: "B".into(), arrival: rat(0, 1), jobs: vec![j] }];
        assert!(matches!(simulate_equi_compose_a(&batches, &rat(1, 1), &EquiJobs), Err(JobError::NoRelease { .. })));
    }

    #[test]
    fn idles_between_arrivals() {
        let tr = simulate_equi(&[(rat(0, 1), job("a", 0, 1)), (rat(5, 1), job("b", 0, 1))], &rat(1, 1)).unwrap();
        assert_eq!(tr.job_completions, vec![rat(1, 1), rat(6, 1)]);
        assert_eq!(tr.flow, rat(2, 1));
    }
}
