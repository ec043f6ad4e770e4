use super::{singleton_batches, CapacityProfile, JobError, JobTrace, SeqParJob};
use crate::rational::Rational;

/// Builds a schedule on `1 + δ` processors from a 1-speed batch schedule
/// summary: batch `j` completed at `t_j` with flow `f_j`. Jobs are taken in
/// non-increasing arrival order and each job's parallel work is packed as
/// early as possible from `t_j` into the capacity left over. Every job must
/// finish by `t_j + f_j/δ`; jobs without parallel work complete at `t_j`.
pub fn construct_delayed_schedule(
    jdp: &[(Rational, SeqParJob)],
    summary: &[(Rational, Rational)],
    delta: &Rational,
) -> Result<JobTrace, JobError> {
    if !delta.is_positive() {
        return Err(JobError::Invalid(format!("delta must be > 0, got {delta}")));
    }
    if jdp.len() != summary.len() {
        return Err(JobError::Mismatch(format!("{} jobs but {} summary entries", jdp.len(), summary.len())));
    }
    let cap = Rational::one() + delta;
    let start = jdp.iter().map(|(a, _)| a.clone()).min().unwrap_or_default();
    let mut profile = CapacityProfile::constant(start, cap.clone());
    let mut order: Vec<usize> = (0..jdp.len()).collect();
    order.sort_by(|&x, &y| jdp[y].0.cmp(&jdp[x].0).then(x.cmp(&y)));
    let mut pieces = vec![Vec::new(); jdp.len()];
    let mut completions = vec![Rational::zero(); jdp.len()];
    for j in order {
        let (a, job) = &jdp[j];
        let (t, f) = &summary[j];
        if t < &(a + &job.seq) {
            return Err(JobError::ConstructionViolated {
                job: j,
                reason: format!("summary completion {t} precedes the sequential phase end {}", a + &job.seq),
            });
        }
        let deadline = t + f / delta;
        let (used, finish) = profile
            .pack(t, &job.par, None)
            .ok_or_else(|| JobError::ConstructionViolated { job: j, reason: "capacity exhausted".into() })?;
        if finish > deadline {
            return Err(JobError::ConstructionViolated {
                job: j,
                reason: format!("finishes at {finish}, deadline {deadline}"),
            });
        }
        pieces[j] = used;
        completions[j] = finish;
    }
    Ok(JobTrace::from_pieces(cap, &singleton_batches(jdp), &pieces, completions))
}
