use super::{Batch, JobError, JobTrace, SeqParJob};
use crate::rational::Rational;

fn max_seq(batch: &Batch) -> Rational {
    batch.jobs.iter().map(|j| j.seq.clone()).max().unwrap_or_default()
}

/// One job per batch: the longest sequential phase, then the processor area
/// the batch received in `trace` from the end of that phase to the batch's
/// completion.
pub fn build_jprime(batches: &[Batch], trace: &JobTrace) -> Result<Vec<(Rational, SeqParJob)>, JobError> {
    if batches.len() != trace.batch_ids.len()
        || batches.iter().zip(&trace.arrivals).any(|(b, a)| &b.arrival != a)
        || batches.iter().enumerate().any(|(k, b)| b.jobs.len() != trace.offsets[k + 1] - trace.offsets[k])
    {
        return Err(JobError::Mismatch("trace was not produced on these batches".into()));
    }
    Ok(batches
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let seq = max_seq(b);
            let start = &b.arrival + &seq;
            let par = trace.batch_integral(k, &start, &trace.batch_completions[k]);
            (b.arrival.clone(), SeqParJob::new(b.id.clone(), seq, par))
        })
        .collect())
}

/// One job per batch: the longest sequential phase, then the batch's total
/// parallel work.
pub fn build_jdoubleprime(batches: &[Batch]) -> Vec<(Rational, SeqParJob)> {
    batches
        .iter()
        .map(|b| {
            let par = b.jobs.iter().map(|j| &j.par).sum();
            (b.arrival.clone(), SeqParJob::new(b.id.clone(), max_seq(b), par))
        })
        .collect()
}

/// Outcome of replaying a schedule's allocations on other jobs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feasibility {
    pub feasible: bool,
    /// First flat job index that fails, with the reason.
    pub violation: Option<(usize, String)>,
}

/// Whether the allocations of `schedule` also complete `jobs` (index
/// aligned with its flat jobs) by the recorded completion times: each job's
/// sequential phase must end by the recorded parallel start, and the area
/// allocated from the end of its own sequential phase to the recorded
/// completion must cover its parallel work.
pub fn feasible_for(schedule: &JobTrace, jobs: &[(Rational, SeqParJob)]) -> Result<Feasibility, JobError> {
    if jobs.len() != schedule.n_jobs() {
        return Err(JobError::Mismatch(format!("{} jobs for a schedule of {}", jobs.len(), schedule.n_jobs())));
    }
    for (f, (a, job)) in jobs.iter().enumerate() {
        let start = a + &job.seq;
        if a < &schedule.arrivals[schedule.jobs[f].0] {
            return Ok(Feasibility {
                feasible: false,
                violation: Some((f, format!("arrives at {a}, before the scheduled batch"))),
            });
        }
        if start > schedule.par_starts[f] {
            return Ok(Feasibility {
                feasible: false,
                violation: Some((
                    f,
                    format!("sequential phase ends at {start}, after parallel start {}", schedule.par_starts[f]),
                )),
            });
        }
        let area = schedule.job_integral(f, &start, &schedule.job_completions[f]);
        if area < job.par {
            return Ok(Feasibility {
                feasible: false,
                violation: Some((f, format!("allocated area {area} below parallel work {}", job.par))),
            });
        }
    }
    Ok(Feasibility { feasible: true, violation: None })
}
