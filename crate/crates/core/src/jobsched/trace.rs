use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Batch, JobError, Piece};
use crate::rational::Rational;

/// A batch schedule: per-job processor allocations (piecewise constant)
/// with the resulting job and batch completions. Jobs are indexed flat, in
/// batch order then job order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobTrace {
    pub processors: Rational,
    pub batch_ids: Vec<String>,
    pub arrivals: Vec<Rational>,
    /// `(batch, job id)` per flat job.
    pub jobs: Vec<(usize, String)>,
    /// First flat index of each batch, plus a final entry equal to the job count.
    pub offsets: Vec<usize>,
    /// Start of each job's parallel phase (arrival plus sequential work).
    pub par_starts: Vec<Rational>,
    pub breakpoints: Vec<Rational>,
    /// Positive allocations per interval, sorted by flat job index.
    pub allocations: Vec<Vec<(usize, Rational)>>,
    pub job_completions: Vec<Rational>,
    pub batch_completions: Vec<Rational>,
    pub flow: Rational,
}

/// Serialized form of a [`JobTrace`], keyed by `"batch:job"` and batch id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobTraceFile {
    pub processors: Rational,
    pub breakpoints: Vec<Rational>,
    pub allocations: Vec<BTreeMap<String, Rational>>,
    pub job_completions: BTreeMap<String, Rational>,
    pub batch_completions: BTreeMap<String, Rational>,
    pub flow: Rational,
}

impl JobTrace {
    /// Skeleton with job bookkeeping filled from `batches` and no intervals.
    pub(crate) fn skeleton(processors: Rational, batches: &[Batch]) -> Self {
        let mut jobs = Vec::new();
        let mut offsets = Vec::new();
        let mut par_starts = Vec::new();
        for (b, batch) in batches.iter().enumerate() {
            offsets.push(jobs.len());
            for job in &batch.jobs {
                jobs.push((b, job.id.clone()));
                par_starts.push(&batch.arrival + &job.seq);
            }
        }
        offsets.push(jobs.len());
        JobTrace {
            processors,
            batch_ids: batches.iter().map(|b| b.id.clone()).collect(),
            arrivals: batches.iter().map(|b| b.arrival.clone()).collect(),
            jobs,
            offsets,
            par_starts,
            breakpoints: Vec::new(),
            allocations: Vec::new(),
            job_completions: Vec::new(),
            batch_completions: Vec::new(),
            flow: Rational::zero(),
        }
    }

    /// Fills batch completions (max over jobs) and the flow from
    /// `job_completions`.
    pub(crate) fn finish(&mut self, job_completions: Vec<Rational>) {
        self.batch_completions = (0..self.batch_ids.len())
            .map(|b| {
                job_completions[self.offsets[b]..self.offsets[b + 1]]
                    .iter()
                    .max()
                    .cloned()
                    .unwrap_or_else(|| self.arrivals[b].clone())
            })
            .collect();
        self.flow = self.batch_completions.iter().zip(&self.arrivals).map(|(t, a)| t - a).sum();
        self.job_completions = job_completions;
    }

    /// Builds a trace from explicit per-job allocation pieces and
    /// completions.
    pub fn from_pieces(
        processors: Rational,
        batches: &[Batch],
        pieces: &[Vec<Piece>],
        job_completions: Vec<Rational>,
    ) -> Self {
        let mut tr = JobTrace::skeleton(processors, batches);
        let mut cuts: Vec<Rational> = pieces.iter().flatten().flat_map(|p| [p.from.clone(), p.to.clone()]).collect();
        cuts.sort();
        cuts.dedup();
        let mut allocations = vec![Vec::new(); cuts.len().saturating_sub(1)];
        for (job, list) in pieces.iter().enumerate() {
            for p in list.iter().filter(|p| p.rate.is_positive() && p.from < p.to) {
                let a = cuts.partition_point(|c| c < &p.from);
                let b = cuts.partition_point(|c| c < &p.to);
                for slot in &mut allocations[a..b] {
                    match slot.last_mut() {
                        Some((j, r)) if *j == job => *r += &p.rate,
                        _ => slot.push((job, p.rate.clone())),
                    }
                }
            }
        }
        tr.breakpoints = if cuts.is_empty() { Vec::new() } else { cuts };
        tr.allocations = allocations;
        tr.finish(job_completions);
        tr
    }

    pub fn n_jobs(&self) -> usize {
        self.jobs.len()
    }

    pub fn flat_index(&self, batch: usize, job: usize) -> usize {
        self.offsets[batch] + job
    }

    fn integrate(&self, from: &Rational, to: &Rational, rate: impl Fn(&[(usize, Rational)]) -> Rational) -> Rational {
        let mut acc = Rational::zero();
        if from >= to {
            return acc;
        }
        for (k, alloc) in self.allocations.iter().enumerate() {
            let lo = (&self.breakpoints[k]).max(from);
            let hi = (&self.breakpoints[k + 1]).min(to);
            if lo < hi {
                acc += rate(alloc) * (hi - lo);
            }
        }
        acc
    }

    /// `∫ ρ` of one flat job over `[from, to]`.
    pub fn job_integral(&self, job: usize, from: &Rational, to: &Rational) -> Rational {
        self.integrate(from, to, |alloc| {
            alloc.binary_search_by_key(&job, |(j, _)| *j).map(|k| alloc[k].1.clone()).unwrap_or_default()
        })
    }

    /// `∫ ρ` summed over the jobs of `batch`.
    pub fn batch_integral(&self, batch: usize, from: &Rational, to: &Rational) -> Rational {
        let range = self.offsets[batch]..self.offsets[batch + 1];
        self.integrate(from, to, |alloc| alloc.iter().filter(|(j, _)| range.contains(j)).map(|(_, r)| r).sum())
    }

    /// Checks capacity, the sequential-phase rule, exact parallel integrals
    /// (at least the work for sticky jobs), no allocation outside a job's
    /// lifetime, and the completion and flow totals.
    pub fn check_invariants(&self, batches: &[Batch]) -> Result<(), JobError> {
        let mismatch = |s: String| Err(JobError::Mismatch(s));
        if batches.len() != self.batch_ids.len() || self.offsets.last() != Some(&self.jobs.len()) {
            return mismatch("batch or job count differs".into());
        }
        if self.breakpoints.len() != self.allocations.len() + 1
            && !(self.breakpoints.is_empty() && self.allocations.is_empty())
        {
            return mismatch("breakpoints and allocations disagree".into());
        }
        for w in self.breakpoints.windows(2) {
            if w[0] >= w[1] {
                return mismatch("breakpoints not increasing".into());
            }
        }
        for (k, alloc) in self.allocations.iter().enumerate() {
            let total: Rational = alloc.iter().map(|(_, r)| r).sum();
            if total > self.processors || alloc.iter().any(|(_, r)| r.is_negative()) {
                return mismatch(format!("interval {k} exceeds capacity or is negative"));
            }
            for (j, _) in alloc {
                let b = self.jobs[*j].0;
                if self.breakpoints[k] < self.arrivals[b] || self.breakpoints[k + 1] > self.job_completions[*j] {
                    return mismatch(format!("job {j} allocated outside its lifetime"));
                }
            }
        }
        for (b, batch) in batches.iter().enumerate() {
            if batch.arrival != self.arrivals[b] || batch.jobs.len() != self.offsets[b + 1] - self.offsets[b] {
                return mismatch(format!("batch {b} differs"));
            }
            for (k, job) in batch.jobs.iter().enumerate() {
                let f = self.flat_index(b, k);
                let start = &batch.arrival + &job.seq;
                let done = &self.job_completions[f];
                if done < &start {
                    return mismatch(format!("job {f} completes before its sequential phase ends"));
                }
                let area = self.job_integral(f, &start, done);
                if (job.sticky && area < job.par) || (!job.sticky && area != job.par) {
                    return mismatch(format!("job {f}: parallel area {area}, work {}", job.par));
                }
            }
        }
        let mut expect = self.clone();
        expect.finish(self.job_completions.clone());
        if expect.batch_completions != self.batch_completions || expect.flow != self.flow {
            return mismatch("batch completions or flow inconsistent".into());
        }
        Ok(())
    }

    fn key(&self, f: usize) -> String {
        let (b, id) = &self.jobs[f];
        format!("{}:{}", self.batch_ids[*b], id)
    }

    pub fn to_file(&self) -> JobTraceFile {
        JobTraceFile {
            processors: self.processors.clone(),
            breakpoints: self.breakpoints.clone(),
            allocations: self
                .allocations
                .iter()
                .map(|a| a.iter().map(|(j, r)| (self.key(*j), r.clone())).collect())
                .collect(),
            job_completions: (0..self.n_jobs()).map(|f| (self.key(f), self.job_completions[f].clone())).collect(),
            batch_completions: self.batch_ids.iter().cloned().zip(self.batch_completions.iter().cloned()).collect(),
            flow: self.flow.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("job trace serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jobsched::SeqParJob;
    use crate::rational::rat;

    #[test]
    fn pieces_merge_into_intervals() {
        let batches = vec![Batch {
            id: "B".into(),
            arrival: rat(0, 1),
            jobs: vec![SeqParJob::new("a", rat(0, 1), rat(1, 1)), SeqParJob::new("b", rat(1, 1), rat(1, 1))],
        }];
        let pieces = vec![
            vec![Piece { from: rat(0, 1), to: rat(2, 1), rate: rat(1, 2) }],
            vec![
                Piece { from: rat(1, 1), to: rat(2, 1), rate: rat(1, 2) },
                Piece { from: rat(2, 1), to: rat(3, 1), rate: rat(1, 2) },
            ],
        ];
        let tr = JobTrace::from_pieces(rat(1, 1), &batches, &pieces, vec![rat(2, 1), rat(3, 1)]);
        assert_eq!(tr.breakpoints, vec![rat(0, 1), rat(1, 1), rat(2, 1), rat(3, 1)]);
        assert_eq!(tr.batch_completions, vec![rat(3, 1)]);
        assert_eq!(tr.flow, rat(3, 1));
        assert_eq!(tr.batch_integral(0, &rat(0, 1), &rat(3, 1)), rat(2, 1));
        tr.check_invariants(&batches).unwrap();
        let file = tr.to_file();
        assert_eq!(file.job_completions["B:b"], rat(3, 1));
    }
}
