use crate::jobsched::{validate_batches, Batch, JobError, JobTrace, Piece};
use crate::rational::Rational;

/// Exact optimum of a batch instance with at most two batches on one
/// processor.
#[derive(Clone, Debug)]
pub struct MicroOptimum {
    pub flow: Rational,
    /// Per-batch `(completion, flow)` of the witness.
    pub summary: Vec<(Rational, Rational)>,
    /// Priority order of the witness (first batch is favoured).
    pub order: Vec<usize>,
    pub witness: JobTrace,
}

/// One processor, whole rate to the first job in priority order (batches in
/// `order`, jobs by index) whose parallel phase is open and unfinished.
pub fn priority_schedule(batches: &[Batch], order: &[usize]) -> Result<JobTrace, JobError> {
    validate_batches(batches)?;
    let mut flat: Vec<(usize, usize)> = Vec::new();
    for &b in order {
        for k in 0..batches[b].jobs.len() {
            flat.push((b, k));
        }
    }
    let offsets: Vec<usize> = batches
        .iter()
        .scan(0, |acc, b| {
            let o = *acc;
            *acc += b.jobs.len();
            Some(o)
        })
        .collect();
    let n = flat.len();
    let start = |&(b, k): &(usize, usize)| &batches[b].arrival + &batches[b].jobs[k].seq;
    let mut left: Vec<Rational> = flat.iter().map(|&(b, k)| batches[b].jobs[k].par.clone()).collect();
    let mut finish: Vec<Option<Rational>> = vec![None; n];
    let mut pieces = vec![Vec::new(); n];
    let mut now = batches.iter().map(|b| b.arrival.clone()).min().unwrap_or_default();
    loop {
        for p in 0..n {
            if finish[p].is_none() && start(&flat[p]) <= now && left[p].is_zero() {
                finish[p] = Some(now.clone());
            }
        }
        if finish.iter().all(Option::is_some) {
            break;
        }
        let run = (0..n).find(|&p| finish[p].is_none() && start(&flat[p]) <= now && left[p].is_positive());
        let mut next = (0..n).filter(|&p| finish[p].is_none()).map(|p| start(&flat[p])).filter(|t| t > &now).min();
        if let Some(p) = run {
            let t = &now + &left[p];
            if next.as_ref().is_none_or(|x| &t < x) {
                next = Some(t);
            }
        }
        let next = next.ok_or_else(|| JobError::Stalled(now.clone()))?;
        if let Some(p) = run {
            left[p] -= &next - &now;
            let (b, k) = flat[p];
            pieces[offsets[b] + k].push(Piece { from: now.clone(), to: next.clone(), rate: Rational::one() });
        }
        now = next;
    }
    let mut completions = vec![Rational::zero(); n];
    for (p, &(b, k)) in flat.iter().enumerate() {
        completions[offsets[b] + k] = finish[p].clone().expect("all finished");
    }
    Ok(JobTrace::from_pieces(Rational::one(), batches, &pieces, completions))
}

/// Single-processor makespan of parallel works released at the given
/// times, `max_k (r_k + Σ_{r ≥ r_k} p)`; `None` when there is no work.
fn makespan(jobs: &[(Rational, Rational)]) -> Option<Rational> {
    jobs.iter()
        .filter(|(_, p)| p.is_positive())
        .map(|(r, _)| r + jobs.iter().filter(|(r2, _)| r2 >= r).map(|(_, p)| p).sum::<Rational>())
        .max()
}

fn releases(b: &Batch) -> Vec<(Rational, Rational)> {
    b.jobs.iter().map(|j| (&b.arrival + &j.seq, j.par.clone())).collect()
}

fn seq_end(b: &Batch) -> Rational {
    b.jobs.iter().map(|j| &b.arrival + &j.seq).max().expect("batches are non-empty")
}

/// Closed-form lower bound when `x` finishes first: `x` cannot beat running
/// alone, and the other batch cannot finish before all work is done.
fn bound_first(batches: &[Batch], x: usize) -> Rational {
    let bx = &batches[x];
    let tx = makespan(&releases(bx)).map_or(seq_end(bx), |m| m.max(seq_end(bx)));
    let mut flow = tx - &bx.arrival;
    if let Some(y) = (0..batches.len()).find(|&y| y != x) {
        let by = &batches[y];
        let all: Vec<_> = batches.iter().flat_map(releases).collect();
        let ty = makespan(&all).map_or(seq_end(by), |m| m.max(seq_end(by)));
        flow += ty - &by.arrival;
    }
    flow
}

/// Exact single-processor optimum for one or two batches. Each priority
/// order gives a work-conserving schedule; the best of them is optimal
/// because it meets the closed-form bound for its first finisher.
pub fn batch_opt_micro(batches: &[Batch]) -> Result<MicroOptimum, JobError> {
    if batches.is_empty() || batches.len() > 2 {
        return Err(JobError::Invalid(format!("{} batches; the exact optimum handles 1 or 2", batches.len())));
    }
    let orders: Vec<Vec<usize>> = if batches.len() == 1 { vec![vec![0]] } else { vec![vec![0, 1], vec![1, 0]] };
    let mut best: Option<(JobTrace, Vec<usize>)> = None;
    for order in orders {
        let tr = priority_schedule(batches, &order)?;
        if best.as_ref().is_none_or(|(b, _)| tr.flow < b.flow) {
            best = Some((tr, order));
        }
    }
    let (witness, order) = best.expect("at least one order");
    let bound = (0..batches.len()).map(|x| bound_first(batches, x)).min().expect("non-empty");
    if witness.flow != bound {
        return Err(JobError::ConstructionViolated {
            job: 0,
            reason: format!("witness flow {} differs from the closed-form optimum {bound}", witness.flow),
        });
    }
    let summary = witness.batch_completions.iter().zip(&witness.arrivals).map(|(t, a)| (t.clone(), t - a)).collect();
    Ok(MicroOptimum { flow: witness.flow.clone(), summary, order, witness })
}
