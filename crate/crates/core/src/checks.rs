//! Randomized property chains, one trial per seed. Each trial generates its
//! own instance and returns a verdict; the CLI `verify` command and the
//! acceptance suite are thin loops over these.

use std::fmt;
use std::str::FromStr;

use crate::broadcast_sim::{simulate_b_equiset, simulate_b_equiset_edf, simulate_ignore_deps, Baseline, InnerPolicy};
use crate::instance::BroadcastInstance;
use crate::jobsched::{
    build_jdoubleprime, build_jprime, construct_delayed_schedule, feasible_for, simulate_equi, simulate_equi_compose_a,
    singleton_batches, Batch, EquiJobs, JobPolicy, MinIdxJobs,
};
use crate::oracle::{
    batch_opt_micro, brute_force_bopt, default_horizon, default_slot, greedy_upper_bound, priority_schedule,
    verify_schedule, OracleError, SearchLimits,
};
use crate::rational::Rational;
use crate::reduction::{build_batch_instance, construct_upsilon2};
use crate::trace::BroadcastTrace;
use crate::workloads::{gen_fact1_adversarial, gen_oracle_scale, gen_random_batches, gen_small_random};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Property {
    Lemma1,
    Lemma2,
    Lemma3,
    Lemma4,
    Upsilon2,
    Theorem1,
    EdfPreemption,
    Fact1Gap,
    Conservation,
}

impl Property {
    pub const ALL: [Property; 9] = [
        Property::Lemma1,
        Property::Lemma2,
        Property::Lemma3,
        Property::Lemma4,
        Property::Upsilon2,
        Property::Theorem1,
        Property::EdfPreemption,
        Property::Fact1Gap,
        Property::Conservation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Lemma1 => "lemma1",
            Property::Lemma2 => "lemma2",
            Property::Lemma3 => "lemma3",
            Property::Lemma4 => "lemma4",
            Property::Upsilon2 => "upsilon2",
            Property::Theorem1 => "theorem1",
            Property::EdfPreemption => "edf-preemption",
            Property::Fact1Gap => "fact1-gap",
            Property::Conservation => "conservation",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Property::ALL.iter().map(|p| p.name()).collect();
            format!("unknown property {s:?}; expected one of {}", names.join(", "))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass(String),
    Fail(String),
    /// The trial exceeded the oracle's scale; not a failure.
    Skipped(String),
}

impl Verdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass(d) => write!(f, "pass {d}"),
            Verdict::Fail(d) => write!(f, "FAIL {d}"),
            Verdict::Skipped(d) => write!(f, "skipped (scale) {d}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckParams {
    pub eps: Rational,
    pub delta: Rational,
    /// Speed for the broadcast chains; `(4+ε)(1+δ)` when unset.
    pub speed: Option<Rational>,
    pub budget: u64,
}

impl Default for CheckParams {
    fn default() -> Self {
        CheckParams { eps: Rational::one(), delta: Rational::one(), speed: None, budget: 2_000_000 }
    }
}

impl CheckParams {
    pub fn algorithm_speed(&self) -> Rational {
        self.speed.clone().unwrap_or_else(|| (Rational::from(4) + &self.eps) * (Rational::one() + &self.delta))
    }
}

type Outcome = Result<String, String>;

fn fail<T>(msg: impl Into<String>) -> Result<T, String> {
    Err(msg.into())
}

fn err<E: fmt::Display>(ctx: &'static str) -> impl Fn(E) -> String {
    move |e| format!("{ctx}: {e}")
}

/// Runs one trial of `prop` with the given seed.
pub fn run_check(prop: Property, seed: u64, params: &CheckParams) -> Verdict {
    let out = match prop {
        Property::Lemma1 => lemma1(&gen_random_batches(5, 4, seed)),
        Property::Lemma2 => lemma2(&gen_random_batches(5, 4, seed)),
        Property::Lemma3 => lemma3(&gen_random_batches(2, 4, seed)),
        Property::Lemma4 => lemma4(&gen_small_random(seed), params),
        Property::Upsilon2 => upsilon2(&gen_oracle_scale(3, 4, seed), params),
        Property::Theorem1 => return theorem1(&gen_oracle_scale(3, 4, seed), params),
        Property::EdfPreemption => edf_structure(&gen_small_random(seed), params),
        Property::Fact1Gap => fact1_gap([16, 36, 64, 100][(seed % 4) as usize]),
        Property::Conservation => conservation(&gen_small_random(seed)),
    };
    match out {
        Ok(d) => Verdict::Pass(d),
        Err(d) => Verdict::Fail(d),
    }
}

const JOB_POLICIES: [(&str, &dyn JobPolicy); 2] = [("equi", &EquiJobs), ("minidx", &MinIdxJobs)];

/// Equi∘A on the batches equals Equi on J′, in total and per batch.
pub fn lemma1(batches: &[Batch]) -> Outcome {
    let p = Rational::one();
    for (name, policy) in JOB_POLICIES {
        let tr = simulate_equi_compose_a(batches, &p, policy).map_err(err("Equi∘A"))?;
        tr.check_invariants(batches).map_err(err("Equi∘A trace"))?;
        let jp = build_jprime(batches, &tr).map_err(err("J′"))?;
        let eq = simulate_equi(&jp, &p).map_err(err("Equi on J′"))?;
        eq.check_invariants(&singleton_batches(&jp)).map_err(err("Equi trace"))?;
        if eq.flow != tr.flow {
            return fail(format!("{name}: Equi∘A flow {} but Equi on J′ flow {}", tr.flow, eq.flow));
        }
        if eq.job_completions != tr.batch_completions {
            return fail(format!("{name}: per-batch completions differ"));
        }
    }
    Ok(format!("{} batches, flows equal", batches.len()))
}

/// J″ dominates J′, and J″ schedules (from Equi and from the delayed
/// construction over a FIFO single-processor schedule) transfer to J′.
pub fn lemma2(batches: &[Batch]) -> Outcome {
    let p = Rational::one();
    let jdp = build_jdoubleprime(batches);
    let mut order: Vec<usize> = (0..batches.len()).collect();
    order.sort_by(|&a, &b| batches[a].arrival.cmp(&batches[b].arrival).then(a.cmp(&b)));
    let fifo = priority_schedule(batches, &order).map_err(err("FIFO schedule"))?;
    let summary: Vec<(Rational, Rational)> =
        fifo.batch_completions.iter().zip(&fifo.arrivals).map(|(t, a)| (t.clone(), t - a)).collect();
    let delayed = construct_delayed_schedule(&jdp, &summary, &Rational::one()).map_err(err("delayed schedule"))?;
    let equi = simulate_equi(&jdp, &p).map_err(err("Equi on J″"))?;
    for (name, policy) in JOB_POLICIES {
        let tr = simulate_equi_compose_a(batches, &p, policy).map_err(err("Equi∘A"))?;
        let jp = build_jprime(batches, &tr).map_err(err("J′"))?;
        for (k, ((_, a), (_, b))) in jp.iter().zip(&jdp).enumerate() {
            if a.seq != b.seq || a.par > b.par {
                return fail(format!("{name}: J′ job {k} not dominated by J″"));
            }
        }
        for (sname, sched) in [("equi", &equi), ("delayed", &delayed)] {
            let f = feasible_for(sched, &jp).map_err(err("transfer"))?;
            if !f.feasible {
                return fail(format!("{name}: {sname} J″ schedule infeasible for J′: {:?}", f.violation));
            }
        }
    }
    Ok(format!("{} batches, transfers feasible", batches.len()))
}

/// The delayed construction over an exact single-processor optimum is
/// valid and within `(1 + 1/δ)` of it, for δ in {1/2, 1, 2}.
pub fn lemma3(batches: &[Batch]) -> Outcome {
    let opt = batch_opt_micro(batches).map_err(err("micro optimum"))?;
    let jdp = build_jdoubleprime(batches);
    let mut worst = String::new();
    for delta in [Rational::new(1, 2), Rational::one(), Rational::from(2)] {
        let tr = construct_delayed_schedule(&jdp, &opt.summary, &delta).map_err(err("construction"))?;
        tr.check_invariants(&singleton_batches(&jdp)).map_err(err("constructed schedule"))?;
        let bound = (Rational::one() + delta.recip()) * &opt.flow;
        if tr.flow > bound {
            return fail(format!("δ={delta}: flow {} above {bound}", tr.flow));
        }
        worst = format!("opt {} delayed {}", opt.flow, tr.flow);
    }
    Ok(worst)
}

/// A verified speed-1 reference trace: the exact discrete optimum when it
/// fits the budget, the greedy schedule otherwise.
pub fn reference_trace(inst: &BroadcastInstance, budget: u64) -> Result<(BroadcastTrace, &'static str), String> {
    let slot = default_slot(inst);
    let opt = default_horizon(inst, &slot).and_then(|h| brute_force_bopt(inst, &slot, h, SearchLimits { budget }));
    let (res, label) = match opt {
        Ok(r) => (r, "optimal"),
        Err(OracleError::Scale(_)) => (greedy_upper_bound(inst).map_err(err("greedy"))?, "greedy"),
        Err(e) => return fail(format!("oracle: {e}")),
    };
    Ok((res.schedule.to_trace(inst).map_err(err("reference"))?, label))
}

/// B-EquiSet flow never exceeds Equi∘mirror on the reduced batches.
pub fn lemma4(inst: &BroadcastInstance, params: &CheckParams) -> Outcome {
    let s = params.algorithm_speed();
    let e = simulate_b_equiset(inst, &s, &InnerPolicy::EquiWithin).map_err(err("B-EquiSet"))?;
    let (o, _) = reference_trace(inst, params.budget)?;
    let red = build_batch_instance(inst, &e, &o).map_err(err("reduction"))?;
    let eq = simulate_equi_compose_a(&red.batches, &s, &red.mirror_policy()).map_err(err("Equi∘mirror"))?;
    eq.check_invariants(&red.batches).map_err(err("Equi∘mirror trace"))?;
    let ef = e.flow.clone().ok_or("B-EquiSet left a request unserved")?;
    for (j, t) in eq.batch_completions.iter().enumerate() {
        if Some(t) < e.completions[j].as_ref() {
            return fail(format!("batch {j} completes at {t}, before its request"));
        }
    }
    if ef > eq.flow {
        return fail(format!("B-EquiSet flow {ef} above Equi∘mirror flow {}", eq.flow));
    }
    Ok(format!("B-EquiSet {ef} <= Equi∘mirror {}", eq.flow))
}

/// Every class fits in twice its item length and the 2-speed schedule is
/// valid with flow at most the reference's.
pub fn upsilon2(inst: &BroadcastInstance, params: &CheckParams) -> Outcome {
    let s = params.algorithm_speed();
    let e = simulate_b_equiset(inst, &s, &InnerPolicy::EquiWithin).map_err(err("B-EquiSet"))?;
    let (o, label) = reference_trace(inst, params.budget)?;
    let red = build_batch_instance(inst, &e, &o).map_err(err("reduction"))?;
    red.check_class_capacity().map_err(err("class capacity"))?;
    let up = construct_upsilon2(&red, &o).map_err(err("2-speed schedule"))?;
    up.check_invariants(&red.batches).map_err(err("2-speed trace"))?;
    let of = o.flow.clone().ok_or("reference left a request unserved")?;
    if up.flow > of {
        return fail(format!("2-speed flow {} above {label} reference {of}", up.flow));
    }
    let classes: usize = red.classes.iter().map(|c| c.classes.len()).sum();
    Ok(format!("{classes} classes within 2l; flow {} <= {label} {of}", up.flow))
}

/// B-EquiSet at `(4+ε)(1+δ)` is within `(2+8/ε)(1+1/δ)` of the discrete
/// optimum (an upper bound on the true optimum).
pub fn theorem1(inst: &BroadcastInstance, params: &CheckParams) -> Verdict {
    let slot = default_slot(inst);
    let opt = match default_horizon(inst, &slot)
        .and_then(|h| brute_force_bopt(inst, &slot, h, SearchLimits { budget: params.budget }))
    {
        Ok(r) => r,
        Err(OracleError::Scale(m)) => return Verdict::Skipped(m),
        Err(e) => return Verdict::Fail(format!("oracle: {e}")),
    };
    let s = (Rational::from(4) + &params.eps) * (Rational::one() + &params.delta);
    let ratio_bound = (Rational::from(2) + Rational::from(8) / &params.eps) * (Rational::one() + params.delta.recip());
    let e = match simulate_b_equiset(inst, &s, &InnerPolicy::EquiWithin) {
        Ok(e) => e,
        Err(e) => return Verdict::Fail(format!("B-EquiSet: {e}")),
    };
    let Some(ef) = e.flow else { return Verdict::Fail("B-EquiSet left a request unserved".into()) };
    if ef > &ratio_bound * &opt.flow {
        return Verdict::Fail(format!("flow {ef} above {ratio_bound} x upper bound {}", opt.flow));
    }
    Verdict::Pass(format!("flow {ef}, oracle upper bound {}, ratio {}", opt.flow, (&ef / &opt.flow).to_decimal(6)))
}

/// B-EquiSet-Edf: one item at a time, all deadlines met, preemptions at
/// most the number of broadcasts (and of releases), valid trace.
pub fn edf_structure(inst: &BroadcastInstance, params: &CheckParams) -> Outcome {
    let out = simulate_b_equiset_edf(inst, &params.eps, &params.delta).map_err(err("B-EquiSet-Edf"))?;
    out.trace.check_invariants(inst).map_err(err("EDF trace"))?;
    for (k, seg) in out.trace.schedule.segments.iter().enumerate() {
        if seg.item_rates.iter().filter(|r| r.is_positive()).count() > 1 {
            return fail(format!("interval {k} broadcasts more than one item"));
        }
    }
    if !out.deadline_misses.is_empty() {
        return fail(format!("{} virtual deadlines missed", out.deadline_misses.len()));
    }
    let nb = out.trace.n_broadcasts();
    if out.preemptions > nb || out.preemptions > out.releases.len() {
        return fail(format!("{} preemptions for {nb} broadcasts", out.preemptions));
    }
    round_trip(&out.trace, inst)?;
    Ok(format!("{} preemptions, {nb} broadcasts, {} releases", out.preemptions, out.releases.len()))
}

/// Exact formula values for the adversarial construction at `n`: the
/// baseline flow lower bound `(√n+1)(n-√n)`, the greedy upper bound
/// `n + √n(√n+1)/2`, and their ratio.
pub fn fact1_bounds(n: usize) -> (Rational, Rational, Rational) {
    let r = (n as f64).sqrt().round() as i64;
    let n = n as i64;
    let lower = Rational::from((r + 1) * (n - r));
    let upper = Rational::from(n) + Rational::new(r * (r + 1), 2);
    let ratio = &lower / &upper;
    (lower, upper, ratio)
}

/// Baseline flow on the adversarial instance at speed 1 is at least the
/// formula bound, greedy is at most its bound, so the measured ratio is at
/// least their quotient.
pub fn fact1_gap(n: usize) -> Outcome {
    let (lower, upper, ratio) = fact1_bounds(n);
    let rep = gen_fact1_adversarial(n, &Rational::one(), &Baseline::EquiPerItem).map_err(err("adversary"))?;
    let base =
        simulate_ignore_deps(&rep.instance, &Rational::one(), &Baseline::EquiPerItem).map_err(err("baseline"))?;
    let bf = base.flow.clone().ok_or("baseline left a request unserved")?;
    let g = greedy_upper_bound(&rep.instance).map_err(err("greedy"))?;
    if bf < lower {
        return fail(format!("n={n}: baseline flow {bf} below {lower}"));
    }
    if g.flow > upper {
        return fail(format!("n={n}: greedy flow {} above {upper}", g.flow));
    }
    let measured = &bf / &g.flow;
    if measured < ratio {
        return fail(format!("n={n}: ratio {measured} below {ratio}"));
    }
    Ok(format!(
        "n={n}: baseline {bf} >= {lower}, greedy {} <= {upper}, ratio {} >= {}",
        g.flow,
        measured.to_decimal(6),
        ratio.to_decimal(6)
    ))
}

fn round_trip(trace: &BroadcastTrace, inst: &BroadcastInstance) -> Result<(), String> {
    let v = verify_schedule(&trace.schedule, inst, &trace.schedule.speed).map_err(err("verifier"))?;
    if v.broadcasts != trace.broadcasts || v.completions != trace.completions || v.flow != trace.flow {
        return fail("verifier disagrees with the simulator");
    }
    Ok(())
}

/// On every interval each alive request receives exactly `speed / #alive`,
/// and requests that are not alive receive nothing.
pub fn fair_share(trace: &BroadcastTrace, inst: &BroadcastInstance) -> Result<(), String> {
    let s = &trace.schedule;
    for (k, seg) in s.segments.iter().enumerate() {
        let t = &s.breakpoints[k];
        let alive: Vec<usize> = (0..inst.requests.len())
            .filter(|&j| &inst.requests[j].arrival <= t && trace.completions[j].as_ref().is_none_or(|c| c > t))
            .collect();
        let share = if alive.is_empty() { Rational::zero() } else { &s.speed / Rational::from(alive.len() as i64) };
        for j in 0..inst.requests.len() {
            let want = if alive.contains(&j) { share.clone() } else { Rational::zero() };
            let got = seg.request_share(j);
            if got != want {
                return fail(format!("interval {k}: request {j} receives {got}, expected {want}"));
            }
        }
    }
    Ok(())
}

/// Every simulator on one random instance: trace invariants (capacity,
/// aggregation, exact broadcast integrals, completions), fair shares for
/// B-EquiSet, and verifier round trips.
pub fn conservation(inst: &BroadcastInstance) -> Outcome {
    let one = Rational::one();
    let speeds = [Rational::one(), Rational::new(3, 2), Rational::from(10)];
    let mut runs = 0;
    for s in &speeds {
        for policy in [InnerPolicy::EquiWithin, InnerPolicy::MinIdx] {
            let tr = simulate_b_equiset(inst, s, &policy).map_err(err("B-EquiSet"))?;
            tr.check_invariants(inst).map_err(err("B-EquiSet trace"))?;
            fair_share(&tr, inst)?;
            round_trip(&tr, inst)?;
            runs += 1;
        }
        for b in [Baseline::EquiPerItem, Baseline::default()] {
            let tr = simulate_ignore_deps(inst, s, &b).map_err(err("baseline"))?;
            tr.check_invariants(inst).map_err(err("baseline trace"))?;
            round_trip(&tr, inst)?;
            runs += 1;
        }
    }
    let out = simulate_b_equiset_edf(inst, &one, &one).map_err(err("B-EquiSet-Edf"))?;
    out.trace.check_invariants(inst).map_err(err("EDF trace"))?;
    out.internal.check_invariants(inst).map_err(err("EDF internal trace"))?;
    round_trip(&out.trace, inst)?;
    round_trip(&out.internal, inst)?;
    Ok(format!("{} simulator runs conserve", runs + 1))
}

/// Requests whose B-EquiSet completion is later at `faster` than at
/// `slower`. Exploratory: no such monotonicity is claimed.
pub fn speed_monotonicity_violations(
    inst: &BroadcastInstance,
    slower: &Rational,
    faster: &Rational,
) -> Result<Vec<usize>, String> {
    let a = simulate_b_equiset(inst, slower, &InnerPolicy::EquiWithin).map_err(err("slow run"))?;
    let b = simulate_b_equiset(inst, faster, &InnerPolicy::EquiWithin).map_err(err("fast run"))?;
    Ok((0..inst.requests.len()).filter(|&j| b.completions[j] > a.completions[j]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn property_names_round_trip() {
        for p in Property::ALL {
            assert_eq!(p.name().parse::<Property>().unwrap(), p);
        }
        assert!("lemma9".parse::<Property>().is_err());
    }

    #[test]
    fn fact1_formula_values() {
        let (l, u, _) = fact1_bounds(100);
        assert_eq!(l, Rational::from(990));
        assert_eq!(u, Rational::from(155));
    }

    #[test]
    fn a_few_trials_of_each_pass() {
        let params = CheckParams::default();
        for p in Property::ALL {
            for seed in 0..3 {
                let v = run_check(p, seed, &params);
                assert!(!v.is_fail(), "{p} seed {seed}: {v}");
            }
        }
    }
}
