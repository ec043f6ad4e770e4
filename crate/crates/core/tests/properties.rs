use depcast_core::broadcast_sim::{
    simulate_b_equiset, simulate_b_equiset_edf, simulate_ignore_deps, Baseline, InnerPolicy,
};
use depcast_core::checks::{self, fair_share, speed_monotonicity_violations};
use depcast_core::oracle::verify_schedule;
use depcast_core::workloads::{gen_random_batches, gen_small_random};
use depcast_core::{rat, BroadcastInstance, BroadcastTrace, Item, Rational, Request, TraceFile};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = BroadcastInstance> {
    (1usize..=4).prop_flat_map(|n| {
        let lengths = prop::collection::vec(1i64..=8, n);
        let requests = prop::collection::vec((0i64..=16, 1u32..(1 << n)), 0..=6);
        (lengths, requests).prop_map(move |(lengths, requests)| BroadcastInstance {
            items: lengths
                .iter()
                .enumerate()
                .map(|(i, &l)| Item { id: format!("I{i}").as_str().into(), length: rat(l, 4) })
                .collect(),
            requests: requests
                .iter()
                .enumerate()
                .map(|(j, &(a, mask))| Request {
                    id: format!("S{j}").as_str().into(),
                    arrival: rat(a, 4),
                    items: (0..n).filter(|i| mask & (1 << i) != 0).map(|i| format!("I{i}").as_str().into()).collect(),
                })
                .collect(),
        })
    })
}

fn speed() -> impl Strategy<Value = Rational> {
    prop_oneof![Just(rat(1, 1)), Just(rat(3, 2)), Just(rat(10, 1)), (1i64..=12, 1i64..=5).prop_map(|(p, q)| rat(p, q))]
}

fn same_derived(a: &BroadcastTrace, b: &BroadcastTrace) -> bool {
    a.broadcasts == b.broadcasts && a.completions == b.completions && a.flow == b.flow
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 150, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn equiset_conserves_and_shares_fairly(inst in instance(), s in speed()) {
        for policy in [InnerPolicy::EquiWithin, InnerPolicy::MinIdx] {
            let tr = simulate_b_equiset(&inst, &s, &policy).unwrap();
            prop_assert!(tr.check_invariants(&inst).is_ok());
            prop_assert!(fair_share(&tr, &inst).is_ok());
            prop_assert!(tr.completions.iter().all(Option::is_some));
            let v = verify_schedule(&tr.schedule, &inst, &s).unwrap();
            prop_assert!(same_derived(&v, &tr));
        }
    }

    #[test]
    fn every_request_waits_at_least_its_work_over_speed(inst in instance(), s in speed()) {
        let tr = simulate_b_equiset(&inst, &s, &InnerPolicy::EquiWithin).unwrap();
        for (req, c) in inst.requests.iter().zip(&tr.completions) {
            let work: Rational = req.items.iter().map(|id| inst.items[inst.item_index(id).unwrap()].length.clone()).sum();
            let max_len = req.items.iter().map(|id| inst.items[inst.item_index(id).unwrap()].length.clone()).max().unwrap();
            let c = c.clone().unwrap();
            prop_assert!(c.clone() - &req.arrival >= &max_len / &s);
            prop_assert!(c - &req.arrival >= work / (&s * Rational::from(inst.requests.len() as i64)) );
        }
    }

    #[test]
    fn baselines_conserve(inst in instance(), s in speed()) {
        for b in [Baseline::EquiPerItem, Baseline::RoundRobin { quantum: rat(1, 2) }, Baseline::default()] {
            let tr = simulate_ignore_deps(&inst, &s, &b).unwrap();
            prop_assert!(tr.check_invariants(&inst).is_ok());
            prop_assert!(tr.completions.iter().all(Option::is_some));
            let v = verify_schedule(&tr.schedule, &inst, &s).unwrap();
            prop_assert!(same_derived(&v, &tr));
        }
    }

    #[test]
    fn edf_is_sequential_and_on_time(inst in instance(), e in 1i64..=4, d in 1i64..=4) {
        let out = simulate_b_equiset_edf(&inst, &rat(e, 2), &rat(d, 2)).unwrap();
        prop_assert!(out.trace.check_invariants(&inst).is_ok());
        prop_assert!(out.deadline_misses.is_empty());
        for seg in &out.trace.schedule.segments {
            prop_assert!(seg.item_rates.iter().filter(|r| r.is_positive()).count() <= 1);
        }
        prop_assert!(out.preemptions <= out.trace.n_broadcasts());
        prop_assert!(out.releases.iter().all(|r| r.met_deadline()));
    }

    #[test]
    fn trace_files_round_trip(inst in instance(), s in speed()) {
        let tr = simulate_b_equiset(&inst, &s, &InnerPolicy::EquiWithin).unwrap();
        let text = tr.to_json();
        let file: TraceFile = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(BroadcastTrace::from_file(&file, &inst).unwrap(), tr);
    }

    #[test]
    fn instance_files_round_trip(inst in instance()) {
        prop_assert_eq!(BroadcastInstance::from_json(&inst.to_json()).unwrap(), inst);
    }

    #[test]
    fn batch_chains_hold(seed in any::<u64>()) {
        let batches = gen_random_batches(4, 3, seed);
        prop_assert!(checks::lemma1(&batches).is_ok());
        prop_assert!(checks::lemma2(&batches).is_ok());
    }
}

#[test]
fn completion_monotonicity_in_speed_is_reported() {
    let mut hits = 0;
    for seed in 0..300 {
        let inst = gen_small_random(seed);
        let v = speed_monotonicity_violations(&inst, &rat(1, 1), &rat(3, 2)).unwrap();
        hits += usize::from(!v.is_empty());
    }
    println!("instances where some completion is later at speed 3/2 than at speed 1: {hits} of 300");
}
