use std::time::Instant;

use depcast_core::broadcast_sim::{simulate_b_equiset, InnerPolicy};
use depcast_core::oracle::{
    brute_force_bopt, default_horizon, exhaustive_bopt, greedy_upper_bound, verify_schedule, SearchLimits,
};
use depcast_core::workloads::{gen_figure1, gen_oracle_scale};
use depcast_core::{rat, Rational};

#[test]
fn figure1_optimum_is_eleven() {
    let inst = gen_figure1();
    let t = Instant::now();
    let r = brute_force_bopt(&inst, &rat(1, 2), 14, SearchLimits::default()).unwrap();
    eprintln!("figure1 oracle: {} nodes in {:?}", r.nodes, t.elapsed());
    assert_eq!(r.flow, rat(11, 1));
    let tr = r.schedule.to_trace(&inst).unwrap();
    assert_eq!(tr.flow, Some(rat(11, 1)));
    let h = default_horizon(&inst, &rat(1, 2)).unwrap();
    assert_eq!(brute_force_bopt(&inst, &rat(1, 2), h, SearchLimits::default()).unwrap().flow, rat(11, 1));
}

#[test]
fn greedy_sandwiches_figure1() {
    let inst = gen_figure1();
    let g = greedy_upper_bound(&inst).unwrap();
    assert!(g.flow >= rat(11, 1));
}

#[test]
fn equiset_trace_reverifies() {
    let inst = gen_figure1();
    let tr = simulate_b_equiset(&inst, &rat(3, 2), &InnerPolicy::EquiWithin).unwrap();
    let v = verify_schedule(&tr.schedule, &inst, &rat(3, 2)).unwrap();
    assert_eq!(v.broadcasts, tr.broadcasts);
    assert_eq!(v.flow, Some(rat(44, 3)));
}

#[test]
fn search_agrees_with_enumeration_on_micro_instances() {
    let mut checked = 0;
    for seed in 0..200u64 {
        let inst = gen_oracle_scale(3, 3, seed);
        let slot = rat(1, 2);
        for horizon in [4usize, 6] {
            let ex = exhaustive_bopt(&inst, &slot, horizon);
            let bb = brute_force_bopt(&inst, &slot, horizon, SearchLimits::default());
            match (ex, bb) {
                (Ok(e), Ok(b)) => {
                    assert_eq!(e.flow, b.flow, "seed {seed} horizon {horizon}");
                    checked += 1;
                }
                (Err(_), Err(_)) => {}
                (e, b) => {
                    panic!("seed {seed} horizon {horizon}: disagree {:?} vs {:?}", e.map(|r| r.flow), b.map(|r| r.flow))
                }
            }
        }
    }
    assert!(checked > 20, "only {checked} feasible micro cases");
}

#[test]
fn greedy_never_beats_search() {
    for seed in 0..60u64 {
        let inst = gen_oracle_scale(3, 4, seed);
        let slot = rat(1, 2);
        let h = default_horizon(&inst, &slot).unwrap();
        let b = brute_force_bopt(&inst, &slot, h, SearchLimits::default()).unwrap();
        let g = greedy_upper_bound(&inst).unwrap();
        assert!(g.flow >= b.flow, "seed {seed}");
        let _: Rational = g.flow;
    }
}
