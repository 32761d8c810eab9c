mod common;

use common::{occupancy_from_timings, pairwise_overlaps};
use lnsrl_core::adg::{build_adg, simulate, simulate_with, topological_order, Adg, DelayModel, ExecTrace, TaskStatus};
use lnsrl_core::bench::maps::{gen_map, MapKind};
use lnsrl_core::bench::scen::gen_agents;
use lnsrl_core::driver::{solve, DriverConfig};
use lnsrl_core::grid::PathSet;
use proptest::prelude::*;

fn solved_plan(agents: usize, seed: u64) -> PathSet {
    for s in seed.. {
        let map = gen_map(MapKind::Random, 10, 0.175, s).unwrap();
        let inst = gen_agents(&map, agents, s).unwrap();
        let cfg = DriverConfig { time_limit: None, max_iterations: Some(2000), seed: s, ..Default::default() };
        let r = solve(&inst, &cfg).unwrap();
        if r.solved && build_adg(&r.paths).is_ok() {
            return r.paths;
        }
    }
    unreachable!()
}

fn independent_overlaps(adg: &Adg, tr: &ExecTrace) -> usize {
    let chains: Vec<Vec<_>> = adg.chains.iter().map(|c| c.iter().map(|&i| (adg.tasks[i].start_pos, adg.tasks[i].end_pos)).collect()).collect();
    let start: Vec<Vec<f64>> = adg.chains.iter().map(|c| c.iter().map(|&i| tr.start[i]).collect()).collect();
    let done: Vec<Vec<f64>> = adg.chains.iter().map(|c| c.iter().map(|&i| tr.done[i]).collect()).collect();
    pairwise_overlaps(&occupancy_from_timings(&adg.initial, &chains, &start, &done))
}

#[test]
fn randomized_delays_stay_safe() {
    let plan = solved_plan(20, 1);
    let adg = build_adg(&plan).unwrap();
    assert_eq!(adg, build_adg(&plan).unwrap());
    let preds = adg.predecessors();
    for chain in &adg.chains {
        for &id in chain.iter().skip(1) {
            assert!(!preds[id].is_empty());
        }
    }
    for seed in 0..100 {
        let tr = simulate(&adg, &DelayModel::default(), seed);
        assert!(tr.all_done());
        assert_eq!(independent_overlaps(&adg, &tr), 0, "seed {seed}");
        for &(u, v) in adg.intra_edges.iter().chain(&adg.inter_edges) {
            assert!(tr.done[u] <= tr.start[v]);
        }
    }
}

#[test]
fn long_stall_is_absorbed() {
    let plan = solved_plan(12, 40);
    let adg = build_adg(&plan).unwrap();
    for robot in 0..adg.chains.len() {
        let tr = simulate_with(&adg, |t| if t.robot == robot && t.time == 0 { 10.0 } else { 0.0 });
        assert!(tr.tasks.iter().all(|t| t.status == TaskStatus::Done));
        assert_eq!(independent_overlaps(&adg, &tr), 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn any_delay_assignment_is_safe(seed in 0u64..10_000, delays in proptest::collection::vec(0.0f64..5.0, 64)) {
        let plan = solved_plan(8, seed);
        let adg = build_adg(&plan).unwrap();
        prop_assert_eq!(topological_order(&adg).unwrap().len(), adg.num_tasks());
        let tr = simulate_with(&adg, |t| delays[(t.id * 7 + t.robot) % delays.len()]);
        prop_assert!(tr.all_done());
        prop_assert_eq!(independent_overlaps(&adg, &tr), 0);
    }
}
