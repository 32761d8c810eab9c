mod common;

use std::fs;

use common::fixtures::{fixture_dir, regen};
use lnsrl_core::bench::maps::{gen_map, MapKind};
use lnsrl_core::bench::suite::{make_tasks, run_suite, write_report, SuiteConfig};
use lnsrl_core::bench::{gen_agents, gen_scen};
use lnsrl_core::driver::{DriverConfig, Mode};
use lnsrl_core::grid::GridMap;
use lnsrl_core::io::parse_map;

/// Free cells reachable from `start`, by flood fill.
fn reachable(map: &GridMap, start: lnsrl_core::grid::Cell) -> std::collections::HashSet<lnsrl_core::grid::Cell> {
    let mut seen = std::collections::HashSet::from([start]);
    let mut stack = vec![start];
    while let Some(c) = stack.pop() {
        for n in map.neighbors(c) {
            if seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen
}

#[test]
fn fixed_layouts_match_frozen_fixtures() {
    let dir = fixture_dir("maps");
    for (kind, blocked) in [(MapKind::Maze, 286), (MapKind::Room, 122), (MapKind::Warehouse, 180)] {
        let map = gen_map(kind, 25, 0.0, 0).unwrap();
        let file = dir.join(format!("{kind}-25.map"));
        if regen() {
            fs::create_dir_all(&dir).unwrap();
            fs::write(&file, map.to_movingai()).unwrap();
        }
        let frozen = parse_map(&fs::read_to_string(&file).unwrap()).unwrap();
        assert_eq!(map, frozen, "{kind}");
        assert_eq!(frozen.blocked_count(), blocked);
        // Seeds only move random layouts.
        assert_eq!(gen_map(kind, 25, 0.0, 99).unwrap(), map);
    }
    let pct = |n: usize| 100.0 * n as f64 / 625.0;
    assert_eq!(pct(286), 45.76);
    assert_eq!(pct(122), 19.52);
    assert_eq!(pct(180), 28.8);
}

#[test]
fn scenarios_sample_one_region() {
    for seed in 0..20 {
        let map = gen_map(MapKind::Random, 12, 0.3, seed).unwrap();
        let inst = gen_agents(&map, 10, seed).unwrap();
        let region = reachable(&map, inst.agents[0].start);
        let mut starts = std::collections::HashSet::new();
        let mut goals = std::collections::HashSet::new();
        for a in &inst.agents {
            assert!(region.contains(&a.start) && region.contains(&a.goal));
            assert!(starts.insert(a.start) && goals.insert(a.goal));
        }
        let all_free = map.free_cells().len();
        assert!(region.len() * 2 >= all_free || region.len() >= 10);
    }
    let maze = gen_map(MapKind::Maze, 25, 0.0, 0).unwrap();
    assert_eq!(gen_scen(&maze, 0.2, 1).unwrap().num_agents(), (0.2f64 * 339.0).round() as usize);
}

#[test]
fn suite_is_deterministic_and_writes_reports() {
    let tasks = make_tasks(MapKind::Random, 10, 0.175, 0.3, 4, 11).unwrap();
    let cfg = SuiteConfig {
        modes: vec![Mode::Lns2, Mode::Lns2Rl],
        driver: DriverConfig { time_limit: None, max_iterations: Some(100), ..Default::default() },
        workers: 2,
        record_curves: true,
    };
    let strip = |mut r: lnsrl_core::bench::SuiteReport| {
        for x in &mut r.results {
            x.runtime_secs = 0.0;
        }
        for s in &mut r.summaries {
            s.mean_runtime_secs = 0.0;
        }
        r
    };
    let a = strip(run_suite(&tasks, &cfg).unwrap());
    let b = strip(run_suite(&tasks, &cfg).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.results.len(), 8);
    for r in &a.results {
        if r.solved {
            assert_eq!(r.cp, Some(0));
        }
    }
    for s in &a.summaries {
        let solved = a.results.iter().filter(|r| r.mode == s.mode && r.solved).count();
        assert_eq!(s.solved, solved);
        assert_eq!(s.success_rate, 100.0 * solved as f64 / 4.0);
    }
    let dir = tempfile::tempdir().unwrap();
    write_report(&a, dir.path()).unwrap();
    for f in ["results.csv", "summary.csv", "report.json", "curves.csv", "cp_curves.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("mode,tasks,solved,success_rate"));
    assert_eq!(summary.lines().count(), 3);
}
