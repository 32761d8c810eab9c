//! Reward terms recomputed directly from raw trajectories.

use std::collections::VecDeque;
use std::sync::Arc;

use super::fixtures::fixture_task;
use super::pos;
use lnsrl_core::env::{EnvConfig, PmdoEnv, PmdoState, PmdoTask, RewardTerms};
use lnsrl_core::grid::{Action, Cell, GridMap, Path, PathMap};
use lnsrl_core::sipps::DistanceCache;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-9;

fn bfs(map: &GridMap, goal: Cell) -> Vec<Option<u32>> {
    let w = map.width() as usize;
    let idx = |c: Cell| c.row as usize * w + c.col as usize;
    let mut d = vec![None; map.num_cells()];
    d[idx(goal)] = Some(0);
    let mut q = VecDeque::from([goal]);
    while let Some(c) = q.pop_front() {
        let here = d[idx(c)].unwrap();
        for n in map.neighbors(c) {
            if d[idx(n)].is_none() {
                d[idx(n)] = Some(here + 1);
                q.push_back(n);
            }
        }
    }
    d
}

fn euclid(a: Cell, b: Cell) -> f64 {
    let (dr, dc) = (a.row as f64 - b.row as f64, a.col as f64 - b.col as f64);
    (dr * dr + dc * dc).sqrt()
}

/// Per-agent terms for one joint step from `prev`, written out from the
/// reward definitions with the hardest-level constants.
pub fn oracle(task: &PmdoTask, prev: &PmdoState, actions: &[Action]) -> Vec<RewardTerms> {
    let soft: Vec<Vec<Cell>> = task.soft_paths.values().map(|p| p.vertices().to_vec()).collect();
    let n = prev.positions.len();
    let t = prev.t + 1;
    let next: Vec<Cell> = (0..n).map(|i| actions[i].apply(prev.positions[i]).unwrap()).collect();
    let traces: Vec<Vec<Cell>> = (0..n).map(|i| [prev.traces[i].clone(), vec![next[i]]].concat()).collect();
    let lo = t.saturating_sub(2);
    let m = task.num_agents as f64;
    let max_ref = task.sipps_refs.iter().map(|p| p.len()).max().unwrap();
    (0..n)
        .map(|i| {
            let (from, to) = (prev.positions[i], next[i]);
            let moved = from != to;
            let mut events = soft.iter().filter(|p| pos(p, t) == to).count();
            if moved {
                events += soft.iter().filter(|p| pos(p, t - 1) == to && pos(p, t) == from).count();
            }
            for j in (0..n).filter(|&j| j != i) {
                events += usize::from(next[j] == to);
                events += usize::from(moved && prev.positions[j] == to && next[j] == from);
            }
            let mut u_v = 0;
            let mut u_e = 0;
            for s in lo..=t + 15 {
                u_v += soft.iter().filter(|p| pos(p, s) == to).count();
                if moved {
                    u_e += soft.iter().filter(|p| pos(p, s) == from && pos(p, s + 1) == to).count();
                }
            }
            for j in (0..n).filter(|&j| j != i) {
                u_v += (lo..=t).filter(|&s| traces[j][s] == to).count();
                if moved {
                    u_e += (lo..t).filter(|&s| traces[j][s] == from && traces[j][s + 1] == to).count();
                }
            }
            let r = task.sipps_refs[i].vertices();
            let off = (t.saturating_sub(15)..t + 15).map(|k| euclid(to, pos(r, k))).fold(f64::INFINITY, f64::min);
            let d = bfs(&task.map, task.goals[i]);
            let w = task.map.width() as usize;
            let dist = |c: Cell| d[c.row as usize * w + c.col as usize].unwrap() as f64;
            RewardTerms {
                action: if actions[i] == Action::Stay && from == task.goals[i] { 0.0 } else { -0.6 },
                exceed: if t > max_ref { -0.2 } else { 0.0 },
                ret: if moved && t >= 2 && traces[i][t - 2] == to { -0.4 } else { 0.0 },
                collision: -1.5 * events as f64,
                congestion: -10.0 * (0.225 * u_v as f64 / m + 0.075 * u_e as f64 / m),
                off_route: -0.04 * off,
                shaping: 0.2 * (dist(from) - dist(to)),
            }
        })
        .collect()
}

/// First term that differs by more than [`TOL`].
pub fn compare_terms(got: &RewardTerms, want: &RewardTerms) -> Result<(), String> {
    let pairs = [
        ("action", got.action, want.action),
        ("exceed", got.exceed, want.exceed),
        ("return", got.ret, want.ret),
        ("collision", got.collision, want.collision),
        ("congestion", got.congestion, want.congestion),
        ("off_route", got.off_route, want.off_route),
        ("shaping", got.shaping, want.shaping),
    ];
    for (name, g, w) in pairs {
        if (g - w).abs() > TOL {
            return Err(format!("{name} {g} vs {w}"));
        }
    }
    Ok(())
}

/// Fixture `k`: random valid play from a fixture task, then one checked step.
pub fn reward_fixture(k: u64) -> (Arc<PmdoTask>, PmdoState, Vec<Action>) {
    let (_, task) = fixture_task(k % 10);
    let mut rng = ChaCha8Rng::seed_from_u64(k);
    let mut env = PmdoEnv::new(task.clone());
    let random_joint = |env: &PmdoEnv, rng: &mut ChaCha8Rng| -> Vec<Action> {
        (0..task.num_controlled()).map(|i| *env.valid_actions(i).choose(rng).unwrap()).collect()
    };
    for _ in 0..(k % 7) * 3 {
        if env.is_terminal() {
            break;
        }
        let a = random_joint(&env, &mut rng);
        env.step(&a).unwrap();
    }
    let a = random_joint(&env, &mut rng);
    (task, env.state().clone(), a)
}

/// Two controlled agents among 40; agent 0 steps onto a cell that three soft
/// paths visit soon and agent 1 just left, crossing an edge two soft paths use.
pub fn congestion_example() -> (Arc<PmdoTask>, Vec<Action>) {
    let c = Cell::new;
    let map = GridMap::new(3, 3);
    let refs = vec![Path::new(vec![c(0, 0), c(0, 1)]), Path::new(vec![c(0, 1), c(0, 2)])];
    let soft = PathMap::from([
        (2, Path::new(vec![c(1, 0), c(0, 0), c(0, 1), c(1, 1)])),
        (3, Path::new(vec![c(1, 0), c(1, 0), c(0, 0), c(0, 1), c(0, 2)])),
        (4, Path::new(vec![c(1, 1), c(1, 1), c(1, 1), c(1, 1), c(1, 1), c(0, 1), c(0, 2)])),
    ]);
    let cache = DistanceCache::new(&map);
    let goals = vec![c(0, 1), c(0, 2)];
    let task = PmdoTask::from_parts(&map, vec![0, 1], goals, soft, refs, 40, EnvConfig::default(), &cache).unwrap();
    (Arc::new(task), vec![Action::Right, Action::Right])
}

