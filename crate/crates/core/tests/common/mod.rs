//! Independent reference implementations shared by integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use lnsrl_core::grid::{Cell, GridMap, Path};
use rand::seq::SliceRandom;
use rand::Rng;

/// Position of a goal-padded raw path at `t`.
pub fn pos(p: &[Cell], t: usize) -> Cell {
    p[t.min(p.len() - 1)]
}

fn adjacent_or_same(a: Cell, b: Cell) -> bool {
    (a.row as i64 - b.row as i64).abs() + (a.col as i64 - b.col as i64).abs() <= 1
}

fn step_targets(map: &GridMap, c: Cell) -> Vec<Cell> {
    let mut out = vec![c];
    let (r, col) = (c.row as i64, c.col as i64);
    for (dr, dc) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
        let (nr, nc) = (r + dr, col + dc);
        if nr >= 0 && nc >= 0 && nr < map.height() as i64 && nc < map.width() as i64 {
            let n = Cell::new(nr as u32, nc as u32);
            if !map.is_blocked(n) {
                out.push(n);
            }
        }
    }
    out
}

/// Shortest zero-soft-collision path from `start` at `start_time` to `goal`,
/// arriving no later than `horizon`, by plain breadth-first search over
/// (cell, t). After arrival the agent stays on its goal forever, so the goal
/// must never be soft-occupied afterwards.
pub fn zero_collision_path(
    map: &GridMap,
    soft: &[Vec<Cell>],
    start: Cell,
    goal: Cell,
    start_time: usize,
    horizon: usize,
) -> Option<Vec<Cell>> {
    let last = soft.iter().map(|p| p.len()).max().unwrap_or(0);
    let occupied = |c: Cell, t: usize| soft.iter().any(|p| pos(p, t) == c);
    let swapped = |from: Cell, to: Cell, t: usize| {
        from != to && soft.iter().any(|p| pos(p, t) == to && pos(p, t + 1) == from)
    };
    let goal_clear_after = |t: usize| (t + 1..=last.max(t + 1)).all(|s| !occupied(goal, s));

    let w = map.width() as usize;
    let idx = |c: Cell| c.row as usize * w + c.col as usize;
    let span = horizon + 1;
    let mut parent: Vec<Option<Option<Cell>>> = vec![None; map.num_cells() * span];
    let key = |c: Cell, t: usize| idx(c) * span + t;
    if start_time > horizon {
        return None;
    }
    parent[key(start, start_time)] = Some(None);
    let mut queue = VecDeque::from([(start, start_time)]);
    while let Some((c, t)) = queue.pop_front() {
        if c == goal && goal_clear_after(t) {
            let mut out = vec![c];
            let (mut cur, mut tt) = (c, t);
            while let Some(Some(prev)) = parent[key(cur, tt)] {
                out.push(prev);
                cur = prev;
                tt -= 1;
            }
            out.reverse();
            return Some(out);
        }
        if t == horizon {
            continue;
        }
        for n in step_targets(map, c) {
            if occupied(n, t + 1) || swapped(c, n, t) || parent[key(n, t + 1)].is_some() {
                continue;
            }
            parent[key(n, t + 1)] = Some(Some(c));
            queue.push_back((n, t + 1));
        }
    }
    None
}

/// Soft collisions of `path` (placed at `start_time`) counted directly from
/// the raw soft paths: vertex multiplicity plus opposing traversals, for
/// every timestep after `start_time` until all paths have parked.
pub fn soft_collisions(soft: &[Vec<Cell>], path: &[Cell], start_time: usize) -> usize {
    let abs = |t: usize| pos(path, t - start_time);
    let end = soft.iter().map(|p| p.len()).max().unwrap_or(0).max(start_time + path.len()) + 1;
    let mut total = 0;
    for t in start_time + 1..end {
        let (prev, here) = (abs(t - 1), abs(t));
        for p in soft {
            if pos(p, t) == here {
                total += 1;
            }
            if prev != here && pos(p, t - 1) == here && pos(p, t) == prev {
                total += 1;
            }
        }
    }
    total
}

pub fn is_valid_path(map: &GridMap, p: &[Cell]) -> bool {
    !p.is_empty()
        && p.iter().all(|&c| map.in_bounds(c) && !map.is_blocked(c))
        && p.windows(2).all(|w| adjacent_or_same(w[0], w[1]))
}

/// Random map with roughly `rate` of its cells blocked.
pub fn random_map<R: Rng>(rng: &mut R, width: u32, height: u32, rate: f64) -> GridMap {
    let mut map = GridMap::new(width, height);
    for r in 0..height {
        for c in 0..width {
            if rng.gen_bool(rate) {
                map.set_blocked(Cell::new(r, c), true);
            }
        }
    }
    map
}

/// Random walk of `len` vertices (waits included) over free cells.
pub fn random_walk<R: Rng>(rng: &mut R, map: &GridMap, from: Cell, len: usize) -> Vec<Cell> {
    let mut out = vec![from];
    while out.len() < len {
        let here = *out.last().unwrap();
        out.push(*step_targets(map, here).choose(rng).unwrap());
    }
    out
}

/// One small single-agent planning problem.
#[derive(Clone, Debug)]
pub struct SmallCase {
    pub map: GridMap,
    pub soft: Vec<Vec<Cell>>,
    pub start: Cell,
    pub goal: Cell,
    pub start_time: usize,
    pub horizon: usize,
}

impl SmallCase {
    pub fn soft_paths(&self) -> Vec<Path> {
        self.soft.iter().map(|p| Path::new(p.clone())).collect()
    }
}

/// Maps up to 6×6, up to 3 soft paths of up to 6 vertices, horizon up to 14,
/// start and goal hard-connected.
pub fn small_case<R: Rng>(rng: &mut R) -> SmallCase {
    loop {
        let (w, h) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let rate = rng.gen_range(0.0..0.3);
        let map = random_map(rng, w, h, rate);
        let free = map.free_cells();
        if free.len() < 2 {
            continue;
        }
        let start = *free.choose(rng).unwrap();
        let goal = *free.choose(rng).unwrap();
        let d = map.bfs_distances(goal)[map.index(start)];
        if d == u32::MAX {
            continue;
        }
        let soft = (0..rng.gen_range(0..=3))
            .map(|_| {
                let from = *free.choose(rng).unwrap();
                let len = rng.gen_range(1..=6);
                random_walk(rng, &map, from, len)
            })
            .collect();
        let start_time = if rng.gen_bool(0.75) { 0 } else { rng.gen_range(1..=3) };
        let horizon = rng.gen_range(start_time + d as usize..=14.max(start_time + d as usize));
        return SmallCase { map, soft, start, goal, start_time, horizon };
    }
}

pub mod fixtures;

/// Occupancy intervals `(robot, cell, from, to)` rebuilt from task timings
/// alone: a robot holds its current cell until the move leaving it is done
/// and holds the move's target from the moment the move starts.
pub fn occupancy_from_timings(
    initial: &[Cell],
    chains: &[Vec<(Cell, Cell)>],
    start: &[Vec<f64>],
    done: &[Vec<f64>],
) -> Vec<(usize, Cell, f64, f64)> {
    let mut out = Vec::new();
    for (robot, chain) in chains.iter().enumerate() {
        let mut cell = initial[robot];
        let mut since = 0.0;
        for (k, &(from, to)) in chain.iter().enumerate() {
            assert_eq!(from, cell, "robot {robot} task {k} starts away from the robot");
            if from != to {
                out.push((robot, cell, since, done[robot][k]));
                cell = to;
                since = start[robot][k];
            }
        }
        out.push((robot, cell, since, f64::INFINITY));
    }
    out
}

/// Every pair of intervals on one cell from different robots, compared
/// directly; half-open intervals that merely touch do not overlap.
pub fn pairwise_overlaps(iv: &[(usize, Cell, f64, f64)]) -> usize {
    let mut n = 0;
    for i in 0..iv.len() {
        for j in i + 1..iv.len() {
            let (a, b) = (iv[i], iv[j]);
            if a.0 != b.0 && a.1 == b.1 && a.2 < b.3 && b.2 < a.3 {
                n += 1;
            }
        }
    }
    n
}

/// Compare SIPPS with the brute-force search on one case. `Ok(true)` when a
/// zero-collision path exists and SIPPS found one of the same length.
pub fn check_sipps_case(case: &SmallCase) -> Result<bool, String> {
    use lnsrl_core::error::SippsError;
    use lnsrl_core::sipps::{build_soft_occupancy, sipps_plan};

    let soft = case.soft_paths();
    let occ = build_soft_occupancy(&case.map, soft.iter(), 0);
    let got = sipps_plan(&case.map, case.start, case.goal, case.start_time, &occ, Some(case.horizon));
    let oracle = zero_collision_path(&case.map, &case.soft, case.start, case.goal, case.start_time, case.horizon);
    match (&got, &oracle) {
        (Ok(p), _) => {
            let v = p.vertices();
            if !is_valid_path(&case.map, v) || v[0] != case.start || *v.last().unwrap() != case.goal {
                return Err(format!("invalid path {v:?} for {case:?}"));
            }
            let cols = soft_collisions(&case.soft, v, case.start_time);
            if cols != occ.path_collisions(p, case.start_time) {
                return Err(format!("collision count mismatch on {case:?}"));
            }
            match oracle {
                Some(o) if cols != 0 || v.len() != o.len() => {
                    Err(format!("{case:?}\nsipps {v:?} ({cols} collisions)\noracle {o:?}"))
                }
                Some(_) => Ok(true),
                None if cols == 0 => Err(format!("oracle missed a zero-collision path {v:?} on {case:?}")),
                None => Ok(false),
            }
        }
        (Err(SippsError::Horizon { .. }), None) => Ok(false),
        (Err(e), o) => Err(format!("{e} with oracle {o:?} on {case:?}")),
    }
}
pub mod reward_oracle;
