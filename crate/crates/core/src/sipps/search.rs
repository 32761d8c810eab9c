use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use super::SoftOccupancy;
use crate::error::SippsError;
use crate::grid::{Cell, GridMap, Path, UNREACHABLE};

const INF: usize = usize::MAX;

/// Maximal run of constant soft presence on one cell, `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Interval {
    lo: usize,
    hi: usize,
    occupied: bool,
}

#[derive(Clone, Copy, Debug)]
struct Node {
    cell: usize,
    iv: usize,
    g: usize,
    c: u32,
    parent: Option<usize>,
    at_goal: bool,
    alive: bool,
}

/// Open-list key: fewest soft collisions, then smallest f, then largest g,
/// then lowest cell index, then insertion order.
type OpenKey = Reverse<(u32, usize, usize, usize, usize, usize)>;

struct Search<'a> {
    map: &'a GridMap,
    soft: &'a SoftOccupancy,
    dist: &'a [u32],
    start_idx: usize,
    start_time: usize,
    horizon: usize,
    intervals: HashMap<usize, Vec<Interval>>,
    nodes: Vec<Node>,
    labels: HashMap<(usize, usize), Vec<usize>>,
    open: BinaryHeap<OpenKey>,
    seq: usize,
}

impl<'a> Search<'a> {
    fn intervals_of(&mut self, idx: usize) -> &[Interval] {
        let (soft, start_time, start_idx) = (self.soft, self.start_time, self.start_idx);
        self.intervals.entry(idx).or_insert_with(|| {
            let present = |t: usize| -> bool {
                if idx == start_idx && t == start_time {
                    // The start vertex at the start time belongs to the caller.
                    return false;
                }
                soft.present_idx(idx, t)
            };
            let mut out: Vec<Interval> = Vec::new();
            let explicit_end = soft.horizon().max(start_time + 1);
            for t in start_time..explicit_end {
                let occ = present(t);
                match out.last_mut() {
                    Some(last) if last.occupied == occ => last.hi = t + 1,
                    _ => out.push(Interval { lo: t, hi: t + 1, occupied: occ }),
                }
            }
            let tail = soft.parked_idx(idx) > 0;
            match out.last_mut() {
                Some(last) if last.occupied == tail => last.hi = INF,
                _ => out.push(Interval { lo: explicit_end, hi: INF, occupied: tail }),
            }
            out
        })
    }

    fn push(&mut self, cell: usize, iv: usize, g: usize, c: u32, parent: usize, at_goal: bool) {
        let h = self.dist[cell] as usize;
        if g > self.horizon || g + h > self.horizon {
            return;
        }
        let id = self.nodes.len();
        if !at_goal {
            let labels = self.labels.entry((cell, iv)).or_default();
            for &other in labels.iter() {
                let o = &self.nodes[other];
                if o.alive && o.g <= g && o.c <= c {
                    return;
                }
            }
            labels.retain(|&other| {
                let o = &mut self.nodes[other];
                if g <= o.g && c <= o.c {
                    o.alive = false;
                    false
                } else {
                    o.alive
                }
            });
            labels.push(id);
        }
        self.nodes.push(Node { cell, iv, g, c, parent: Some(parent), at_goal, alive: true });
        self.seq += 1;
        self.open.push(Reverse((c, g + h, INF - g, cell, self.seq, id)));
    }

    fn reconstruct(&self, mut id: usize) -> Path {
        let mut chain = Vec::new();
        loop {
            let n = &self.nodes[id];
            if !n.at_goal {
                chain.push((n.cell, n.g));
            }
            match n.parent {
                Some(p) => id = p,
                None => break,
            }
        }
        chain.reverse();
        let mut cells = vec![self.map.cell(chain[0].0)];
        for w in chain.windows(2) {
            let ((pc, pg), (cc, cg)) = (w[0], w[1]);
            for _ in pg + 1..cg {
                cells.push(self.map.cell(pc));
            }
            cells.push(self.map.cell(cc));
        }
        Path::new(cells)
    }
}

/// Default search horizon (absolute timestep bound on goal arrival).
pub fn default_horizon(map: &GridMap, soft: &SoftOccupancy, start_time: usize) -> usize {
    start_time + 4 * (map.width() as usize + map.height() as usize) + soft.horizon()
}

/// Plan with a precomputed hard-only distance table to `goal`
/// (see [`GridMap::bfs_distances`]).
///
/// The returned path's vertex 0 is `start` at absolute timestep
/// `start_time`; it ends on first arrival at `goal`. `horizon` bounds the
/// absolute arrival timestep.
pub fn sipps_plan_with(
    map: &GridMap,
    dist: &[u32],
    start: Cell,
    goal: Cell,
    start_time: usize,
    soft: &SoftOccupancy,
    horizon: usize,
) -> Result<Path, SippsError> {
    if !map.is_free(start) || !map.is_free(goal) || dist[map.index(start)] == UNREACHABLE {
        return Err(SippsError::Unreachable { start, goal });
    }
    let start_idx = map.index(start);
    let goal_idx = map.index(goal);
    let mut s = Search {
        map,
        soft,
        dist,
        start_idx,
        start_time,
        horizon,
        intervals: HashMap::new(),
        nodes: Vec::new(),
        labels: HashMap::new(),
        open: BinaryHeap::new(),
        seq: 0,
    };
    if start_time + dist[start_idx] as usize > horizon {
        return Err(SippsError::Horizon { start, goal, horizon });
    }
    s.intervals_of(start_idx);
    s.nodes.push(Node { cell: start_idx, iv: 0, g: start_time, c: 0, parent: None, at_goal: false, alive: true });
    s.labels.insert((start_idx, 0), vec![0]);
    s.open.push(Reverse((0, start_time + dist[start_idx] as usize, INF - start_time, start_idx, 0, 0)));

    while let Some(Reverse((_, _, _, _, _, id))) = s.open.pop() {
        let n = s.nodes[id];
        if !n.alive {
            continue;
        }
        if n.at_goal {
            return Ok(s.reconstruct(id));
        }
        let here = s.intervals_of(n.cell)[n.iv];

        if n.cell == goal_idx {
            if here.hi == INF {
                return Ok(s.reconstruct(id));
            }
            let future = s.intervals_of(goal_idx)[n.iv + 1..].iter().filter(|iv| iv.occupied).count() as u32;
            s.push(n.cell, n.iv, n.g, n.c + future, id, true);
        }

        if here.hi != INF {
            let next = s.intervals_of(n.cell)[n.iv + 1];
            s.push(n.cell, n.iv + 1, next.lo, n.c + next.occupied as u32, id, false);
        }

        let from = map.cell(n.cell);
        let neighbours: Vec<usize> = map.neighbors(from).map(|c| map.index(c)).collect();
        for to in neighbours {
            if dist[to] == UNREACHABLE {
                continue;
            }
            let ivs: Vec<Interval> = s.intervals_of(to).to_vec();
            for (j, iv) in ivs.iter().enumerate() {
                // Arrival t must satisfy: t >= g+1, t >= iv.lo, t <= here.hi
                // (we may wait at `from` until t-1), t < iv.hi.
                let earliest = (n.g + 1).max(iv.lo);
                let latest = here.hi.min(iv.hi.saturating_sub(1)).min(horizon);
                if iv.lo > here.hi {
                    break;
                }
                if earliest > latest {
                    continue;
                }
                let base = n.c + iv.occupied as u32;
                let clash = |t: usize| soft.edge_idx(to, n.cell, t - 1) > 0;
                if !clash(earliest) {
                    s.push(to, j, earliest, base, id, false);
                    continue;
                }
                s.push(to, j, earliest, base + 1, id, false);
                // Edge events stop at the soft horizon, so this scan is short.
                let mut t = earliest + 1;
                while t <= latest {
                    if !clash(t) {
                        s.push(to, j, t, base, id, false);
                        break;
                    }
                    t += 1;
                }
            }
        }
    }
    Err(SippsError::Horizon { start, goal, horizon })
}

/// Single-agent plan that avoids hard obstacles and, lexicographically,
/// minimises soft collisions then arrival time. Uses the default horizon
/// when `horizon` is `None`.
pub fn sipps_plan(
    map: &GridMap,
    start: Cell,
    goal: Cell,
    start_time: usize,
    soft: &SoftOccupancy,
    horizon: Option<usize>,
) -> Result<Path, SippsError> {
    let dist = map.bfs_distances(goal);
    let horizon = horizon.unwrap_or_else(|| default_horizon(map, soft, start_time));
    sipps_plan_with(map, &dist, start, goal, start_time, soft, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sipps::build_soft_occupancy;

    fn c(r: u32, col: u32) -> Cell {
        Cell::new(r, col)
    }

    #[test]
    fn empty_grid_is_manhattan() {
        let map = GridMap::new(3, 3);
        let occ = build_soft_occupancy(&map, [], 0);
        let p = sipps_plan(&map, c(0, 0), c(2, 2), 0, &occ, None).unwrap();
        assert_eq!(p.len(), 5);
        assert!(p.validate(&map).is_ok());
        assert_eq!(occ.path_collisions(&p, 0), 0);
    }

    #[test]
    fn detours_around_parked_soft_obstacle() {
        let map = GridMap::new(3, 3);
        let parked = Path::single(c(1, 1));
        let occ = build_soft_occupancy(&map, [&parked], 1);
        let p = sipps_plan(&map, c(0, 0), c(2, 2), 0, &occ, Some(12)).unwrap();
        assert_eq!(p.len(), 5);
        assert!(!p.vertices().contains(&c(1, 1)));
        assert_eq!(occ.path_collisions(&p, 0), 0);
    }

    #[test]
    fn head_on_corridor_must_collide() {
        let map = GridMap::new(3, 1);
        let soft = Path::new(vec![c(0, 2), c(0, 1), c(0, 0)]);
        let occ = build_soft_occupancy(&map, [&soft], 3);
        let p = sipps_plan(&map, c(0, 0), c(0, 2), 0, &occ, Some(10)).unwrap();
        assert_eq!(p.first(), Some(c(0, 0)));
        assert_eq!(p.last(), Some(c(0, 2)));
        assert!(occ.path_collisions(&p, 0) >= 1);
    }

    #[test]
    fn waits_for_soft_obstacle_to_pass() {
        // Soft obstacle crosses (0,1) at t=1 on its way down a side branch.
        //   . . .
        //   @ . @
        let map = GridMap::with_blocked(3, 2, [c(1, 0), c(1, 2)]);
        let soft = Path::new(vec![c(0, 2), c(0, 1), c(1, 1)]);
        let occ = build_soft_occupancy(&map, [&soft], 3);
        let p = sipps_plan(&map, c(0, 0), c(0, 2), 0, &occ, Some(10)).unwrap();
        assert_eq!(occ.path_collisions(&p, 0), 0);
        assert_eq!(p.len(), 4);
    }

    #[test]
    fn start_time_offsets_occupancy() {
        let map = GridMap::new(2, 1);
        // Soft sits on (0,1) until t=5 then leaves the map area it shares.
        let soft = Path::new(vec![c(0, 1); 6].into_iter().chain([c(0, 0)]).collect::<Vec<_>>());
        let occ = build_soft_occupancy(&map, [&soft], 7);
        // From t=3 at (0,0): goal (0,1) is occupied until t=5, and the soft
        // obstacle then parks on (0,0), so zero collisions means arriving at 6.
        let p = sipps_plan(&map, c(0, 0), c(0, 1), 3, &occ, Some(20)).unwrap();
        assert_eq!(p.last(), Some(c(0, 1)));
        assert!(occ.path_collisions(&p, 3) >= 1);
    }

    #[test]
    fn unreachable_and_horizon_errors() {
        let map = GridMap::with_blocked(3, 1, [c(0, 1)]);
        let occ = build_soft_occupancy(&map, [], 0);
        assert!(matches!(
            sipps_plan(&map, c(0, 0), c(0, 2), 0, &occ, None),
            Err(SippsError::Unreachable { .. })
        ));
        let open = GridMap::new(5, 1);
        let occ = build_soft_occupancy(&open, [], 0);
        assert!(matches!(
            sipps_plan(&open, c(0, 0), c(0, 4), 0, &occ, Some(3)),
            Err(SippsError::Horizon { .. })
        ));
    }

    #[test]
    fn start_on_goal_is_single_vertex() {
        let map = GridMap::new(2, 2);
        let occ = build_soft_occupancy(&map, [], 0);
        let p = sipps_plan(&map, c(1, 1), c(1, 1), 0, &occ, None).unwrap();
        assert_eq!(p.len(), 1);
    }
}
