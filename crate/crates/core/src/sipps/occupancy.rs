use std::collections::HashMap;

use crate::grid::{Cell, GridMap, Path};

/// Space-time occupancy of soft obstacles (other agents' fixed trajectories).
///
/// Soft paths are goal-padded: after its last vertex a soft obstacle stays
/// parked, so every timestep at or beyond `horizon` looks like the parked
/// layer. Several soft obstacles may share a cell; the multiplicity is kept.
#[derive(Clone, Debug)]
pub struct SoftOccupancy {
    width: u32,
    cells: usize,
    horizon: usize,
    /// `counts[t * cells + idx]` for `t < horizon`.
    counts: Vec<u16>,
    parked: Vec<u16>,
    /// Directed traversals `(from, to, departure t)`.
    edges: HashMap<(u32, u32, u32), u16>,
    paths: usize,
}

impl SoftOccupancy {
    pub fn empty(map: &GridMap) -> Self {
        Self {
            width: map.width(),
            cells: map.num_cells(),
            horizon: 0,
            counts: Vec::new(),
            parked: vec![0; map.num_cells()],
            edges: HashMap::new(),
            paths: 0,
        }
    }

    #[inline]
    fn idx(&self, c: Cell) -> usize {
        c.row as usize * self.width as usize + c.col as usize
    }

    /// Timesteps `0..horizon` are stored explicitly.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_paths(&self) -> usize {
        self.paths
    }

    pub fn num_cells(&self) -> usize {
        self.cells
    }

    fn extend_horizon(&mut self, horizon: usize) {
        if horizon <= self.horizon {
            return;
        }
        for _ in self.horizon..horizon {
            self.counts.extend_from_slice(&self.parked);
        }
        self.horizon = horizon;
    }

    /// Add one soft trajectory; the horizon grows to cover it.
    pub fn add_path(&mut self, path: &Path) {
        if path.is_empty() {
            return;
        }
        self.extend_horizon(path.len());
        for t in 0..self.horizon {
            let i = self.idx(path.at(t));
            self.counts[t * self.cells + i] += 1;
        }
        let last = self.idx(path.at(path.len() - 1));
        self.parked[last] += 1;
        for t in 0..path.len() - 1 {
            let (a, b) = (path.at(t), path.at(t + 1));
            if a != b {
                let key = (self.idx(a) as u32, self.idx(b) as u32, t as u32);
                *self.edges.entry(key).or_insert(0) += 1;
            }
        }
        self.paths += 1;
    }

    /// Undo an earlier [`add_path`](Self::add_path) of the same path.
    pub fn remove_path(&mut self, path: &Path) {
        if path.is_empty() {
            return;
        }
        for t in 0..self.horizon {
            let i = self.idx(path.at(t));
            self.counts[t * self.cells + i] -= 1;
        }
        let last = self.idx(path.at(path.len() - 1));
        self.parked[last] -= 1;
        for t in 0..path.len() - 1 {
            let (a, b) = (path.at(t), path.at(t + 1));
            if a != b {
                let key = (self.idx(a) as u32, self.idx(b) as u32, t as u32);
                if let Some(n) = self.edges.get_mut(&key) {
                    *n -= 1;
                    if *n == 0 {
                        self.edges.remove(&key);
                    }
                }
            }
        }
        self.paths -= 1;
    }

    /// Soft obstacles on cell index `idx` at timestep `t`.
    #[inline]
    pub fn multiplicity_idx(&self, idx: usize, t: usize) -> u16 {
        if t < self.horizon {
            self.counts[t * self.cells + idx]
        } else {
            self.parked[idx]
        }
    }

    pub fn multiplicity(&self, c: Cell, t: usize) -> u16 {
        self.multiplicity_idx(self.idx(c), t)
    }

    #[inline]
    pub fn present_idx(&self, idx: usize, t: usize) -> bool {
        self.multiplicity_idx(idx, t) > 0
    }

    pub fn present(&self, c: Cell, t: usize) -> bool {
        self.multiplicity(c, t) > 0
    }

    /// Parked multiplicity, i.e. occupancy for every `t >= horizon`.
    pub fn parked_idx(&self, idx: usize) -> u16 {
        self.parked[idx]
    }

    /// Soft obstacles moving `from -> to` departing at `t`.
    #[inline]
    pub fn edge_idx(&self, from: usize, to: usize, t: usize) -> u16 {
        if t >= self.horizon {
            return 0;
        }
        self.edges.get(&(from as u32, to as u32, t as u32)).copied().unwrap_or(0)
    }

    pub fn edge(&self, from: Cell, to: Cell, t: usize) -> u16 {
        self.edge_idx(self.idx(from), self.idx(to), t)
    }

    /// All directed traversals as `(from_idx, to_idx, t, multiplicity)`.
    pub fn edge_events(&self) -> impl Iterator<Item = (usize, usize, usize, u16)> + '_ {
        self.edges.iter().map(|(&(a, b, t), &n)| (a as usize, b as usize, t as usize, n))
    }

    /// True if `c` is occupied at any timestep strictly after `t`.
    pub fn occupied_after(&self, c: Cell, t: usize) -> bool {
        let i = self.idx(c);
        if self.parked[i] > 0 {
            return true;
        }
        (t + 1..self.horizon).any(|s| self.counts[s * self.cells + i] > 0)
    }

    /// Soft collisions of a path whose vertex 0 sits at `start_time`,
    /// counted at timesteps after `start_time` (vertex multiplicity plus
    /// opposing traversals) with goal-padding on both sides. A soft obstacle
    /// parked on the final vertex counts once.
    pub fn path_collisions(&self, path: &Path, start_time: usize) -> usize {
        if path.is_empty() {
            return 0;
        }
        let end = (start_time + path.len()).max(self.horizon) + 1;
        let mut total = 0usize;
        for t in start_time + 1..end {
            let here = path.at(t - start_time);
            let i = self.idx(here);
            total += self.multiplicity_idx(i, t) as usize;
            let prev = path.at(t - 1 - start_time);
            if prev != here {
                total += self.edge_idx(i, self.idx(prev), t - 1) as usize;
            }
        }
        total
    }
}

/// Occupancy of a set of soft paths with at least `horizon` explicit steps.
pub fn build_soft_occupancy<'a, I>(map: &GridMap, soft_paths: I, horizon: usize) -> SoftOccupancy
where
    I: IntoIterator<Item = &'a Path>,
{
    let mut occ = SoftOccupancy::empty(map);
    occ.extend_horizon(horizon);
    for p in soft_paths {
        occ.add_path(p);
    }
    occ
}
