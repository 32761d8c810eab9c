use std::collections::BTreeMap;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::{AgentId, Cell, GridMap};
use crate::error::GridError;

/// One vertex per timestep, starting at t = 0. After its last vertex an
/// agent is considered parked on that vertex forever.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(Vec<Cell>);

impl Path {
    pub fn new(vertices: Vec<Cell>) -> Self {
        Self(vertices)
    }

    pub fn single(c: Cell) -> Self {
        Self(vec![c])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vertices(&self) -> &[Cell] {
        &self.0
    }

    pub fn into_vertices(self) -> Vec<Cell> {
        self.0
    }

    pub fn first(&self) -> Option<Cell> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Cell> {
        self.0.last().copied()
    }

    /// Position at timestep `t`, goal-padded past the end.
    ///
    /// Panics on an empty path.
    #[inline]
    pub fn at(&self, t: usize) -> Cell {
        self.0[t.min(self.0.len() - 1)]
    }

    pub fn push(&mut self, c: Cell) {
        self.0.push(c);
    }

    /// Drop trailing repeats of the final vertex, so the path ends at first
    /// arrival to its last cell.
    pub fn trim_trailing_waits(&mut self) {
        while self.0.len() >= 2 && self.0[self.0.len() - 1] == self.0[self.0.len() - 2] {
            self.0.pop();
        }
    }

    /// Keep only the first `len` vertices.
    pub fn truncate(&mut self, len: usize) {
        self.0.truncate(len);
    }

    /// Check path invariants against `map`.
    pub fn validate(&self, map: &GridMap) -> Result<(), GridError> {
        if self.0.is_empty() {
            return Err(GridError::EmptyPath);
        }
        for (t, &c) in self.0.iter().enumerate() {
            if !map.is_free(c) {
                return Err(GridError::BlockedVertex { t, cell: c });
            }
            if t > 0 && !self.0[t - 1].adjacent_or_same(c) {
                return Err(GridError::Jump { t, from: self.0[t - 1], to: c });
            }
        }
        Ok(())
    }
}

impl From<Vec<Cell>> for Path {
    fn from(v: Vec<Cell>) -> Self {
        Self(v)
    }
}

impl FromIterator<Cell> for Path {
    fn from_iter<T: IntoIterator<Item = Cell>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Paths for a subset of agents, keyed by agent id.
pub type PathMap = BTreeMap<AgentId, Path>;

/// A full solution: exactly one path per agent of an instance.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PathSet {
    paths: Vec<Path>,
}

impl PathSet {
    pub fn new(paths: Vec<Path>) -> Self {
        Self { paths }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Path> {
        self.paths.iter()
    }

    pub fn into_paths(self) -> Vec<Path> {
        self.paths
    }

    /// Longest path length in vertices (0 for an empty set).
    pub fn max_len(&self) -> usize {
        self.paths.iter().map(Path::len).max().unwrap_or(0)
    }

    /// Paths of every agent *not* listed in `removed`.
    pub fn without(&self, removed: &[AgentId]) -> PathMap {
        self.paths
            .iter()
            .enumerate()
            .filter(|(i, _)| !removed.contains(i))
            .map(|(i, p)| (i, p.clone()))
            .collect()
    }

    /// Paths of the listed agents only.
    pub fn subset(&self, agents: &[AgentId]) -> PathMap {
        agents.iter().map(|&a| (a, self.paths[a].clone())).collect()
    }

    /// Copy of this set with the given agents' paths replaced.
    pub fn merged(&self, updates: &PathMap) -> PathSet {
        let mut out = self.clone();
        for (&a, p) in updates {
            out.paths[a] = p.clone();
        }
        out
    }

    pub fn replace(&mut self, updates: &PathMap) {
        for (&a, p) in updates {
            self.paths[a] = p.clone();
        }
    }
}

impl Index<AgentId> for PathSet {
    type Output = Path;
    fn index(&self, i: AgentId) -> &Path {
        &self.paths[i]
    }
}

impl IndexMut<AgentId> for PathSet {
    fn index_mut(&mut self, i: AgentId) -> &mut Path {
        &mut self.paths[i]
    }
}

impl FromIterator<Path> for PathSet {
    fn from_iter<T: IntoIterator<Item = Path>>(iter: T) -> Self {
        Self { paths: iter.into_iter().collect() }
    }
}

/// Sum of costs: total vertex count over all paths.
pub fn soc(paths: &PathSet) -> usize {
    paths.iter().map(Path::len).sum()
}
