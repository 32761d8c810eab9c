//! Vertex and swap collision counting over goal-padded paths, and the
//! pairwise collision graph built from it.

use std::collections::{BTreeSet, HashMap};

use super::{AgentId, Cell, Path, PathSet};

/// Totals over a path set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CollisionCounts {
    /// Vertex plus swap collision events, one per agent pair per timestep.
    pub collisions: usize,
    /// Unordered agent pairs with at least one collision.
    pub cp: usize,
}

/// Full collision breakdown; `pairs` uses the positional ids of the input.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CollisionReport {
    pub collisions: usize,
    pub pairs: BTreeSet<(AgentId, AgentId)>,
    /// Collision events each agent takes part in.
    pub per_agent: Vec<usize>,
}

impl CollisionReport {
    pub fn cp(&self) -> usize {
        self.pairs.len()
    }

    pub fn counts(&self) -> CollisionCounts {
        CollisionCounts { collisions: self.collisions, cp: self.pairs.len() }
    }

    fn hit(&mut self, a: AgentId, b: AgentId) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.collisions += 1;
        self.pairs.insert((lo, hi));
        self.per_agent[a] += 1;
        self.per_agent[b] += 1;
    }
}

/// Count collisions with every path padded to the longest one.
pub fn count_collisions(paths: &PathSet) -> CollisionCounts {
    collision_report(paths).counts()
}

pub fn collision_report(paths: &PathSet) -> CollisionReport {
    let refs: Vec<&Path> = paths.iter().collect();
    collision_report_of(&refs)
}

/// Collision report for an arbitrary slice of paths; ids are slice positions.
pub fn collision_report_of(paths: &[&Path]) -> CollisionReport {
    let m = paths.len();
    let mut report = CollisionReport { collisions: 0, pairs: BTreeSet::new(), per_agent: vec![0; m] };
    let horizon = paths.iter().map(|p| p.len()).max().unwrap_or(0);
    if m < 2 {
        return report;
    }

    let mut occupancy: Vec<(Cell, AgentId)> = Vec::with_capacity(m);
    let mut moves: HashMap<(Cell, Cell), Vec<AgentId>> = HashMap::new();
    for t in 0..horizon {
        occupancy.clear();
        occupancy.extend(paths.iter().enumerate().map(|(i, p)| (p.at(t), i)));
        occupancy.sort_unstable();
        let mut start = 0;
        while start < occupancy.len() {
            let mut end = start + 1;
            while end < occupancy.len() && occupancy[end].0 == occupancy[start].0 {
                end += 1;
            }
            for x in start..end {
                for y in x + 1..end {
                    report.hit(occupancy[x].1, occupancy[y].1);
                }
            }
            start = end;
        }

        if t + 1 < horizon {
            moves.clear();
            for (i, p) in paths.iter().enumerate() {
                let (from, to) = (p.at(t), p.at(t + 1));
                if from != to {
                    moves.entry((from, to)).or_default().push(i);
                }
            }
            for (&(from, to), agents) in &moves {
                if from > to {
                    continue;
                }
                if let Some(opposite) = moves.get(&(to, from)) {
                    for &a in agents {
                        for &b in opposite {
                            report.hit(a, b);
                        }
                    }
                }
            }
        }
    }
    report
}

/// Undirected graph over agents with an edge per colliding pair.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CollisionGraph {
    adjacency: Vec<BTreeSet<AgentId>>,
}

impl CollisionGraph {
    pub fn from_report(num_agents: usize, report: &CollisionReport) -> Self {
        let mut adjacency = vec![BTreeSet::new(); num_agents];
        for &(a, b) in &report.pairs {
            adjacency[a].insert(b);
            adjacency[b].insert(a);
        }
        Self { adjacency }
    }

    pub fn num_agents(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, a: AgentId) -> &BTreeSet<AgentId> {
        &self.adjacency[a]
    }

    pub fn degree(&self, a: AgentId) -> usize {
        self.adjacency[a].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Edges as (lo, hi) pairs in ascending order.
    pub fn edges(&self) -> Vec<(AgentId, AgentId)> {
        let mut out = Vec::new();
        for (a, ns) in self.adjacency.iter().enumerate() {
            out.extend(ns.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    /// Agents with at least one incident edge.
    pub fn colliding_agents(&self) -> Vec<AgentId> {
        (0..self.adjacency.len()).filter(|&a| !self.adjacency[a].is_empty()).collect()
    }
}

/// Collision graph of a full path set.
pub fn build_collision_graph(paths: &PathSet) -> CollisionGraph {
    CollisionGraph::from_report(paths.len(), &collision_report(paths))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(r: u32, col: u32) -> Cell {
        Cell::new(r, col)
    }

    fn set(paths: Vec<Vec<Cell>>) -> PathSet {
        paths.into_iter().map(Path::new).collect()
    }

    #[test]
    fn canonical_swap() {
        let p = set(vec![vec![c(0, 0), c(0, 1)], vec![c(0, 1), c(0, 0)]]);
        assert_eq!(count_collisions(&p), CollisionCounts { collisions: 1, cp: 1 });
    }

    #[test]
    fn repeated_collisions_count_one_pair() {
        // Both agents sit on (1,1) at t=2 and on (1,2) at t=5.
        let a = vec![c(0, 0), c(0, 1), c(1, 1), c(0, 1), c(0, 2), c(1, 2)];
        let b = vec![c(2, 1), c(2, 1), c(1, 1), c(2, 1), c(2, 2), c(1, 2)];
        let p = set(vec![a, b]);
        assert_eq!(count_collisions(&p), CollisionCounts { collisions: 2, cp: 1 });
    }

    #[test]
    fn goal_padding_occupancy_counts() {
        // Agent 0 reaches g=(0,1) at t=1 and parks; agent 1 enters g at t=3.
        let a = vec![c(0, 0), c(0, 1)];
        let b = vec![c(2, 1), c(2, 1), c(1, 1), c(0, 1), c(0, 2)];
        let p = set(vec![a, b]);
        assert_eq!(count_collisions(&p), CollisionCounts { collisions: 1, cp: 1 });
    }

    #[test]
    fn three_agents_star() {
        // 0 swaps with 1 at t=0..1 and shares a vertex with 2 at t=2.
        let a = vec![c(1, 1), c(1, 2), c(2, 2)];
        let b = vec![c(1, 2), c(1, 1), c(1, 0)];
        let d = vec![c(3, 2), c(3, 2), c(2, 2), c(3, 2)];
        let p = set(vec![a, b, d]);
        let g = build_collision_graph(&p);
        assert_eq!(g.edges(), vec![(0, 1), (0, 2)]);
        assert_eq!(count_collisions(&p).cp, 2);
    }

    #[test]
    fn collision_free_graph_is_edgeless() {
        let p = set(vec![vec![c(0, 0), c(0, 1)], vec![c(1, 0), c(1, 1)]]);
        let g = build_collision_graph(&p);
        assert_eq!(g.edge_count(), 0);
        assert!(g.colliding_agents().is_empty());
    }

    #[test]
    fn three_on_one_cell_is_three_pairs() {
        let p = set(vec![vec![c(0, 0)], vec![c(0, 0)], vec![c(0, 0)]]);
        assert_eq!(count_collisions(&p), CollisionCounts { collisions: 3, cp: 3 });
    }
}
