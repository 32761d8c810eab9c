//! Adaptive destroy-heuristic selection for the neighbourhood search.

use std::collections::{BTreeSet, HashMap};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::AlnsError;
use crate::grid::{AgentId, Cell, CollisionGraph, CollisionReport, PathSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    /// Random walk over the collision graph.
    CollisionWalk = 0,
    /// The most-colliding agent and the agents around it.
    AgentBased = 1,
    Random = 2,
}

impl Heuristic {
    pub const ALL: [Heuristic; 3] = [Heuristic::CollisionWalk, Heuristic::AgentBased, Heuristic::Random];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlnsWeights {
    pub w: [f64; 3],
    /// Reaction factor of the exponential smoothing.
    pub gamma: f64,
    pub floor: f64,
}

impl Default for AlnsWeights {
    fn default() -> Self {
        Self { w: [1.0; 3], gamma: 0.1, floor: 0.01 }
    }
}

impl AlnsWeights {
    pub fn new(gamma: f64, floor: f64) -> Self {
        Self { w: [1.0; 3], gamma, floor }
    }

    /// Draw a heuristic with probability proportional to its weight.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Heuristic {
        let dist = WeightedIndex::new(self.w).expect("weights stay positive");
        Heuristic::ALL[dist.sample(rng)]
    }

    /// Smooth `h`'s weight toward the CP improvement it just achieved.
    pub fn update(&mut self, h: Heuristic, cp_before: usize, cp_after: usize) {
        let gain = cp_before.saturating_sub(cp_after) as f64;
        let w = &mut self.w[h.index()];
        *w = (self.gamma * gain + (1.0 - self.gamma) * *w).max(self.floor);
    }
}

/// Pick `min(n, m)` distinct agents to destroy, returned sorted.
pub fn select_agent_set<R: Rng + ?Sized>(
    h: Heuristic,
    paths: &PathSet,
    report: &CollisionReport,
    graph: &CollisionGraph,
    n: usize,
    rng: &mut R,
) -> Result<Vec<AgentId>, AlnsError> {
    if n == 0 {
        return Err(AlnsError::EmptySelection);
    }
    let m = paths.len();
    let n = n.min(m);
    let mut chosen = BTreeSet::new();
    match h {
        Heuristic::CollisionWalk => collision_walk(graph, n, &mut chosen, rng),
        Heuristic::AgentBased => agent_based(paths, report, graph, n, &mut chosen, rng),
        Heuristic::Random => {}
    }
    top_up(m, n, &mut chosen, rng);
    Ok(chosen.into_iter().collect())
}

fn top_up<R: Rng + ?Sized>(m: usize, n: usize, chosen: &mut BTreeSet<AgentId>, rng: &mut R) {
    if chosen.len() >= n {
        return;
    }
    let mut rest: Vec<AgentId> = (0..m).filter(|a| !chosen.contains(a)).collect();
    rest.shuffle(rng);
    chosen.extend(rest.into_iter().take(n - chosen.len()));
}

fn collision_walk<R: Rng + ?Sized>(graph: &CollisionGraph, n: usize, chosen: &mut BTreeSet<AgentId>, rng: &mut R) {
    let colliding = graph.colliding_agents();
    if colliding.is_empty() {
        return;
    }
    let mut budget = 10 * n;
    while chosen.len() < n && budget > 0 {
        let mut cur = *colliding.choose(rng).expect("non-empty");
        chosen.insert(cur);
        while chosen.len() < n && budget > 0 {
            budget -= 1;
            let next: Vec<AgentId> = graph.neighbors(cur).iter().copied().collect();
            cur = *next.choose(rng).expect("colliding agents have neighbours");
            chosen.insert(cur);
            // Restart once the walk is trapped inside already-chosen agents.
            if graph.neighbors(cur).iter().all(|a| chosen.contains(a)) {
                break;
            }
        }
    }
}

fn agent_based<R: Rng + ?Sized>(
    paths: &PathSet,
    report: &CollisionReport,
    graph: &CollisionGraph,
    n: usize,
    chosen: &mut BTreeSet<AgentId>,
    rng: &mut R,
) {
    let most = report.per_agent.iter().copied().max().unwrap_or(0);
    let top: Vec<AgentId> = (0..paths.len()).filter(|&a| report.per_agent[a] == most).collect();
    let Some(&pivot) = top.choose(rng) else { return };
    chosen.insert(pivot);

    let mut partners: Vec<AgentId> = graph.neighbors(pivot).iter().copied().collect();
    partners.shuffle(rng);
    for a in partners {
        if chosen.len() >= n {
            return;
        }
        chosen.insert(a);
    }

    // Agents crossing the pivot's cells, closest in time first.
    let mut when: HashMap<Cell, Vec<usize>> = HashMap::new();
    for (t, &c) in paths[pivot].vertices().iter().enumerate() {
        when.entry(c).or_default().push(t);
    }
    let mut near: Vec<(usize, AgentId)> = Vec::new();
    for (a, p) in paths.iter().enumerate() {
        if chosen.contains(&a) {
            continue;
        }
        let gap = p
            .vertices()
            .iter()
            .enumerate()
            .filter_map(|(t, c)| when.get(c).map(|ts| ts.iter().map(|&s| s.abs_diff(t)).min().unwrap_or(usize::MAX)))
            .min();
        if let Some(g) = gap {
            near.push((g, a));
        }
    }
    near.sort_unstable();
    for (_, a) in near {
        if chosen.len() >= n {
            return;
        }
        chosen.insert(a);
    }
}
