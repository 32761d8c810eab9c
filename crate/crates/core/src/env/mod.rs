//! The replanning episode with mixed dynamic obstacles: a few controlled
//! agents move synchronously among hard obstacles and soft obstacles that
//! replay fixed trajectories.

mod reward;
mod trace;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use reward::{edge_usage, route_distance, vertex_usage, RewardConfig, RewardTerms, StepEvents};
pub use trace::{read_trace, StepRecord, TraceWriter};

use crate::error::EnvError;
use crate::grid::{Action, AgentId, Cell, GridMap, MapfInstance, Path, PathMap, PathSet};
use crate::replan::Replanner;
use crate::sipps::{DistanceCache, SoftOccupancy};

/// Side length of the square field of view.
pub const FOV: usize = 9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub episode_limit: usize,
    pub reward: RewardConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self { episode_limit: 356, reward: RewardConfig::default() }
    }
}

/// One replanning task. Everything here is fixed for the whole episode.
#[derive(Clone, Debug)]
pub struct PmdoTask {
    pub map: GridMap,
    /// Instance ids of the controlled agents; slot `i` below refers to
    /// `controlled[i]`.
    pub controlled: Vec<AgentId>,
    pub starts: Vec<Cell>,
    pub goals: Vec<Cell>,
    /// Trajectories of every other agent.
    pub soft_paths: PathMap,
    pub occupancy: SoftOccupancy,
    /// Reference paths computed once when the task is built.
    pub sipps_refs: Vec<Path>,
    pub max_ref_len: usize,
    /// Soft collisions on each reference path.
    pub ref_collisions: Vec<usize>,
    pub goal_distances: Vec<Arc<Vec<u32>>>,
    /// Agents in the whole instance.
    pub num_agents: usize,
    pub config: EnvConfig,
}

impl PmdoTask {
    /// Task with explicit reference paths; controlled agents start where
    /// their references start.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        map: &GridMap,
        controlled: Vec<AgentId>,
        goals: Vec<Cell>,
        soft_paths: PathMap,
        sipps_refs: Vec<Path>,
        num_agents: usize,
        config: EnvConfig,
        cache: &DistanceCache,
    ) -> Result<Self, EnvError> {
        if controlled.is_empty() {
            return Err(EnvError::EmptyTask);
        }
        let mut occupancy = SoftOccupancy::empty(map);
        for p in soft_paths.values() {
            occupancy.add_path(p);
        }
        let starts: Vec<Cell> = sipps_refs.iter().map(|p| p.at(0)).collect();
        let ref_collisions = sipps_refs.iter().map(|p| occupancy.path_collisions(p, 0)).collect();
        let goal_distances = goals.iter().map(|&g| cache.get(g)).collect();
        let max_ref_len = sipps_refs.iter().map(Path::len).max().unwrap_or(0);
        Ok(Self {
            map: map.clone(),
            controlled,
            starts,
            goals,
            soft_paths,
            occupancy,
            sipps_refs,
            max_ref_len,
            ref_collisions,
            goal_distances,
            num_agents,
            config,
        })
    }

    /// Replanning task for `agents`; every other agent's path in `paths`
    /// becomes a soft obstacle and references come from prioritized SIPPS.
    pub fn build(
        instance: &MapfInstance,
        paths: &PathSet,
        agents: &[AgentId],
        config: EnvConfig,
        cache: &DistanceCache,
        seed: u64,
    ) -> Result<Self, EnvError> {
        if agents.is_empty() {
            return Err(EnvError::EmptyTask);
        }
        if let Some(&bad) = agents.iter().find(|&&a| a >= instance.num_agents()) {
            return Err(EnvError::UnknownAgent(bad));
        }
        let soft = paths.without(agents);
        let refs = Replanner::new(instance, cache).pp_replan(&soft, agents, 0, None, None, seed)?;
        let goals = agents.iter().map(|&a| instance.goal(a)).collect();
        let sipps_refs = agents.iter().map(|a| refs[a].clone()).collect();
        Self::from_parts(&instance.map, agents.to_vec(), goals, soft, sipps_refs, instance.num_agents(), config, cache)
    }

    pub fn num_controlled(&self) -> usize {
        self.controlled.len()
    }

    /// Moves that stay on the map and off hard obstacles; `Stay` always.
    pub fn valid_actions(&self, at: Cell) -> Vec<Action> {
        Action::ALL.into_iter().filter(|a| self.is_valid(at, *a)).collect()
    }

    pub fn is_valid(&self, at: Cell, a: Action) -> bool {
        a == Action::Stay || a.apply(at).is_some_and(|c| self.map.is_free(c))
    }

    /// All goals reached and no soft obstacle ever returns to a goal.
    pub fn is_solved(&self, positions: &[Cell], t: usize) -> bool {
        positions.iter().zip(&self.goals).all(|(p, g)| p == g)
            && self.goals.iter().all(|&g| !self.occupancy.occupied_after(g, t))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PmdoState {
    pub t: usize,
    pub positions: Vec<Cell>,
    /// Visited cells per agent, `t + 1` each.
    pub traces: Vec<Vec<Cell>>,
    /// Accumulated collision events per agent.
    pub collisions: Vec<usize>,
    pub prev_actions: Vec<Action>,
}

impl PmdoState {
    pub fn initial(task: &PmdoTask) -> Self {
        let n = task.num_controlled();
        Self {
            t: 0,
            positions: task.starts.clone(),
            traces: task.starts.iter().map(|&s| vec![s]).collect(),
            collisions: vec![0; n],
            prev_actions: vec![Action::Stay; n],
        }
    }
}

/// Result of one synchronous step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub rewards: Vec<RewardTerms>,
    pub events: Vec<StepEvents>,
    pub terminal: bool,
    pub solved: bool,
}

/// One episode over a task.
#[derive(Clone, Debug)]
pub struct PmdoEnv {
    task: Arc<PmdoTask>,
    state: PmdoState,
}

impl PmdoEnv {
    pub fn new(task: Arc<PmdoTask>) -> Self {
        let state = PmdoState::initial(&task);
        Self { task, state }
    }

    /// Resume from an arbitrary state (fixtures, tests).
    pub fn with_state(task: Arc<PmdoTask>, state: PmdoState) -> Self {
        Self { task, state }
    }

    pub fn task(&self) -> &PmdoTask {
        &self.task
    }

    pub fn task_arc(&self) -> &Arc<PmdoTask> {
        &self.task
    }

    pub fn state(&self) -> &PmdoState {
        &self.state
    }

    pub fn valid_actions(&self, slot: usize) -> Vec<Action> {
        self.task.valid_actions(self.state.positions[slot])
    }

    pub fn is_solved(&self) -> bool {
        self.task.is_solved(&self.state.positions, self.state.t)
    }

    pub fn is_terminal(&self) -> bool {
        self.state.t >= self.task.config.episode_limit || self.is_solved()
    }

    /// Apply one action per controlled agent simultaneously.
    pub fn step(&mut self, actions: &[Action]) -> Result<StepOutcome, EnvError> {
        let n = self.task.num_controlled();
        if actions.len() != n {
            return Err(EnvError::BadJointAction(actions.len()));
        }
        if self.is_terminal() {
            return Err(EnvError::Terminated);
        }
        for (slot, &a) in actions.iter().enumerate() {
            if !self.task.is_valid(self.state.positions[slot], a) {
                return Err(EnvError::InvalidAction { agent: slot, action: a });
            }
        }
        let task = &*self.task;
        let prev = self.state.clone();
        let t = prev.t;
        let next: Vec<Cell> =
            prev.positions.iter().zip(actions).map(|(&c, a)| a.apply(c).expect("validated")).collect();

        let events: Vec<StepEvents> = (0..n)
            .map(|i| {
                let (from, to) = (prev.positions[i], next[i]);
                let moved = from != to;
                StepEvents {
                    soft_vertex: task.occupancy.multiplicity(to, t + 1) as usize,
                    soft_swap: if moved { task.occupancy.edge(to, from, t) as usize } else { 0 },
                    agent_vertex: (0..n).filter(|&j| j != i && next[j] == to).count(),
                    agent_swap: (0..n)
                        .filter(|&j| j != i && moved && prev.positions[j] == to && next[j] == from)
                        .count(),
                }
            })
            .collect();

        let state = &mut self.state;
        state.t = t + 1;
        for i in 0..n {
            state.positions[i] = next[i];
            state.traces[i].push(next[i]);
            state.collisions[i] += events[i].total();
            state.prev_actions[i] = actions[i];
        }
        let rewards =
            (0..n).map(|i| reward::compute_reward(task, &prev, &self.state, i, actions[i], &events[i])).collect();
        let solved = self.is_solved();
        Ok(StepOutcome { rewards, events, terminal: solved || self.is_terminal(), solved })
    }
}
