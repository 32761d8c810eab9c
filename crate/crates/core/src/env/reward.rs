use serde::{Deserialize, Serialize};

use super::{PmdoState, PmdoTask};
use crate::grid::{Action, Cell};

/// Reward coefficients. `difficulty` indexes the curriculum tables; the
/// solver always runs at the hardest level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub difficulty: usize,
    /// Off-route coefficient per difficulty.
    pub alphas: [f64; 3],
    /// Per-step cost magnitude per difficulty.
    pub action_costs: [f64; 3],
    pub beta_l: usize,
    pub beta_h: usize,
    pub delta: f64,
    pub delta_v: f64,
    pub delta_e: f64,
    pub exceed: f64,
    pub return_penalty: f64,
    pub collision: f64,
    pub shaping: f64,
    /// Half-width of the reference-path window used by the off-route term.
    pub route_window: usize,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            difficulty: 2,
            alphas: [0.06, 0.05, 0.04],
            action_costs: [0.4, 0.5, 0.6],
            beta_l: 2,
            beta_h: 15,
            delta: 10.0,
            delta_v: 0.225,
            delta_e: 0.075,
            exceed: -0.2,
            return_penalty: -0.4,
            collision: -1.5,
            shaping: 0.2,
            route_window: 15,
        }
    }
}

impl RewardConfig {
    pub fn alpha(&self) -> f64 {
        self.alphas[self.difficulty]
    }

    pub fn action_cost(&self) -> f64 {
        self.action_costs[self.difficulty]
    }

    /// Congestion penalty magnitude for tallies `u_v`, `u_e` among `m` agents.
    pub fn congestion(&self, u_v: usize, u_e: usize, m: usize) -> f64 {
        let m = m.max(1) as f64;
        self.delta * (self.delta_v * u_v as f64 / m + self.delta_e * u_e as f64 / m)
    }
}

/// The seven additive reward terms of one agent for one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardTerms {
    pub action: f64,
    pub exceed: f64,
    #[serde(rename = "return")]
    pub ret: f64,
    pub collision: f64,
    pub congestion: f64,
    pub off_route: f64,
    pub shaping: f64,
}

impl RewardTerms {
    pub fn total(&self) -> f64 {
        self.action + self.exceed + self.ret + self.collision + self.congestion + self.off_route + self.shaping
    }
}

/// Collision events of one agent in one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepEvents {
    pub soft_vertex: usize,
    pub soft_swap: usize,
    pub agent_vertex: usize,
    pub agent_swap: usize,
}

impl StepEvents {
    pub fn total(&self) -> usize {
        self.soft_vertex + self.soft_swap + self.agent_vertex + self.agent_swap
    }
}

/// Vertex usage of `v` around `t`: soft presence over `[t-β_l, t+β_h]`
/// plus the other controlled agents' positions over `[t-β_l, t]`.
pub fn vertex_usage(task: &PmdoTask, state: &PmdoState, slot: usize, v: Cell, t: usize) -> usize {
    let cfg = &task.config.reward;
    let lo = t.saturating_sub(cfg.beta_l);
    let idx = task.map.index(v);
    let soft: usize = (lo..=t + cfg.beta_h).map(|s| task.occupancy.multiplicity_idx(idx, s) as usize).sum();
    let agents = (0..state.traces.len())
        .filter(|&j| j != slot)
        .map(|j| (lo..=t.min(state.t)).filter(|&s| state.traces[j][s] == v).count())
        .sum::<usize>();
    soft + agents
}

/// Usage of the directed edge `from -> to` for traversals departing in
/// `[t-β_l, t+β_h]` (soft) or `[t-β_l, t-1]` (other controlled agents).
pub fn edge_usage(task: &PmdoTask, state: &PmdoState, slot: usize, from: Cell, to: Cell, t: usize) -> usize {
    let cfg = &task.config.reward;
    let lo = t.saturating_sub(cfg.beta_l);
    let (a, b) = (task.map.index(from), task.map.index(to));
    let soft: usize = (lo..=t + cfg.beta_h).map(|s| task.occupancy.edge_idx(a, b, s) as usize).sum();
    let agents = (0..state.traces.len())
        .filter(|&j| j != slot)
        .map(|j| {
            let tr = &state.traces[j];
            (lo..t.min(state.t)).filter(|&s| tr[s] == from && tr[s + 1] == to).count()
        })
        .sum::<usize>();
    soft + agents
}

/// Distance from `v` to the nearest reference vertex with index in
/// `[t - w, t + w)`, reference goal-padded.
pub fn route_distance(task: &PmdoTask, slot: usize, v: Cell, t: usize) -> f64 {
    let w = task.config.reward.route_window;
    let r = &task.sipps_refs[slot];
    (t.saturating_sub(w)..t + w).map(|j| v.euclidean(r.at(j))).fold(f64::INFINITY, f64::min)
}

/// Terms for agent `slot` after the transition `prev -> state` under `action`.
pub(crate) fn compute_reward(
    task: &PmdoTask,
    prev: &PmdoState,
    state: &PmdoState,
    slot: usize,
    action: Action,
    events: &StepEvents,
) -> RewardTerms {
    let cfg = &task.config.reward;
    let from = prev.positions[slot];
    let to = state.positions[slot];
    let goal = task.goals[slot];
    let t = state.t;
    let dist = &task.goal_distances[slot];

    let action_term = if action == Action::Stay && from == goal { 0.0 } else { -cfg.action_cost() };
    let exceed = if t > task.max_ref_len { cfg.exceed } else { 0.0 };
    let ret = if action != Action::Stay && prev.t >= 1 && prev.traces[slot][prev.t - 1] == to {
        cfg.return_penalty
    } else {
        0.0
    };
    let u_v = vertex_usage(task, state, slot, to, t);
    let u_e = if from != to { edge_usage(task, state, slot, from, to, t) } else { 0 };
    let phi = |c: Cell| dist[task.map.index(c)] as f64;
    RewardTerms {
        action: action_term,
        exceed,
        ret,
        collision: cfg.collision * events.total() as f64,
        congestion: -cfg.congestion(u_v, u_e, task.num_agents),
        off_route: -cfg.alpha() * route_distance(task, slot, to, t),
        shaping: cfg.shaping * (phi(from) - phi(to)),
    }
}
