//! Per-agent observations: a stack of field-of-view channels plus a short
//! scalar vector, and the trajectory predictor behind channels 20-24.
//!
//! Channel layout (each FOV×FOV, row-major, agent at the centre):
//!
//! | index | content |
//! |-------|---------|
//! | 0 | hard obstacles, cells outside the world count as blocked |
//! | 1 | other controlled agents |
//! | 2 | goals of controlled agents inside the view, clamped onto the border |
//! | 3 | own goal, clamped onto the border |
//! | 4-7 | moves up/down/left/right that shorten the hard distance to the goal |
//! | 8 | own reference path over `[t-15, t+15)` |
//! | 9 | share of `[t, t+limit)` a soft obstacle occupies the cell |
//! | 10 | obstacle-free run starting at `t`, as a share of `limit` |
//! | 11-19 | soft obstacles at `t .. t+8` |
//! | 20-24 | predicted other controlled agents at `t+1 .. t+5` |
//! | 25 | vertex usage, `δ·U_v/m` |
//! | 26-29 | usage of the outgoing edge up/down/left/right, `δ·U_e/m` |
//! | 30 | own positions over the previous four steps |
//!
//! Vector: `Δx/σ, Δy/σ, |Δ|/σ` toward the goal (σ the map diagonal),
//! collision ratio against the reference path, `t/limit`, `t/max|P̂|`,
//! share of controlled agents on their goals, previous action index / 5.

use crate::env::{edge_usage, vertex_usage, PmdoState, PmdoTask, FOV};
use crate::grid::{Action, Cell, Path, UNREACHABLE};

pub const NUM_CHANNELS: usize = 31;
pub const VECTOR_LEN: usize = 8;
pub const MAP_LEN: usize = NUM_CHANNELS * FOV * FOV;
/// Serialized bundle size: every map value then the vector, as f32.
pub const BUNDLE_BYTES: usize = (MAP_LEN + VECTOR_LEN) * 4;
/// Upper bound of the collision-ratio vector entry.
pub const CP_RATIO_CAP: f64 = 2.0;

const HALF: i64 = (FOV / 2) as i64;
const CH_SOFT: usize = 11;
const CH_PRED: usize = 20;
const SOFT_STEPS: usize = 9;
const PRED_STEPS: usize = 5;
const TRACE_STEPS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationBundle {
    /// `NUM_CHANNELS × FOV × FOV`, channel-major.
    pub maps: Vec<f32>,
    pub vector: [f32; VECTOR_LEN],
}

impl ObservationBundle {
    pub fn zeros() -> Self {
        Self { maps: vec![0.0; MAP_LEN], vector: [0.0; VECTOR_LEN] }
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.maps[(channel * FOV + row) * FOV + col]
    }

    fn set(&mut self, channel: usize, row: usize, col: usize, v: f32) {
        self.maps[(channel * FOV + row) * FOV + col] = v;
    }

    pub fn channel(&self, channel: usize) -> &[f32] {
        &self.maps[channel * FOV * FOV..(channel + 1) * FOV * FOV]
    }

    /// Little-endian f32s: maps then vector.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(BUNDLE_BYTES);
        for v in self.maps.iter().chain(self.vector.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != BUNDLE_BYTES {
            return None;
        }
        let mut floats = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
        let maps = floats.by_ref().take(MAP_LEN).collect();
        let mut vector = [0.0; VECTOR_LEN];
        for (slot, v) in vector.iter_mut().zip(floats) {
            *slot = v;
        }
        Some(Self { maps, vector })
    }
}

/// Positions at `t+1 .. t+5` for an agent at `pos` following `reference`.
///
/// The reference vertex minimising `0.9·euclid + 0.1·|t-k|` (latest on
/// ties) anchors the guess: it is the `t+1` position when reachable in one
/// action, otherwise the agent is assumed to stay; the next four reference
/// vertices follow, clamped to its end.
pub fn predict_trajectory(pos: Cell, reference: &Path, t: usize) -> [Cell; PRED_STEPS] {
    let mut best = (f64::INFINITY, 0usize);
    for (k, &v) in reference.vertices().iter().enumerate() {
        let score = 0.9 * pos.euclidean(v) + 0.1 * t.abs_diff(k) as f64;
        if score <= best.0 {
            best = (score, k);
        }
    }
    let k = best.1;
    let anchor = reference.at(k);
    let mut out = [pos; PRED_STEPS];
    out[0] = if anchor.adjacent_or_same(pos) { anchor } else { pos };
    for (i, slot) in out.iter_mut().enumerate().skip(1) {
        *slot = reference.at(k + i);
    }
    out
}

/// Observation of controlled agent `slot`.
pub fn build_observation(task: &PmdoTask, state: &PmdoState, slot: usize) -> ObservationBundle {
    let mut obs = ObservationBundle::zeros();
    let map = &task.map;
    let t = state.t;
    let me = state.positions[slot];
    let limit = task.config.episode_limit.max(1);
    let occ = &task.occupancy;
    let dist = &task.goal_distances[slot];
    let scale = task.config.reward.delta / task.num_agents.max(1) as f64;

    let world = |fr: usize, fc: usize| -> Option<Cell> {
        let r = me.row as i64 + fr as i64 - HALF;
        let c = me.col as i64 + fc as i64 - HALF;
        (r >= 0 && c >= 0 && r < map.height() as i64 && c < map.width() as i64).then(|| Cell::new(r as u32, c as u32))
    };
    let view = |c: Cell| -> Option<(usize, usize)> {
        let dr = c.row as i64 - me.row as i64 + HALF;
        let dc = c.col as i64 - me.col as i64 + HALF;
        (0..FOV as i64).contains(&dr).then_some(())?;
        (0..FOV as i64).contains(&dc).then_some((dr as usize, dc as usize))
    };
    let clamped = |c: Cell| -> (usize, usize) {
        let dr = (c.row as i64 - me.row as i64).clamp(-HALF, HALF) + HALF;
        let dc = (c.col as i64 - me.col as i64).clamp(-HALF, HALF) + HALF;
        (dr as usize, dc as usize)
    };

    // Cell-wise channels.
    for fr in 0..FOV {
        for fc in 0..FOV {
            let Some(cell) = world(fr, fc) else {
                obs.set(0, fr, fc, 1.0);
                continue;
            };
            if map.is_blocked(cell) {
                obs.set(0, fr, fc, 1.0);
                obs.set(9, fr, fc, 1.0);
                continue;
            }
            let idx = map.index(cell);

            let d = dist[idx];
            if d != UNREACHABLE {
                for a in [Action::Up, Action::Down, Action::Left, Action::Right] {
                    if let Some(n) = a.apply(cell).filter(|&n| map.is_free(n)) {
                        if dist[map.index(n)] < d {
                            obs.set(4 + a.index(), fr, fc, 1.0);
                        }
                    }
                }
            }

            let explicit_end = occ.horizon().min(t + limit).max(t);
            let mut busy = (t..explicit_end).filter(|&s| occ.present_idx(idx, s)).count();
            if occ.parked_idx(idx) > 0 {
                busy += t + limit - explicit_end;
            }
            obs.set(9, fr, fc, busy as f32 / limit as f32);

            let blank = (t..t + limit).take_while(|&s| !occ.present_idx(idx, s)).count();
            obs.set(10, fr, fc, blank as f32 / limit as f32);

            for k in 0..SOFT_STEPS {
                if occ.present_idx(idx, t + k) {
                    obs.set(CH_SOFT + k, fr, fc, 1.0);
                }
            }

            obs.set(25, fr, fc, (scale * vertex_usage(task, state, slot, cell, t) as f64) as f32);
            for a in [Action::Up, Action::Down, Action::Left, Action::Right] {
                if let Some(n) = a.apply(cell).filter(|&n| map.is_free(n)) {
                    let u = edge_usage(task, state, slot, cell, n, t);
                    obs.set(26 + a.index(), fr, fc, (scale * u as f64) as f32);
                }
            }
        }
    }

    // Agents, goals and paths.
    for (j, &pos) in state.positions.iter().enumerate() {
        if j == slot {
            continue;
        }
        if let Some((r, c)) = view(pos) {
            obs.set(1, r, c, 1.0);
            let (gr, gc) = clamped(task.goals[j]);
            obs.set(2, gr, gc, 1.0);
        }
        for (k, cell) in predict_trajectory(pos, &task.sipps_refs[j], t).into_iter().enumerate() {
            if let Some((r, c)) = view(cell) {
                obs.set(CH_PRED + k, r, c, 1.0);
            }
        }
    }
    let (gr, gc) = clamped(task.goals[slot]);
    obs.set(3, gr, gc, 1.0);

    let w = task.config.reward.route_window;
    let reference = &task.sipps_refs[slot];
    for j in t.saturating_sub(w)..t + w {
        if let Some((r, c)) = view(reference.at(j)) {
            obs.set(8, r, c, 1.0);
        }
    }
    for s in t.saturating_sub(TRACE_STEPS)..t {
        if let Some((r, c)) = view(state.traces[slot][s]) {
            obs.set(30, r, c, 1.0);
        }
    }

    // Vector.
    let goal = task.goals[slot];
    let sigma = ((map.width() as f64).powi(2) + (map.height() as f64).powi(2)).sqrt();
    let dx = goal.col as f64 - me.col as f64;
    let dy = goal.row as f64 - me.row as f64;
    let mine = state.collisions[slot] as f64;
    let on_ref = task.ref_collisions[slot] as f64;
    let cp_ratio = match (mine > 0.0, on_ref > 0.0) {
        (false, _) => 0.0,
        (true, false) => CP_RATIO_CAP,
        (true, true) => (mine / on_ref).min(CP_RATIO_CAP),
    };
    let on_goal = state.positions.iter().zip(&task.goals).filter(|(p, g)| p == g).count();
    let vector = [
        dx / sigma,
        dy / sigma,
        (dx * dx + dy * dy).sqrt() / sigma,
        cp_ratio,
        t as f64 / limit as f64,
        t as f64 / task.max_ref_len.max(1) as f64,
        on_goal as f64 / state.positions.len() as f64,
        state.prev_actions[slot].index() as f64 / 5.0,
    ];
    for (slot, v) in obs.vector.iter_mut().zip(vector) {
        *slot = v as f32;
    }
    obs
}

/// Observations of every controlled agent.
pub fn build_observations(task: &PmdoTask, state: &PmdoState) -> Vec<ObservationBundle> {
    (0..task.num_controlled()).map(|i| build_observation(task, state, i)).collect()
}
