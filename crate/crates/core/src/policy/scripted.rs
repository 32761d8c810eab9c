use super::Policy;
use crate::env::{PmdoState, PmdoTask, FOV};
use crate::error::PolicyError;
use crate::features::ObservationBundle;
use crate::grid::Action;

/// Follows the reference path while the next vertex looks free, otherwise
/// steps to the free-looking cell closest to the goal. Deterministic and
/// stateless.
#[derive(Clone, Copy, Debug, Default)]
pub struct ScriptedPolicy;

const SOFT_NEXT: usize = 12;
const PREDICTED_NEXT: usize = 20;

/// Scripted choice for controlled agent `slot`.
pub fn scripted_action(task: &PmdoTask, state: &PmdoState, slot: usize, obs: &ObservationBundle) -> Action {
    let pos = state.positions[slot];
    let centre = (FOV / 2) as i32;
    let occupied = |a: Action| {
        let (dr, dc) = a.delta();
        let (r, c) = ((centre + dr) as usize, (centre + dc) as usize);
        obs.get(SOFT_NEXT, r, c) > 0.0 || obs.get(PREDICTED_NEXT, r, c) > 0.0
    };
    let valid = task.valid_actions(pos);
    let next = task.sipps_refs[slot].at(state.t + 1);
    if let Some(a) = Action::between(pos, next).filter(|a| valid.contains(a)) {
        if !occupied(a) {
            return a;
        }
    }
    let dist = &task.goal_distances[slot];
    *valid
        .iter()
        .min_by_key(|&&a| {
            let to = a.apply(pos).expect("valid");
            (occupied(a), dist[task.map.index(to)], a.index())
        })
        .expect("stay is always valid")
}

impl Policy for ScriptedPolicy {
    fn start(&mut self, _task: &PmdoTask, _seed: u64) -> Result<(), PolicyError> {
        Ok(())
    }

    fn act(
        &mut self,
        task: &PmdoTask,
        state: &PmdoState,
        observations: &[ObservationBundle],
    ) -> Result<Vec<Action>, PolicyError> {
        if observations.len() != task.num_controlled() {
            return Err(PolicyError::Arity { expected: task.num_controlled(), got: observations.len() });
        }
        Ok(observations.iter().enumerate().map(|(i, o)| scripted_action(task, state, i, o)).collect())
    }
}
