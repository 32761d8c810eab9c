//! World representation, paths, instances and collision accounting.

mod collision;
mod instance;
mod map;
mod path;

pub use collision::{
    build_collision_graph, collision_report, collision_report_of, count_collisions, CollisionCounts,
    CollisionGraph, CollisionReport,
};
pub use instance::{Agent, MapfInstance};
pub use map::{Cell, GridMap, UNREACHABLE};
pub use path::{soc, Path, PathMap, PathSet};

use serde::{Deserialize, Serialize};

/// Index of an agent within its instance.
pub type AgentId = usize;

/// Row/column offsets of the four moves, in [`Action`] order.
pub const MOVES: [(i32, i32); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// The five per-timestep actions. Discriminants are the wire/action indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
    Stay = 4,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::Stay];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    /// Row/column delta.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::Stay => (0, 0),
            m => MOVES[m as usize],
        }
    }

    /// Target cell, or `None` when it would leave the non-negative quadrant.
    pub fn apply(self, c: Cell) -> Option<Cell> {
        let (dr, dc) = self.delta();
        c.offset(dr, dc)
    }

    /// Action that moves `from` to `to`, if they are identical or adjacent.
    pub fn between(from: Cell, to: Cell) -> Option<Action> {
        Self::ALL.into_iter().find(|a| a.apply(from) == Some(to))
    }
}
