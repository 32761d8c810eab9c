use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{AgentId, Cell, GridMap};
use crate::error::GridError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Agent {
    pub start: Cell,
    pub goal: Cell,
}

/// A map plus one (start, goal) pair per agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapfInstance {
    pub map: GridMap,
    pub agents: Vec<Agent>,
}

impl MapfInstance {
    /// Build and validate an instance.
    pub fn new(map: GridMap, agents: Vec<Agent>) -> Result<Self, GridError> {
        let inst = Self { map, agents };
        inst.validate()?;
        Ok(inst)
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn start(&self, a: AgentId) -> Cell {
        self.agents[a].start
    }

    pub fn goal(&self, a: AgentId) -> Cell {
        self.agents[a].goal
    }

    /// Keep only the first `k` agents.
    pub fn truncated(&self, k: usize) -> Self {
        Self { map: self.map.clone(), agents: self.agents.iter().take(k).copied().collect() }
    }

    /// Distinct starts, distinct goals, all on free cells, each agent's start
    /// and goal in one connected region.
    pub fn validate(&self) -> Result<(), GridError> {
        let mut starts = HashSet::new();
        let mut goals = HashSet::new();
        let labels = self.map.components();
        for (i, a) in self.agents.iter().enumerate() {
            for c in [a.start, a.goal] {
                if !self.map.is_free(c) {
                    return Err(GridError::NotFree { agent: i, cell: c });
                }
            }
            if !starts.insert(a.start) {
                return Err(GridError::DuplicateStart { agent: i, cell: a.start });
            }
            if !goals.insert(a.goal) {
                return Err(GridError::DuplicateGoal { agent: i, cell: a.goal });
            }
            if labels[self.map.index(a.start)] != labels[self.map.index(a.goal)] {
                return Err(GridError::Disconnected { agent: i });
            }
        }
        Ok(())
    }
}
