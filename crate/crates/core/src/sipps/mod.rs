//! Safe-interval path planning with soft obstacles.

mod occupancy;
mod search;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

pub use occupancy::{build_soft_occupancy, SoftOccupancy};
pub use search::{default_horizon, sipps_plan, sipps_plan_with};

use crate::grid::{Cell, GridMap};

/// Hard-obstacle BFS tables keyed by goal, shared across threads.
#[derive(Debug)]
pub struct DistanceCache {
    map: GridMap,
    tables: RwLock<HashMap<Cell, Arc<Vec<u32>>>>,
}

impl DistanceCache {
    pub fn new(map: &GridMap) -> Self {
        Self { map: map.clone(), tables: RwLock::new(HashMap::new()) }
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn get(&self, goal: Cell) -> Arc<Vec<u32>> {
        if let Some(t) = self.tables.read().expect("distance cache poisoned").get(&goal) {
            return Arc::clone(t);
        }
        let table = Arc::new(self.map.bfs_distances(goal));
        self.tables.write().expect("distance cache poisoned").entry(goal).or_insert(table).clone()
    }

    /// Hard distance from `from` to `goal`.
    pub fn distance(&self, from: Cell, goal: Cell) -> u32 {
        self.get(goal)[self.map.index(from)]
    }
}
