use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::BenchError;
use crate::grid::{Agent, GridMap, MapfInstance};
use crate::io::ScenEntry;

/// Agent count for `density` on `map`: `round(density · free cells)`.
pub fn agent_count(map: &GridMap, density: f64) -> usize {
    (density * map.free_cells().len() as f64).round() as usize
}

/// Sample `round(density · free cells)` agents with distinct starts and
/// distinct goals, all inside the largest connected region.
pub fn gen_scen(map: &GridMap, density: f64, seed: u64) -> Result<MapfInstance, BenchError> {
    let m = agent_count(map, density);
    gen_agents(map, m, seed)
}

/// Sample exactly `m` agents in the largest connected region.
pub fn gen_agents(map: &GridMap, m: usize, seed: u64) -> Result<MapfInstance, BenchError> {
    let region = map.largest_region();
    if m == 0 || m > region.len() {
        return Err(BenchError::RegionTooSmall { needed: m, available: region.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<_> = region.choose_multiple(&mut rng, m).copied().collect();
    let goals: Vec<_> = region.choose_multiple(&mut rng, m).copied().collect();
    let agents = starts.into_iter().zip(goals).map(|(start, goal)| Agent { start, goal }).collect();
    Ok(MapfInstance::new(map.clone(), agents)?)
}

/// Scenario lines for `inst`, optimal lengths from BFS.
pub fn scen_entries(inst: &MapfInstance, map_name: &str) -> Vec<ScenEntry> {
    inst.agents
        .iter()
        .map(|a| {
            let d = inst.map.bfs_distances(a.goal)[inst.map.index(a.start)];
            ScenEntry {
                bucket: 0,
                map: map_name.to_string(),
                width: inst.map.width(),
                height: inst.map.height(),
                start: a.start,
                goal: a.goal,
                optimal_length: d as f64,
            }
        })
        .collect()
}
