//! Multi-agent replanning on top of SIPPS: prioritized planning, completion
//! of truncated policy paths, and replacement of over-long paths.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::ReplanError;
use crate::grid::{AgentId, MapfInstance, Path, PathMap};
use crate::sipps::{default_horizon, sipps_plan_with, DistanceCache, SoftOccupancy};

/// Replanning context for one instance; the distance cache is shared by
/// every call so hard-distance tables are built once per goal.
pub struct Replanner<'a> {
    instance: &'a MapfInstance,
    cache: &'a DistanceCache,
    /// Let not-yet-planned agents keep their old paths as soft obstacles.
    pub include_unplanned: bool,
}

impl<'a> Replanner<'a> {
    pub fn new(instance: &'a MapfInstance, cache: &'a DistanceCache) -> Self {
        Self { instance, cache, include_unplanned: false }
    }

    pub fn instance(&self) -> &MapfInstance {
        self.instance
    }

    fn occupancy<'p>(&self, soft: impl IntoIterator<Item = &'p Path>) -> SoftOccupancy {
        let mut occ = SoftOccupancy::empty(&self.instance.map);
        for p in soft {
            occ.add_path(p);
        }
        occ
    }

    /// Plan `agent` from `prefix`'s last vertex (or its start) at
    /// `start_time` and splice the result onto the prefix.
    fn plan_one(
        &self,
        occ: &SoftOccupancy,
        agent: AgentId,
        start_time: usize,
        prefix: Option<&Path>,
    ) -> Result<Path, ReplanError> {
        let map = &self.instance.map;
        let goal = self.instance.goal(agent);
        let start = match prefix {
            Some(p) => p.at(start_time),
            None => self.instance.start(agent),
        };
        let dist = self.cache.get(goal);
        let horizon = default_horizon(map, occ, start_time);
        let suffix = sipps_plan_with(map, &dist, start, goal, start_time, occ, horizon)
            .map_err(|source| ReplanError { agent, source })?;
        let mut cells = match prefix {
            Some(p) => (0..start_time).map(|t| p.at(t)).collect(),
            None => vec![start; start_time],
        };
        cells.extend_from_slice(suffix.vertices());
        Ok(Path::new(cells))
    }

    /// Prioritized planning: `agents` in seeded random order, each against
    /// `fixed` plus the agents planned before it.
    ///
    /// With `start_time > 0`, every listed agent needs a prefix covering
    /// `0..=start_time`; returned paths keep that prefix verbatim. `old`
    /// supplies previous paths used as soft obstacles for agents not yet
    /// planned, when [`include_unplanned`](Self::include_unplanned) is set.
    pub fn pp_replan(
        &self,
        fixed: &PathMap,
        agents: &[AgentId],
        start_time: usize,
        prefixes: Option<&PathMap>,
        old: Option<&PathMap>,
        seed: u64,
    ) -> Result<PathMap, ReplanError> {
        let mut order = agents.to_vec();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

        let mut occ = self.occupancy(fixed.values());
        let pending: Vec<&Path> = match (self.include_unplanned, old) {
            (true, Some(old)) => order.iter().filter_map(|a| old.get(a)).collect(),
            _ => Vec::new(),
        };
        for p in &pending {
            occ.add_path(p);
        }

        let mut out = PathMap::new();
        for &agent in &order {
            if let (true, Some(p)) = (self.include_unplanned, old.and_then(|o| o.get(&agent))) {
                occ.remove_path(p);
            }
            let prefix = prefixes.and_then(|m| m.get(&agent));
            let path = self.plan_one(&occ, agent, start_time, prefix)?;
            occ.add_path(&path);
            out.insert(agent, path);
        }
        Ok(out)
    }

    /// Finish the `unfinished` agents' policy paths from `t_l` onward.
    ///
    /// Soft obstacles are `fixed` plus the paths of the finished agents in
    /// `partial`. Every unfinished path must hold `t_l + 1` vertices.
    pub fn complete_policy_paths(
        &self,
        fixed: &PathMap,
        partial: &PathMap,
        unfinished: &[AgentId],
        t_l: usize,
        seed: u64,
    ) -> Result<PathMap, ReplanError> {
        let mut soft = fixed.clone();
        for (&a, p) in partial {
            if !unfinished.contains(&a) {
                soft.insert(a, p.clone());
            }
        }
        let done = self.pp_replan(&soft, unfinished, t_l, Some(partial), None, seed)?;
        let mut out = partial.clone();
        out.extend(done);
        Ok(out)
    }

    /// Replan from timestep zero every path in `hybrid` with at least `t_h`
    /// vertices, against `fixed` and the untouched hybrid paths.
    pub fn replace_long_paths(
        &self,
        fixed: &PathMap,
        hybrid: &PathMap,
        t_h: usize,
        seed: u64,
    ) -> Result<PathMap, ReplanError> {
        let long: Vec<AgentId> = hybrid.iter().filter(|(_, p)| p.len() >= t_h).map(|(&a, _)| a).collect();
        if long.is_empty() {
            return Ok(hybrid.clone());
        }
        let mut soft = fixed.clone();
        for (&a, p) in hybrid {
            if !long.contains(&a) {
                soft.insert(a, p.clone());
            }
        }
        let fresh = self.pp_replan(&soft, &long, 0, None, None, seed)?;
        let mut out = hybrid.clone();
        out.extend(fresh);
        Ok(out)
    }
}

/// One-shot prioritized planning with a private distance cache.
pub fn pp_replan(
    instance: &MapfInstance,
    fixed: &PathMap,
    agents: &[AgentId],
    start_time: usize,
    prefixes: Option<&PathMap>,
    seed: u64,
) -> Result<PathMap, ReplanError> {
    let cache = DistanceCache::new(&instance.map);
    Replanner::new(instance, &cache).pp_replan(fixed, agents, start_time, prefixes, None, seed)
}

pub fn complete_policy_paths(
    instance: &MapfInstance,
    fixed: &PathMap,
    partial: &PathMap,
    unfinished: &[AgentId],
    t_l: usize,
    seed: u64,
) -> Result<PathMap, ReplanError> {
    let cache = DistanceCache::new(&instance.map);
    Replanner::new(instance, &cache).complete_policy_paths(fixed, partial, unfinished, t_l, seed)
}

pub fn replace_long_paths(
    instance: &MapfInstance,
    fixed: &PathMap,
    hybrid: &PathMap,
    t_h: usize,
    seed: u64,
) -> Result<PathMap, ReplanError> {
    let cache = DistanceCache::new(&instance.map);
    Replanner::new(instance, &cache).replace_long_paths(fixed, hybrid, t_h, seed)
}
