//! The anytime repair loop: prioritized SIPPS for the initial solution,
//! then destroy-and-repair iterations that use either a policy rollout or
//! prioritized SIPPS, switching one way from the former to the latter once
//! the policy stops paying off.

use std::collections::VecDeque;
use std::sync::Arc;
use std::time::{Duration, Instant};

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alns::{select_agent_set, AlnsWeights, Heuristic};
use crate::env::{EnvConfig, PmdoEnv, PmdoTask};
use crate::error::{PolicyError, ReplanError};
use crate::features::build_observations;
use crate::grid::{
    collision_report, soc, AgentId, CollisionGraph, CollisionReport, MapfInstance, Path,
    PathMap, PathSet,
};
use crate::policy::protocol::ActMode;
use crate::policy::{Policy, PolicySpec};
use crate::replan::Replanner;
use crate::sipps::DistanceCache;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Lns2,
    Lns2Rl,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lns2" => Ok(Mode::Lns2),
            "lns2rl" => Ok(Mode::Lns2Rl),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DriverConfig {
    pub mode: Mode,
    pub time_limit: Option<Duration>,
    pub max_iterations: Option<usize>,
    pub neighborhood: usize,
    /// Capacity of the switch queue.
    pub mu: usize,
    /// Switch threshold on the queue mean.
    pub rho: f64,
    /// Rollout horizon factor on the longest initial path.
    pub d_l: f64,
    /// Long-path threshold factor on the longest initial path.
    pub d_h: f64,
    pub seed: u64,
    pub alns_gamma: f64,
    pub alns_floor: f64,
    pub env: EnvConfig,
    pub policy: PolicySpec,
    pub act_mode: ActMode,
}

impl Default for DriverConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Lns2,
            time_limit: Some(Duration::from_secs(60)),
            max_iterations: None,
            neighborhood: 8,
            mu: 20,
            rho: 0.3,
            d_l: 1.2,
            d_h: 2.2,
            seed: 0,
            alns_gamma: 0.1,
            alns_floor: 0.01,
            env: EnvConfig::default(),
            policy: PolicySpec::Scripted,
            act_mode: ActMode::Sample,
        }
    }
}

/// Rollout pause step and long-path threshold: `ceil(d_l·t_m)`, `ceil(d_h·t_m)`.
///
/// A small slack absorbs binary rounding so that e.g. `2.2 · 50` gives 110.
pub fn thresholds(t_m: usize, d_l: f64, d_h: f64) -> (usize, usize) {
    let up = |x: f64| (x - 1e-9).ceil().max(0.0) as usize;
    (up(d_l * t_m as f64), up(d_h * t_m as f64))
}

/// Bounded FIFO of "policy beat prioritized planning" bits.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SwitchQueue {
    bits: VecDeque<bool>,
    capacity: usize,
}

impl SwitchQueue {
    pub fn new(capacity: usize) -> Self {
        Self { bits: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn push(&mut self, bit: bool) {
        if self.capacity == 0 {
            return;
        }
        if self.bits.len() == self.capacity {
            self.bits.pop_front();
        }
        self.bits.push_back(bit);
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Mean of the bits; 0 when empty.
    pub fn mean(&self) -> f64 {
        if self.bits.is_empty() {
            0.0
        } else {
            self.bits.iter().filter(|&&b| b).count() as f64 / self.bits.len() as f64
        }
    }
}

/// Whether this iteration should use the policy: never after the switch,
/// otherwise while the queue is not yet full or its mean beats `rho`.
pub fn use_marl(q: &SwitchQueue, mu: usize, rho: f64, switched: bool) -> bool {
    !switched && (q.len() < mu || q.mean() > rho)
}

/// Queue entry for a policy iteration: 1 when the policy's paths leave
/// strictly fewer collision pairs than the prioritized reference.
pub fn switch_bit(cp_policy: usize, cp_reference: usize) -> bool {
    cp_policy < cp_reference
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Planner {
    Pp,
    Policy,
    /// The policy session failed; the reference paths were used instead.
    Degraded,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub heuristic: Heuristic,
    pub planner: Planner,
    pub agents: Vec<AgentId>,
    pub cp_before: usize,
    pub cp_after: usize,
    pub accepted: bool,
    /// Seconds since the solve started; ignored by equality.
    pub wall_secs: f64,
}

impl PartialEq for IterationLog {
    fn eq(&self, o: &Self) -> bool {
        (self.iteration, self.heuristic, self.planner, &self.agents, self.cp_before, self.cp_after, self.accepted)
            == (o.iteration, o.heuristic, o.planner, &o.agents, o.cp_before, o.cp_after, o.accepted)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveResult {
    pub paths: PathSet,
    pub solved: bool,
    pub cp: usize,
    pub soc: usize,
    pub initial_cp: usize,
    pub iterations: usize,
    pub log: Vec<IterationLog>,
    /// First iteration that used prioritized planning because of the queue.
    pub switch_iteration: Option<usize>,
    pub t_l: usize,
    pub t_h: usize,
    pub runtime_secs: f64,
}

/// Output of one policy rollout.
#[derive(Clone, Debug)]
pub struct Rollout {
    /// Traces: full for agents that finished, `t_stop + 1` vertices otherwise.
    pub p_rl: PathMap,
    pub p_hat: PathMap,
    /// Timestep the rollout stopped at.
    pub t_stop: usize,
    pub solved: bool,
}

/// Roll `policy` out on `task` until it is solved, the episode limit hits,
/// or `t_l` steps have passed.
pub fn rollout_policy(
    task: Arc<PmdoTask>,
    policy: &mut dyn Policy,
    t_l: usize,
    seed: u64,
) -> Result<Rollout, PolicyError> {
    policy.start(&task, seed)?;
    let mut env = PmdoEnv::new(task.clone());
    while !env.is_terminal() && env.state().t < t_l {
        let obs = build_observations(&task, env.state());
        let mut actions = policy.act(&task, env.state(), &obs)?;
        if actions.len() != task.num_controlled() {
            return Err(PolicyError::Arity { expected: task.num_controlled(), got: actions.len() });
        }
        for (slot, a) in actions.iter_mut().enumerate() {
            if !task.is_valid(env.state().positions[slot], *a) {
                warn!("policy proposed invalid {a:?} for slot {slot}; staying");
                *a = crate::grid::Action::Stay;
            }
        }
        env.step(&actions)?;
    }
    policy.finish()?;
    let state = env.state();
    let solved = env.is_solved();
    let mut p_rl = PathMap::new();
    for (slot, &agent) in task.controlled.iter().enumerate() {
        let mut p = Path::new(state.traces[slot].clone());
        let goal = task.goals[slot];
        if state.positions[slot] == goal && !task.occupancy.occupied_after(goal, state.t) {
            p.trim_trailing_waits();
        }
        p_rl.insert(agent, p);
    }
    let p_hat = task.controlled.iter().zip(&task.sipps_refs).map(|(&a, p)| (a, p.clone())).collect();
    Ok(Rollout { p_rl, p_hat, t_stop: state.t, solved })
}

struct Loop<'a> {
    inst: &'a MapfInstance,
    cfg: &'a DriverConfig,
    cache: DistanceCache,
    policy: Option<Box<dyn Policy>>,
    t_l: usize,
    t_h: usize,
}

enum PolicyOutcome {
    Ran { p_rl: PathMap, p_hat: PathMap },
    /// Session failure; the reference paths stand in.
    Failed { reason: String, p_hat: PathMap },
}

impl Loop<'_> {
    fn replanner(&self) -> Replanner<'_> {
        Replanner::new(self.inst, &self.cache)
    }

    fn ensure_policy(&mut self) -> Result<&mut Box<dyn Policy>, PolicyError> {
        if self.policy.is_none() {
            self.policy = Some(self.cfg.policy.connect(self.cfg.act_mode)?);
        }
        Ok(self.policy.as_mut().expect("just set"))
    }

    fn policy_iteration(
        &mut self,
        paths: &PathSet,
        fixed: &PathMap,
        agents: &[AgentId],
        seed_a: u64,
        seed_b: u64,
    ) -> Result<PolicyOutcome, ReplanError> {
        let task = match PmdoTask::build(self.inst, paths, agents, self.cfg.env.clone(), &self.cache, seed_a) {
            Ok(t) => Arc::new(t),
            Err(crate::error::EnvError::Replan(e)) => return Err(e),
            Err(e) => unreachable!("task inputs come from the solver: {e}"),
        };
        let t_l = self.t_l;
        let rollout = self.ensure_policy().and_then(|policy| rollout_policy(task.clone(), policy.as_mut(), t_l, seed_b));
        let rollout = match rollout {
            Ok(r) => r,
            Err(e) => {
                // A broken session is not reused.
                self.policy = None;
                let p_hat = task.controlled.iter().zip(&task.sipps_refs).map(|(&a, p)| (a, p.clone())).collect();
                return Ok(PolicyOutcome::Failed { reason: e.to_string(), p_hat });
            }
        };
        let unfinished: Vec<AgentId> =
            rollout.p_rl.iter().filter(|(&a, p)| p.last() != Some(self.inst.goal(a))).map(|(&a, _)| a).collect();
        let replanner = self.replanner();
        let completed = replanner.complete_policy_paths(fixed, &rollout.p_rl, &unfinished, rollout.t_stop, seed_b)?;
        let p_rl = replanner.replace_long_paths(fixed, &completed, self.t_h, seed_b.wrapping_add(1))?;
        Ok(PolicyOutcome::Ran { p_rl, p_hat: rollout.p_hat })
    }
}

/// Current solution plus its collision bookkeeping.
struct Incumbent {
    paths: PathSet,
    report: CollisionReport,
    graph: CollisionGraph,
}

impl Incumbent {
    fn new(paths: PathSet) -> Self {
        let report = collision_report(&paths);
        let graph = CollisionGraph::from_report(paths.len(), &report);
        Self { paths, report, graph }
    }

    fn cp(&self) -> usize {
        self.report.cp()
    }

    /// Adopt `update` when it does not raise CP; returns the resulting CP.
    fn try_accept(&mut self, update: &PathMap) -> (bool, usize) {
        let candidate = self.paths.merged(update);
        let report = collision_report(&candidate);
        if report.cp() <= self.cp() {
            self.graph = CollisionGraph::from_report(candidate.len(), &report);
            self.paths = candidate;
            self.report = report;
            (true, self.cp())
        } else {
            (false, self.cp())
        }
    }
}

fn merged_cp(paths: &PathSet, update: &PathMap) -> usize {
    collision_report(&paths.merged(update)).cp()
}

/// Solve with the policy named in `cfg` (connected on first use).
pub fn solve(inst: &MapfInstance, cfg: &DriverConfig) -> Result<SolveResult, ReplanError> {
    solve_with_policy(inst, cfg, None)
}

/// Solve with an already constructed policy (used in lns2rl mode only).
pub fn solve_with_policy(
    inst: &MapfInstance,
    cfg: &DriverConfig,
    policy: Option<Box<dyn Policy>>,
) -> Result<SolveResult, ReplanError> {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cache = DistanceCache::new(&inst.map);
    let everyone: Vec<AgentId> = (0..inst.num_agents()).collect();
    let initial = Replanner::new(inst, &cache).pp_replan(&PathMap::new(), &everyone, 0, None, None, rng.gen())?;
    let mut cur = Incumbent::new(initial.into_values().collect());
    let initial_cp = cur.cp();
    let (t_l, t_h) = thresholds(cur.paths.max_len(), cfg.d_l, cfg.d_h);
    debug!("initial CP {initial_cp}, t_l {t_l}, t_h {t_h}");

    let mut lp = Loop { inst, cfg, cache, policy, t_l, t_h };
    let mut weights = AlnsWeights::new(cfg.alns_gamma, cfg.alns_floor);
    let mut queue = SwitchQueue::new(cfg.mu);
    let mut switched = false;
    let mut switch_iteration = None;
    let mut log = Vec::new();
    let mut iteration = 0;

    let out_of_time = |it: usize| {
        cfg.max_iterations.is_some_and(|m| it >= m) || cfg.time_limit.is_some_and(|l| clock.elapsed() >= l)
    };

    while cur.cp() > 0 && !out_of_time(iteration) {
        iteration += 1;
        let h = weights.select(&mut rng);
        let agents = select_agent_set(h, &cur.paths, &cur.report, &cur.graph, cfg.neighborhood, &mut rng)
            .expect("neighborhood size is positive");
        // Both seeds are drawn every iteration so the random stream does not
        // depend on which planner runs.
        let (seed_a, seed_b): (u64, u64) = (rng.gen(), rng.gen());
        let cp_before = cur.cp();
        let fixed = cur.paths.without(&agents);

        let marl = cfg.mode == Mode::Lns2Rl && use_marl(&queue, cfg.mu, cfg.rho, switched);
        if cfg.mode == Mode::Lns2Rl && !marl && !switched {
            switched = true;
            switch_iteration = Some(iteration);
        }

        let mut planner = Planner::Pp;
        let mut accepted = false;
        let mut p_hat = None;
        if marl {
            match lp.policy_iteration(&cur.paths, &fixed, &agents, seed_a, seed_b) {
                Ok(PolicyOutcome::Ran { p_rl, p_hat: reference }) => {
                    planner = Planner::Policy;
                    queue.push(switch_bit(merged_cp(&cur.paths, &p_rl), merged_cp(&cur.paths, &reference)));
                    let (ok, cp_after) = cur.try_accept(&p_rl);
                    if ok {
                        weights.update(h, cp_before, cp_after);
                        log.push(IterationLog {
                            iteration,
                            heuristic: h,
                            planner,
                            agents,
                            cp_before,
                            cp_after,
                            accepted: true,
                            wall_secs: clock.elapsed().as_secs_f64(),
                        });
                        continue;
                    }
                    p_hat = Some(reference);
                }
                Ok(PolicyOutcome::Failed { reason, p_hat: reference }) => {
                    warn!("iteration {iteration}: policy session failed ({reason}); using reference paths");
                    planner = Planner::Degraded;
                    queue.push(false);
                    p_hat = Some(reference);
                }
                Err(e) => warn!("iteration {iteration}: replanning failed: {e}"),
            }
        } else {
            match lp.replanner().pp_replan(&fixed, &agents, 0, None, None, seed_a) {
                Ok(p) => p_hat = Some(p),
                Err(e) => warn!("iteration {iteration}: replanning failed: {e}"),
            }
        }
        let mut cp_after = cp_before;
        if let Some(p) = p_hat {
            (accepted, cp_after) = cur.try_accept(&p);
        }
        weights.update(h, cp_before, cp_after);
        log.push(IterationLog {
            iteration,
            heuristic: h,
            planner,
            agents,
            cp_before,
            cp_after,
            accepted,
            wall_secs: clock.elapsed().as_secs_f64(),
        });
    }

    let cp = cur.cp();
    Ok(SolveResult {
        soc: soc(&cur.paths),
        paths: cur.paths,
        solved: cp == 0,
        cp,
        initial_cp,
        iterations: iteration,
        log,
        switch_iteration,
        t_l,
        t_h,
        runtime_secs: clock.elapsed().as_secs_f64(),
    })
}
