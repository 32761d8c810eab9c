//! Deterministic fixture states and golden-file helpers.

use std::path::PathBuf;
use std::sync::Arc;

use lnsrl_core::bench::maps::random_map;
use lnsrl_core::bench::scen::gen_agents;
use lnsrl_core::env::{EnvConfig, PmdoEnv, PmdoState, PmdoTask};
use lnsrl_core::features::{build_observations, ObservationBundle};
use lnsrl_core::grid::{MapfInstance, PathSet};
use lnsrl_core::policy::protocol::{ActEntry, ActMode, Frame, ResetDescriptor};
use lnsrl_core::policy::{Policy, ScriptedPolicy};
use lnsrl_core::replan::pp_replan;
use lnsrl_core::sipps::DistanceCache;

/// Golden files are rewritten instead of compared when this is set.
pub const REGEN_VAR: &str = "LNSRL_REGEN_GOLDENS";

pub fn regen() -> bool {
    std::env::var_os(REGEN_VAR).is_some()
}

pub fn fixture_dir(sub: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(sub)
}

pub struct StateFixture {
    pub name: String,
    pub instance: MapfInstance,
    pub task: Arc<PmdoTask>,
    pub state: PmdoState,
    pub slot: usize,
}

/// Replanning task `k` of the fixture family: a 10×10 random map with 20
/// agents, six of them controlled.
pub fn fixture_task(k: u64) -> (MapfInstance, Arc<PmdoTask>) {
    let map = random_map(10, 10, 0.175, 1000 + k).unwrap();
    let inst = gen_agents(&map, 20, 2000 + k).unwrap();
    let everyone: Vec<usize> = (0..20).collect();
    let paths = pp_replan(&inst, &Default::default(), &everyone, 0, None, k).unwrap();
    let paths = PathSet::new(paths.into_values().collect());
    let agents: Vec<usize> = (0..6).map(|i| (3 * i + k as usize) % 20).collect();
    let mut agents = agents;
    agents.sort_unstable();
    let cache = DistanceCache::new(&inst.map);
    let task = PmdoTask::build(&inst, &paths, &agents, EnvConfig::default(), &cache, k).unwrap();
    (inst, Arc::new(task))
}

/// Ten states: task `k` advanced `k` steps by the scripted policy.
pub fn feature_fixtures() -> Vec<StateFixture> {
    (0..10u64)
        .map(|k| {
            let (instance, task) = fixture_task(k);
            let mut env = PmdoEnv::new(task.clone());
            let mut policy = ScriptedPolicy;
            policy.start(&task, k).unwrap();
            for _ in 0..k {
                if env.is_terminal() {
                    break;
                }
                let obs = build_observations(&task, env.state());
                let actions = policy.act(&task, env.state(), &obs).unwrap();
                env.step(&actions).unwrap();
            }
            StateFixture {
                name: format!("state_{k:02}"),
                instance,
                slot: k as usize % task.num_controlled(),
                state: env.state().clone(),
                task,
            }
        })
        .collect()
}

/// One frame of every kind, with fixed contents.
pub fn golden_frames() -> Vec<(&'static str, Frame)> {
    let mut reset = ResetDescriptor::layout_defaults(7, ActMode::Greedy, 42);
    reset.map_width = 10;
    reset.map_height = 10;
    reset.num_agents = 20;
    reset.agent_ids = vec![1, 4, 9];
    reset.episode_limit = 356;
    let mut a = ObservationBundle::zeros();
    a.maps[0] = 1.0;
    a.maps[40] = 0.5;
    a.vector = [0.25, -0.5, 1.0, 0.0, 0.125, 2.0, 1.0 / 3.0, 0.8];
    let mut b = ObservationBundle::zeros();
    *b.maps.last_mut().unwrap() = -1.5;
    let act = vec![
        ActEntry { slot: 0, action: 4, probs: [0.1, 0.1, 0.1, 0.1, 0.6] },
        ActEntry { slot: 2, action: 1, probs: [0.0, 1.0, 0.0, 0.0, 0.0] },
    ];
    vec![
        ("reset", Frame::Reset(reset)),
        ("obs", Frame::Obs(vec![(0, a), (2, b)])),
        ("act", Frame::Act(act)),
        ("done", Frame::Done),
        ("err", Frame::Err("bad session".into())),
    ]
}
