//! Python bindings. Cells cross the boundary as `(row, col)` tuples and
//! paths as lists of them.

use std::sync::Arc;
use std::time::Duration;

use lnsrl_core::adg::{build_adg, simulate_many, DelayModel};
use lnsrl_core::driver::{self, DriverConfig, Mode};
use lnsrl_core::env::{EnvConfig, PmdoTask};
use lnsrl_core::features::build_observation;
use lnsrl_core::grid::{self, Action, Agent, Cell, MapfInstance, Path, PathSet};
use lnsrl_core::io;
use lnsrl_core::sipps::{build_soft_occupancy, sipps_plan as plan_one, DistanceCache};
use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

type Pair = (u32, u32);

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cell(p: Pair) -> Cell {
    Cell::new(p.0, p.1)
}

fn pair(c: Cell) -> Pair {
    (c.row, c.col)
}

fn to_path(v: &[Pair]) -> Path {
    v.iter().copied().map(cell).collect()
}

fn from_path(p: &Path) -> Vec<Pair> {
    p.vertices().iter().copied().map(pair).collect()
}

fn to_pathset(paths: &[Vec<Pair>]) -> PathSet {
    paths.iter().map(|p| to_path(p)).collect()
}

/// Occupancy grid; `blocked` lists `(row, col)` obstacle cells.
#[pyclass(name = "GridMap", module = "lnsrl", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGridMap {
    inner: grid::GridMap,
}

#[pymethods]
impl PyGridMap {
    #[new]
    #[pyo3(signature = (width, height, blocked = Vec::new()))]
    fn new(width: u32, height: u32, blocked: Vec<Pair>) -> PyResult<Self> {
        if let Some(&(r, c)) = blocked.iter().find(|&&(r, c)| r >= height || c >= width) {
            return Err(PyIndexError::new_err(format!("cell ({r}, {c}) is outside the map")));
        }
        Ok(Self { inner: grid::GridMap::with_blocked(width, height, blocked.into_iter().map(cell)) })
    }

    /// Parse movingai `.map` text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        io::parse_map(text).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        io::read_map(path).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn width(&self) -> u32 {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> u32 {
        self.inner.height()
    }

    fn is_blocked(&self, cell_: Pair) -> bool {
        !self.inner.in_bounds(cell(cell_)) || self.inner.is_blocked(cell(cell_))
    }

    fn blocked_cells(&self) -> Vec<Pair> {
        self.inner.blocked_cells().into_iter().map(pair).collect()
    }

    fn free_cells(&self) -> Vec<Pair> {
        self.inner.free_cells().into_iter().map(pair).collect()
    }

    fn to_movingai(&self) -> String {
        self.inner.to_movingai()
    }

    fn __repr__(&self) -> String {
        format!("GridMap({}x{}, {} blocked)", self.inner.width(), self.inner.height(), self.inner.blocked_count())
    }
}

fn instance(map: &PyGridMap, starts: &[Pair], goals: &[Pair]) -> PyResult<MapfInstance> {
    if starts.len() != goals.len() {
        return Err(err(format!("{} starts but {} goals", starts.len(), goals.len())));
    }
    let agents = starts.iter().zip(goals).map(|(&s, &g)| Agent { start: cell(s), goal: cell(g) }).collect();
    MapfInstance::new(map.inner.clone(), agents).map_err(err)
}

/// Load a JSON task file; returns `(map, starts, goals)`.
#[pyfunction]
fn read_task(path: std::path::PathBuf) -> PyResult<(PyGridMap, Vec<Pair>, Vec<Pair>)> {
    let inst = io::read_task(path).map_err(err)?;
    let starts = inst.agents.iter().map(|a| pair(a.start)).collect();
    let goals = inst.agents.iter().map(|a| pair(a.goal)).collect();
    Ok((PyGridMap { inner: inst.map }, starts, goals))
}

/// Run the neighborhood search. Returns a dict with `paths`, `solved`,
/// `cp`, `soc`, `initial_cp`, `iterations`, `switch_iteration` and
/// `runtime_secs`.
#[pyfunction]
#[pyo3(signature = (map, starts, goals, mode = "lns2", time_limit = 60.0, max_iterations = None, seed = 0, neighborhood = 8))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    map: &PyGridMap,
    starts: Vec<Pair>,
    goals: Vec<Pair>,
    mode: &str,
    time_limit: f64,
    max_iterations: Option<usize>,
    seed: u64,
    neighborhood: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let inst = instance(map, &starts, &goals)?;
    let mode: Mode = mode.parse().map_err(err)?;
    if !(time_limit >= 0.0 && time_limit.is_finite()) || neighborhood == 0 {
        return Err(err("time_limit must be >= 0 and neighborhood positive"));
    }
    let cfg = DriverConfig {
        mode,
        time_limit: (time_limit > 0.0).then(|| Duration::from_secs_f64(time_limit)),
        max_iterations,
        neighborhood,
        seed,
        ..Default::default()
    };
    let r = py.detach(|| driver::solve(&inst, &cfg)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("paths", r.paths.iter().map(from_path).collect::<Vec<_>>())?;
    d.set_item("solved", r.solved)?;
    d.set_item("cp", r.cp)?;
    d.set_item("soc", r.soc)?;
    d.set_item("initial_cp", r.initial_cp)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("switch_iteration", r.switch_iteration)?;
    d.set_item("runtime_secs", r.runtime_secs)?;
    Ok(d)
}

/// `(collision_events, colliding_pairs)` of goal-padded paths.
#[pyfunction]
fn count_collisions(paths: Vec<Vec<Pair>>) -> PyResult<(usize, usize)> {
    if paths.iter().any(Vec::is_empty) {
        return Err(err("paths must be non-empty"));
    }
    let c = grid::count_collisions(&to_pathset(&paths));
    Ok((c.collisions, c.cp))
}

/// Sum of path vertex counts.
#[pyfunction]
fn soc(paths: Vec<Vec<Pair>>) -> usize {
    grid::soc(&to_pathset(&paths))
}

/// Single-agent plan that avoids `soft_paths` where it can.
#[pyfunction]
#[pyo3(signature = (map, start, goal, soft_paths = Vec::new(), start_time = 0))]
fn sipps_plan(
    map: &PyGridMap,
    start: Pair,
    goal: Pair,
    soft_paths: Vec<Vec<Pair>>,
    start_time: usize,
) -> PyResult<Vec<Pair>> {
    let m = &map.inner;
    for c in [start, goal] {
        if !m.in_bounds(cell(c)) || m.is_blocked(cell(c)) {
            return Err(err(format!("cell {c:?} is blocked or outside the map")));
        }
    }
    let soft: Vec<Path> = soft_paths.iter().map(|p| to_path(p)).collect();
    let occ = build_soft_occupancy(m, soft.iter(), 0);
    plan_one(m, cell(start), cell(goal), start_time, &occ, None).map(|p| from_path(&p)).map_err(err)
}

/// Execute a collision-free plan under random task delays and return the
/// summary as a dict. `delays` is `none`, `fixed:V` or `uniform:LO:HI`.
#[pyfunction]
#[pyo3(signature = (paths, runs = 100, seed = 0, delays = "uniform:0:2"))]
fn adg_simulate<'py>(
    py: Python<'py>,
    paths: Vec<Vec<Pair>>,
    runs: usize,
    seed: u64,
    delays: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let model: DelayModel = delays.parse().map_err(err)?;
    let adg = build_adg(&to_pathset(&paths)).map_err(err)?;
    let s = py.detach(|| simulate_many(&adg, &model, runs, seed));
    let d = PyDict::new(py);
    d.set_item("runs", s.runs)?;
    d.set_item("robots", s.robots)?;
    d.set_item("tasks", s.tasks)?;
    d.set_item("inter_edges", s.inter_edges)?;
    d.set_item("completed_runs", s.completed_runs)?;
    d.set_item("overlap_runs", s.overlap_runs)?;
    d.set_item("planned_makespan", s.planned_makespan)?;
    d.set_item("mean_makespan", s.mean_makespan)?;
    d.set_item("max_makespan", s.max_makespan)?;
    Ok(d)
}

/// Replanning episode for a subset of agents: everyone else's path in
/// `paths` is a soft obstacle. Actions are 0..=4 (up, down, left, right, stay).
#[pyclass(name = "PmdoEnv", module = "lnsrl")]
struct PyPmdoEnv {
    inner: lnsrl_core::env::PmdoEnv,
}

#[pymethods]
impl PyPmdoEnv {
    #[new]
    #[pyo3(signature = (map, starts, goals, paths, agents, seed = 0, episode_limit = None))]
    fn new(
        map: &PyGridMap,
        starts: Vec<Pair>,
        goals: Vec<Pair>,
        paths: Vec<Vec<Pair>>,
        agents: Vec<usize>,
        seed: u64,
        episode_limit: Option<usize>,
    ) -> PyResult<Self> {
        let inst = instance(map, &starts, &goals)?;
        if paths.len() != inst.num_agents() || paths.iter().any(Vec::is_empty) {
            return Err(err("need one non-empty path per agent"));
        }
        let mut config = EnvConfig::default();
        if let Some(l) = episode_limit {
            config.episode_limit = l;
        }
        let cache = DistanceCache::new(&inst.map);
        let task = PmdoTask::build(&inst, &to_pathset(&paths), &agents, config, &cache, seed).map_err(err)?;
        Ok(Self { inner: lnsrl_core::env::PmdoEnv::new(Arc::new(task)) })
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.state().t
    }

    #[getter]
    fn positions(&self) -> Vec<Pair> {
        self.inner.state().positions.iter().copied().map(pair).collect()
    }

    #[getter]
    fn num_controlled(&self) -> usize {
        self.inner.task().num_controlled()
    }

    /// Reference paths from prioritized planning, one per controlled agent.
    fn reference_paths(&self) -> Vec<Vec<Pair>> {
        self.inner.task().sipps_refs.iter().map(from_path).collect()
    }

    fn valid_actions(&self, slot: usize) -> PyResult<Vec<usize>> {
        if slot >= self.inner.task().num_controlled() {
            return Err(PyIndexError::new_err("slot out of range"));
        }
        Ok(self.inner.valid_actions(slot).into_iter().map(Action::index).collect())
    }

    /// Little-endian f32 observation bytes of one controlled agent.
    fn observation<'py>(&self, py: Python<'py>, slot: usize) -> PyResult<Bound<'py, PyBytes>> {
        if slot >= self.inner.task().num_controlled() {
            return Err(PyIndexError::new_err("slot out of range"));
        }
        let obs = build_observation(self.inner.task(), self.inner.state(), slot);
        Ok(PyBytes::new(py, &obs.to_bytes()))
    }

    fn is_solved(&self) -> bool {
        self.inner.is_solved()
    }

    fn is_terminal(&self) -> bool {
        self.inner.is_terminal()
    }

    /// One joint step; returns `(rewards, terminal, solved)`.
    fn step(&mut self, actions: Vec<usize>) -> PyResult<(Vec<f64>, bool, bool)> {
        let acts = actions
            .iter()
            .map(|&i| Action::from_index(i).ok_or_else(|| err(format!("action {i} is not in 0..=4"))))
            .collect::<PyResult<Vec<_>>>()?;
        let out = self.inner.step(&acts).map_err(err)?;
        Ok((out.rewards.iter().map(|r| r.total()).collect(), out.terminal, out.solved))
    }

    /// Executed traces so far, one per controlled agent.
    fn traces(&self) -> Vec<Vec<Pair>> {
        self.inner.state().traces.iter().map(|t| t.iter().copied().map(pair).collect()).collect()
    }
}

#[pymodule]
fn lnsrl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridMap>()?;
    m.add_class::<PyPmdoEnv>()?;
    m.add_function(wrap_pyfunction!(read_task, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(count_collisions, m)?)?;
    m.add_function(wrap_pyfunction!(soc, m)?)?;
    m.add_function(wrap_pyfunction!(sipps_plan, m)?)?;
    m.add_function(wrap_pyfunction!(adg_simulate, m)?)?;
    Ok(())
}
