//! Delay-tolerant execution of a collision-free plan.
//!
//! Each robot's plan becomes a chain of one-step tasks (waits included). For
//! every cell the planned visits are ordered by time and the task that
//! enters the cell depends on the task with which the previous occupant
//! leaves it. Executing tasks only once their dependencies are done keeps
//! robots apart however long individual tasks take.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::AdgError;
use crate::grid::{count_collisions, Action, AgentId, Cell, PathSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TaskStatus {
    Staged,
    Enqueued,
    Done,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecTask {
    pub id: usize,
    pub robot: AgentId,
    pub action: Action,
    pub start_pos: Cell,
    pub end_pos: Cell,
    /// Planned timestep at which the task begins.
    pub time: usize,
    pub status: TaskStatus,
}

impl ExecTask {
    pub fn is_move(&self) -> bool {
        self.start_pos != self.end_pos
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adg {
    pub tasks: Vec<ExecTask>,
    /// Task ids of each robot in time order.
    pub chains: Vec<Vec<usize>>,
    /// Each robot's cell before its first task.
    pub initial: Vec<Cell>,
    /// Consecutive-task edges of every chain.
    pub intra_edges: Vec<(usize, usize)>,
    /// Cell-precedence edges between robots (or a robot revisiting a cell).
    pub inter_edges: Vec<(usize, usize)>,
}

impl Adg {
    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    /// Predecessor lists indexed by task id.
    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.tasks.len()];
        for &(u, v) in self.intra_edges.iter().chain(&self.inter_edges) {
            preds[v].push(u);
        }
        preds
    }

    fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.tasks.len()];
        for &(u, v) in self.intra_edges.iter().chain(&self.inter_edges) {
            succ[u].push(v);
        }
        succ
    }
}

/// A stay at one cell by one robot over planned timesteps `[from, to]`.
struct Visit {
    robot: AgentId,
    from: usize,
    to: usize,
    enter: Option<usize>,
    leave: Option<usize>,
}

/// Compile `paths` into a dependency graph. Rejects plans with collisions
/// and plans whose precedences close a cycle (a rotation of robots around a
/// loop of cells, each stepping into the cell the next one vacates).
pub fn build_adg(paths: &PathSet) -> Result<Adg, AdgError> {
    let cp = count_collisions(paths).cp;
    if cp > 0 {
        return Err(AdgError::Collisions(cp));
    }
    let mut tasks = Vec::new();
    let mut chains = Vec::with_capacity(paths.len());
    let mut intra_edges = Vec::new();
    let mut visits: HashMap<Cell, Vec<Visit>> = HashMap::new();

    for (robot, path) in paths.iter().enumerate() {
        let v = path.vertices();
        let mut chain = Vec::with_capacity(v.len().saturating_sub(1));
        for t in 0..v.len().saturating_sub(1) {
            let id = tasks.len();
            let action = Action::between(v[t], v[t + 1]).expect("validated paths only take unit steps");
            tasks.push(ExecTask {
                id,
                robot,
                action,
                start_pos: v[t],
                end_pos: v[t + 1],
                time: t,
                status: TaskStatus::Staged,
            });
            if let Some(&prev) = chain.last() {
                intra_edges.push((prev, id));
            }
            chain.push(id);
        }
        // Runs of constant position; the task ids bracketing each run.
        let mut from = 0;
        for t in 0..v.len() {
            if t + 1 < v.len() && v[t + 1] == v[t] {
                continue;
            }
            visits.entry(v[from]).or_default().push(Visit {
                robot,
                from,
                to: t,
                enter: (from > 0).then(|| chain[from - 1]),
                leave: (t + 1 < v.len()).then(|| chain[t]),
            });
            from = t + 1;
        }
        chains.push(chain);
    }

    let mut inter_edges = Vec::new();
    let mut cells: Vec<_> = visits.into_iter().collect();
    cells.sort_unstable_by_key(|(c, _)| *c);
    for (_, mut vs) in cells {
        vs.sort_unstable_by_key(|v| (v.from, v.robot));
        for w in vs.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            debug_assert!(a.to < b.from, "collision-free plans never share a cell");
            // Collision-free goal padding means a visit that never ends is last.
            let (Some(leave), Some(enter)) = (a.leave, b.enter) else { unreachable!("inner visits are bracketed") };
            if a.robot != b.robot {
                inter_edges.push((leave, enter));
            }
        }
    }
    inter_edges.sort_unstable();

    let adg = Adg {
        tasks,
        chains,
        initial: paths.iter().map(|p| p.first().expect("non-empty path")).collect(),
        intra_edges,
        inter_edges,
    };
    topological_order(&adg)?;
    Ok(adg)
}

/// Kahn order of the task ids, or the robots of one precedence cycle.
pub fn topological_order(adg: &Adg) -> Result<Vec<usize>, AdgError> {
    let succ = adg.successors();
    let mut indeg = vec![0usize; adg.num_tasks()];
    for s in &succ {
        for &v in s {
            indeg[v] += 1;
        }
    }
    let mut ready: Vec<usize> = (0..adg.num_tasks()).filter(|&i| indeg[i] == 0).rev().collect();
    let mut order = Vec::with_capacity(adg.num_tasks());
    while let Some(u) = ready.pop() {
        order.push(u);
        for &v in &succ[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.push(v);
            }
        }
    }
    if order.len() < adg.num_tasks() {
        let cycle = find_cycle(adg, &indeg);
        let mut robots: Vec<AgentId> = cycle.iter().map(|&i| adg.tasks[i].robot).collect();
        robots.sort_unstable();
        robots.dedup();
        let time = cycle.iter().map(|&i| adg.tasks[i].time).min().unwrap_or(0);
        return Err(AdgError::Cycle { time, robots });
    }
    Ok(order)
}

/// Walk predecessors among the tasks Kahn's algorithm could not release
/// until one repeats; the repeated stretch is a cycle.
fn find_cycle(adg: &Adg, indeg: &[usize]) -> Vec<usize> {
    let preds = adg.predecessors();
    let stuck = |i: usize| indeg[i] > 0;
    let mut cur = (0..adg.num_tasks()).find(|&i| stuck(i)).expect("some task is left");
    let mut seen = HashMap::new();
    let mut walk = Vec::new();
    loop {
        if let Some(&at) = seen.get(&cur) {
            return walk[at..].to_vec();
        }
        seen.insert(cur, walk.len());
        walk.push(cur);
        cur = *preds[cur].iter().find(|&&p| stuck(p)).expect("a stuck task has a stuck predecessor");
    }
}

/// Extra execution time added to every task on top of its unit duration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DelayModel {
    Fixed { value: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel::Uniform { lo: 0.0, hi: 2.0 }
    }
}

impl DelayModel {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DelayModel::Fixed { value } => value,
            DelayModel::Uniform { lo, hi } if hi > lo => Uniform::new_inclusive(lo, hi).sample(rng),
            DelayModel::Uniform { lo, .. } => lo,
        }
    }
}

impl FromStr for DelayModel {
    type Err = String;

    /// `none`, `fixed:<v>` or `uniform:<lo>:<hi>`.
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |x: &str| -> Result<f64, String> {
            let v: f64 = x.parse().map_err(|_| format!("bad delay value `{x}`"))?;
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(format!("delay `{x}` must be finite and non-negative"))
            }
        };
        match parts.as_slice() {
            ["none"] => Ok(DelayModel::Fixed { value: 0.0 }),
            ["fixed", v] => Ok(DelayModel::Fixed { value: num(v)? }),
            ["uniform", lo, hi] => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo > hi {
                    return Err(format!("uniform delay bounds reversed: {lo} > {hi}"));
                }
                Ok(DelayModel::Uniform { lo, hi })
            }
            _ => Err(format!("unknown delay model `{s}`")),
        }
    }
}

/// A half-open stretch `[from, to)` of simulated time a robot holds a cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub robot: AgentId,
    pub cell: Cell,
    pub from: f64,
    /// `f64::INFINITY` for the cell a robot finishes in.
    pub to: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecTrace {
    pub tasks: Vec<ExecTask>,
    pub start: Vec<f64>,
    pub done: Vec<f64>,
    pub occupancy: Vec<Occupancy>,
    pub makespan: f64,
}

impl ExecTrace {
    pub fn all_done(&self) -> bool {
        self.tasks.iter().all(|t| t.status == TaskStatus::Done)
    }
}

#[derive(PartialEq)]
struct Completion(f64, usize);

impl Eq for Completion {}

impl Ord for Completion {
    // Min-heap on time, then task id.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Completion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Run the plan with every task's delay drawn from `model`.
pub fn simulate(adg: &Adg, model: &DelayModel, seed: u64) -> ExecTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with(adg, |_| model.sample(&mut rng))
}

/// Run the plan with `delay(task)` extra time for each task. Delays must be
/// finite and non-negative.
pub fn simulate_with<F: FnMut(&ExecTask) -> f64>(adg: &Adg, mut delay: F) -> ExecTrace {
    let n = adg.num_tasks();
    let succ = adg.successors();
    let mut waiting: Vec<usize> = adg.predecessors().iter().map(Vec::len).collect();
    let mut tasks = adg.tasks.clone();
    let mut start = vec![f64::NAN; n];
    let mut done = vec![f64::NAN; n];
    let mut heap = BinaryHeap::new();

    let mut enqueue = |id: usize, now: f64, tasks: &mut Vec<ExecTask>, heap: &mut BinaryHeap<Completion>| {
        debug_assert_eq!(tasks[id].status, TaskStatus::Staged);
        tasks[id].status = TaskStatus::Enqueued;
        start[id] = now;
        let d = delay(&tasks[id]);
        assert!(d.is_finite() && d >= 0.0, "task delay must be finite and non-negative, got {d}");
        heap.push(Completion(now + 1.0 + d, id));
    };
    for id in (0..n).filter(|&id| waiting[id] == 0) {
        enqueue(id, 0.0, &mut tasks, &mut heap);
    }
    let mut now = 0.0;
    while let Some(Completion(t, id)) = heap.pop() {
        now = t;
        tasks[id].status = TaskStatus::Done;
        done[id] = t;
        for &v in &succ[id] {
            waiting[v] -= 1;
            if waiting[v] == 0 {
                enqueue(v, t, &mut tasks, &mut heap);
            }
        }
    }

    let mut occupancy = Vec::new();
    for (robot, chain) in adg.chains.iter().enumerate() {
        let mut cell = adg.initial[robot];
        let mut since = 0.0;
        for &id in chain {
            let task = &tasks[id];
            if task.is_move() && task.status == TaskStatus::Done {
                occupancy.push(Occupancy { robot, cell, from: since, to: done[id] });
                cell = task.end_pos;
                since = start[id];
            }
        }
        occupancy.push(Occupancy { robot, cell, from: since, to: f64::INFINITY });
    }
    ExecTrace { tasks, start, done, occupancy, makespan: now }
}

/// First pair of occupancy intervals that share a cell at the same time.
pub fn find_overlap(occupancy: &[Occupancy]) -> Option<(Occupancy, Occupancy)> {
    let mut by_cell: HashMap<Cell, Vec<Occupancy>> = HashMap::new();
    for o in occupancy {
        by_cell.entry(o.cell).or_default().push(*o);
    }
    let mut cells: Vec<_> = by_cell.into_iter().collect();
    cells.sort_unstable_by_key(|(c, _)| *c);
    for (_, mut list) in cells {
        list.sort_unstable_by(|a, b| a.from.total_cmp(&b.from));
        let mut open: Option<Occupancy> = None;
        for o in list {
            if let Some(prev) = open {
                if o.from < prev.to && o.robot != prev.robot {
                    return Some((prev, o));
                }
                if o.to > prev.to {
                    open = Some(o);
                }
            } else {
                open = Some(o);
            }
        }
    }
    None
}

/// Aggregate of repeated simulations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub runs: usize,
    pub robots: usize,
    pub tasks: usize,
    pub inter_edges: usize,
    pub completed_runs: usize,
    pub overlap_runs: usize,
    pub planned_makespan: usize,
    pub mean_makespan: f64,
    pub max_makespan: f64,
}

/// Simulate `runs` times with seeds `seed, seed+1, ...`.
pub fn simulate_many(adg: &Adg, model: &DelayModel, runs: usize, seed: u64) -> SimSummary {
    let mut completed_runs = 0;
    let mut overlap_runs = 0;
    let mut total = 0.0;
    let mut max_makespan = 0.0f64;
    for k in 0..runs {
        let trace = simulate(adg, model, seed.wrapping_add(k as u64));
        completed_runs += usize::from(trace.all_done());
        overlap_runs += usize::from(find_overlap(&trace.occupancy).is_some());
        total += trace.makespan;
        max_makespan = max_makespan.max(trace.makespan);
    }
    SimSummary {
        runs,
        robots: adg.chains.len(),
        tasks: adg.num_tasks(),
        inter_edges: adg.inter_edges.len(),
        completed_runs,
        overlap_runs,
        planned_makespan: adg.chains.iter().map(Vec::len).max().unwrap_or(0),
        mean_makespan: if runs > 0 { total / runs as f64 } else { 0.0 },
        max_makespan,
    }
}
