//! Batch evaluation over many tasks and solver modes.

use std::fs;
use std::path::Path as FsPath;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::maps::{gen_map, MapKind};
use super::scen::gen_scen;
use super::svg::{line_chart, Series};
use crate::driver::{solve, DriverConfig, Mode};
use crate::error::BenchError;
use crate::grid::MapfInstance;

#[derive(Clone, Debug)]
pub struct SuiteTask {
    pub name: String,
    pub seed: u64,
    pub instance: MapfInstance,
}

/// `count` tasks of one family. Random layouts are redrawn per task; task
/// `i` uses seed `seed + i` for both map and agents.
pub fn make_tasks(
    kind: MapKind,
    size: u32,
    obstacle_rate: f64,
    density: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<SuiteTask>, BenchError> {
    let fixed = if kind.is_random() { None } else { Some(gen_map(kind, size, obstacle_rate, seed)?) };
    (0..count)
        .map(|i| {
            let s = seed.wrapping_add(i as u64);
            let map = match &fixed {
                Some(m) => m.clone(),
                None => gen_map(kind, size, obstacle_rate, s)?,
            };
            Ok(SuiteTask { name: format!("{kind}-{size}-{i}"), seed: s, instance: gen_scen(&map, density, s)? })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub modes: Vec<Mode>,
    /// Driver settings shared by every run; `mode` and `seed` are overridden.
    pub driver: DriverConfig,
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
    pub record_curves: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: String,
    pub mode: Mode,
    pub agents: usize,
    pub solved: bool,
    /// `None` when no initial plan could be built.
    pub cp: Option<usize>,
    pub soc: Option<usize>,
    pub initial_cp: Option<usize>,
    pub iterations: usize,
    pub switch_iteration: Option<usize>,
    pub runtime_secs: f64,
    pub error: Option<String>,
    /// Incumbent CP before the first and after every iteration.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub curve: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: Mode,
    pub tasks: usize,
    pub solved: usize,
    /// Percentage of tasks solved.
    pub success_rate: f64,
    /// Mean SoC over solved tasks only.
    pub mean_soc: Option<f64>,
    /// Remaining CP over tasks that produced a plan.
    pub mean_cp: f64,
    pub std_cp: f64,
    pub mean_runtime_secs: f64,
    pub errors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub summaries: Vec<ModeSummary>,
    pub results: Vec<TaskResult>,
}

fn run_one(task: &SuiteTask, mode: Mode, cfg: &SuiteConfig) -> TaskResult {
    let driver = DriverConfig { mode, seed: cfg.driver.seed.wrapping_add(task.seed), ..cfg.driver.clone() };
    match solve(&task.instance, &driver) {
        Ok(r) => {
            let curve = if cfg.record_curves {
                std::iter::once(r.initial_cp).chain(r.log.iter().map(|l| l.cp_after)).collect()
            } else {
                Vec::new()
            };
            TaskResult {
                task: task.name.clone(),
                mode,
                agents: task.instance.num_agents(),
                solved: r.solved,
                cp: Some(r.cp),
                soc: Some(r.soc),
                initial_cp: Some(r.initial_cp),
                iterations: r.iterations,
                switch_iteration: r.switch_iteration,
                runtime_secs: r.runtime_secs,
                error: None,
                curve,
            }
        }
        Err(e) => TaskResult {
            task: task.name.clone(),
            mode,
            agents: task.instance.num_agents(),
            solved: false,
            cp: None,
            soc: None,
            initial_cp: None,
            iterations: 0,
            switch_iteration: None,
            runtime_secs: 0.0,
            error: Some(e.to_string()),
            curve: Vec::new(),
        },
    }
}

/// Aggregate the results of one mode.
pub fn summarize(mode: Mode, results: &[&TaskResult]) -> ModeSummary {
    let n = results.len();
    let solved = results.iter().filter(|r| r.solved).count();
    let socs: Vec<f64> = results.iter().filter(|r| r.solved).filter_map(|r| r.soc).map(|s| s as f64).collect();
    let cps: Vec<f64> = results.iter().filter_map(|r| r.cp).map(|c| c as f64).collect();
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let mean_cp = mean(&cps);
    let var = if cps.is_empty() { 0.0 } else { cps.iter().map(|c| (c - mean_cp).powi(2)).sum::<f64>() / cps.len() as f64 };
    let runtimes: Vec<f64> = results.iter().map(|r| r.runtime_secs).collect();
    ModeSummary {
        mode,
        tasks: n,
        solved,
        success_rate: if n == 0 { 0.0 } else { 100.0 * solved as f64 / n as f64 },
        mean_soc: (!socs.is_empty()).then(|| mean(&socs)),
        mean_cp,
        std_cp: var.sqrt(),
        mean_runtime_secs: mean(&runtimes),
        errors: results.iter().filter(|r| r.error.is_some()).count(),
    }
}

/// Run every task under every mode. A failing run is recorded, never fatal.
pub fn run_suite(tasks: &[SuiteTask], cfg: &SuiteConfig) -> Result<SuiteReport, BenchError> {
    let jobs: Vec<(usize, Mode)> = cfg.modes.iter().flat_map(|&m| (0..tasks.len()).map(move |i| (i, m))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| BenchError::Io(std::io::Error::other(e)))?;
    let results: Vec<TaskResult> = pool.install(|| jobs.par_iter().map(|&(i, m)| run_one(&tasks[i], m, cfg)).collect());
    let summaries = cfg
        .modes
        .iter()
        .map(|&m| summarize(m, &results.iter().filter(|r| r.mode == m).collect::<Vec<_>>()))
        .collect();
    Ok(SuiteReport { summaries, results })
}

/// Mean incumbent CP per iteration; finished runs hold their last value.
pub fn mean_curve(results: &[&TaskResult]) -> Vec<f64> {
    let curves: Vec<&Vec<usize>> = results.iter().map(|r| &r.curve).filter(|c| !c.is_empty()).collect();
    let len = curves.iter().map(|c| c.len()).max().unwrap_or(0);
    (0..len)
        .map(|t| {
            let s: usize = curves.iter().map(|c| c[t.min(c.len() - 1)]).sum();
            s as f64 / curves.len() as f64
        })
        .collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write `results.csv`, `summary.csv`, `report.json` and, when curves were
/// recorded, `curves.csv` and `cp_curves.svg` into `dir`.
pub fn write_report(report: &SuiteReport, dir: &FsPath) -> Result<(), BenchError> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("results.csv")).map_err(csv_err)?;
    w.write_record([
        "task", "mode", "agents", "solved", "cp", "soc", "initial_cp", "iterations", "switch_iteration", "runtime_secs",
        "error",
    ])
    .map_err(csv_err)?;
    for r in &report.results {
        w.write_record([
            r.task.clone(),
            mode_name(r.mode).to_string(),
            r.agents.to_string(),
            r.solved.to_string(),
            opt(r.cp),
            opt(r.soc),
            opt(r.initial_cp),
            r.iterations.to_string(),
            opt(r.switch_iteration),
            format!("{:.3}", r.runtime_secs),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("summary.csv")).map_err(csv_err)?;
    w.write_record(["mode", "tasks", "solved", "success_rate", "mean_soc", "mean_cp", "std_cp", "mean_runtime_secs", "errors"])
        .map_err(csv_err)?;
    for s in &report.summaries {
        w.write_record([
            mode_name(s.mode).to_string(),
            s.tasks.to_string(),
            s.solved.to_string(),
            format!("{:.2}", s.success_rate),
            s.mean_soc.map(|v| format!("{v:.2}")).unwrap_or_default(),
            format!("{:.3}", s.mean_cp),
            format!("{:.3}", s.std_cp),
            format!("{:.3}", s.mean_runtime_secs),
            s.errors.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;

    if report.results.iter().any(|r| !r.curve.is_empty()) {
        let mut w = csv::Writer::from_path(dir.join("curves.csv")).map_err(csv_err)?;
        w.write_record(["mode", "iteration", "mean_cp"]).map_err(csv_err)?;
        let mut curves = Vec::new();
        for s in &report.summaries {
            let c = mean_curve(&report.results.iter().filter(|r| r.mode == s.mode).collect::<Vec<_>>());
            for (i, v) in c.iter().enumerate() {
                w.write_record([mode_name(s.mode).to_string(), i.to_string(), format!("{v:.4}")]).map_err(csv_err)?;
            }
            curves.push((s.mode, c));
        }
        w.flush()?;
        let series: Vec<Series> = curves.iter().map(|(m, c)| Series { name: mode_name(*m), values: c }).collect();
        fs::write(dir.join("cp_curves.svg"), line_chart("Remaining collision pairs", "iteration", "mean CP", &series))?;
    }
    Ok(())
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Lns2 => "lns2",
        Mode::Lns2Rl => "lns2rl",
    }
}

fn csv_err(e: csv::Error) -> BenchError {
    BenchError::Io(std::io::Error::other(e))
}
