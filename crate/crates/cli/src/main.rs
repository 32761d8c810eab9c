use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lnsrl_core::adg::{build_adg, simulate_many, DelayModel};
use lnsrl_core::bench::maps::{gen_map, MapKind};
use lnsrl_core::bench::scen::{gen_agents, gen_scen, scen_entries};
use lnsrl_core::bench::suite::{make_tasks, run_suite, write_report, SuiteConfig};
use lnsrl_core::driver::{solve, DriverConfig, Mode, SolveResult};
use lnsrl_core::grid::{MapfInstance, PathSet};
use lnsrl_core::io::{instance_from_scen, read_map, read_scen, read_task, write_scen};
use lnsrl_core::policy::protocol::ActMode;
use lnsrl_core::policy::PolicySpec;

#[derive(Parser)]
#[command(name = "lnsrl", version, about = "Neighborhood-search MAPF solver with a switchable policy replanner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write the plan as JSON.
    Solve(SolveArgs),
    /// Execute a solved plan under random per-task delays.
    AdgSim(AdgArgs),
    /// Evaluate modes over a generated task family.
    Bench(BenchArgs),
    /// Write a map in movingai format.
    GenMap(GenMapArgs),
    /// Write a scenario for a map.
    GenScen(GenScenArgs),
}

#[derive(Args, Clone)]
struct DriverArgs {
    #[arg(long, default_value = "lns2")]
    mode: Mode,
    /// Wall-clock budget in seconds; 0 disables it.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long, default_value_t = 8)]
    neighborhood: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Switch queue capacity.
    #[arg(long, default_value_t = 20)]
    mu: usize,
    /// Switch threshold on the queue mean.
    #[arg(long, default_value_t = 0.3)]
    rho: f64,
    /// `scripted`, `remote:HOST:PORT` or `cmd:<argv>`.
    #[arg(long, default_value = "scripted")]
    policy: PolicySpec,
    #[arg(long, default_value = "sample")]
    act_mode: ActMode,
}

impl DriverArgs {
    fn config(&self) -> Result<DriverConfig> {
        if !(self.time_limit >= 0.0 && self.time_limit.is_finite()) {
            bail!("--time-limit must be a non-negative number of seconds");
        }
        if self.neighborhood == 0 {
            bail!("--neighborhood must be positive");
        }
        Ok(DriverConfig {
            mode: self.mode,
            time_limit: (self.time_limit > 0.0).then(|| Duration::from_secs_f64(self.time_limit)),
            max_iterations: self.max_iterations,
            neighborhood: self.neighborhood,
            seed: self.seed,
            mu: self.mu,
            rho: self.rho,
            policy: self.policy.clone(),
            act_mode: self.act_mode,
            ..Default::default()
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    /// JSON task file (`map_path` plus agents).
    #[arg(long, conflicts_with_all = ["map", "scen"])]
    task: Option<PathBuf>,
    #[arg(long, requires = "scen")]
    map: Option<PathBuf>,
    #[arg(long, requires = "map")]
    scen: Option<PathBuf>,
    /// Use only the first N scenario agents.
    #[arg(long)]
    agents: Option<usize>,
    #[command(flatten)]
    driver: DriverArgs,
    /// Result JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include the per-iteration log in the result.
    #[arg(long)]
    with_log: bool,
}

#[derive(Args)]
struct AdgArgs {
    /// Result JSON written by `solve`.
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value = "uniform:0:2")]
    delays: DelayModel,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "random")]
    family: MapKind,
    #[arg(long, default_value_t = 10)]
    size: u32,
    /// Blocked fraction for random maps.
    #[arg(long, default_value_t = 0.175)]
    obstacle_rate: f64,
    /// Agents as a fraction of free cells.
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 10)]
    tasks: usize,
    #[arg(long, value_delimiter = ',', default_value = "lns2,lns2rl")]
    modes: Vec<Mode>,
    /// Seed of the first task.
    #[arg(long, default_value_t = 0)]
    task_seed: u64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Record per-iteration CP curves.
    #[arg(long)]
    curves: bool,
    #[command(flatten)]
    driver: DriverArgs,
    #[arg(long, default_value = "report")]
    out: PathBuf,
}

#[derive(Args)]
struct GenMapArgs {
    #[arg(long)]
    kind: MapKind,
    #[arg(long, default_value_t = 25)]
    size: u32,
    #[arg(long, default_value_t = 0.175)]
    obstacle_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenScenArgs {
    #[arg(long)]
    map: PathBuf,
    /// Agents as a fraction of free cells.
    #[arg(long, conflicts_with = "agents")]
    density: Option<f64>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_instance(args: &SolveArgs) -> Result<MapfInstance> {
    if let Some(task) = &args.task {
        let inst = read_task(task).with_context(|| format!("reading {}", task.display()))?;
        return Ok(match args.agents {
            Some(k) => inst.truncated(k),
            None => inst,
        });
    }
    let (Some(map), Some(scen)) = (&args.map, &args.scen) else {
        bail!("give --task, or --map with --scen");
    };
    let grid = read_map(map).with_context(|| format!("reading {}", map.display()))?;
    let entries = read_scen(scen).with_context(|| format!("reading {}", scen.display()))?;
    Ok(instance_from_scen(grid, &entries, args.agents)?)
}

fn run_solve(args: SolveArgs) -> Result<()> {
    let inst = load_instance(&args)?;
    let cfg = args.driver.config()?;
    let mut r: SolveResult = solve(&inst, &cfg)?;
    eprintln!(
        "{} agents: solved={} cp={} soc={} iterations={} {:.2}s",
        inst.num_agents(),
        r.solved,
        r.cp,
        r.soc,
        r.iterations,
        r.runtime_secs
    );
    if !args.with_log {
        r.log.clear();
    }
    emit(args.out.as_ref(), &serde_json::to_string_pretty(&r)?)
}

fn run_adg(args: AdgArgs) -> Result<()> {
    let text = fs::read_to_string(&args.plan).with_context(|| format!("reading {}", args.plan.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let paths: PathSet = serde_json::from_value(value.get("paths").cloned().unwrap_or(value))
        .context("plan must be a solve result or a list of paths")?;
    let adg = build_adg(&paths)?;
    let summary = simulate_many(&adg, &args.delays, args.runs, args.seed);
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if summary.overlap_runs > 0 || summary.completed_runs < summary.runs {
        bail!("{} runs overlapped, {} of {} completed", summary.overlap_runs, summary.completed_runs, summary.runs);
    }
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let tasks = make_tasks(args.family, args.size, args.obstacle_rate, args.density, args.tasks, args.task_seed)?;
    let cfg = SuiteConfig {
        modes: args.modes.clone(),
        driver: args.driver.config()?,
        workers: args.workers,
        record_curves: args.curves,
    };
    let report = run_suite(&tasks, &cfg)?;
    write_report(&report, &args.out)?;
    for s in &report.summaries {
        eprintln!(
            "{:?}: SR {:.1}% ({}/{}), CP {:.2} ± {:.2}, {:.2}s mean",
            s.mode, s.success_rate, s.solved, s.tasks, s.mean_cp, s.std_cp, s.mean_runtime_secs
        );
    }
    eprintln!("report written to {}", args.out.display());
    Ok(())
}

fn run_gen_map(args: GenMapArgs) -> Result<()> {
    let map = gen_map(args.kind, args.size, args.obstacle_rate, args.seed)?;
    emit(args.out.as_ref(), map.to_movingai().trim_end())
}

fn run_gen_scen(args: GenScenArgs) -> Result<()> {
    let map = read_map(&args.map).with_context(|| format!("reading {}", args.map.display()))?;
    let inst = match (args.density, args.agents) {
        (Some(d), None) => gen_scen(&map, d, args.seed)?,
        (None, Some(k)) => gen_agents(&map, k, args.seed)?,
        _ => bail!("give exactly one of --density and --agents"),
    };
    let name = args.map.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    emit(args.out.as_ref(), write_scen(&scen_entries(&inst, &name)).trim_end())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Solve(a) => run_solve(a),
        Command::AdgSim(a) => run_adg(a),
        Command::Bench(a) => run_bench(a),
        Command::GenMap(a) => run_gen_map(a),
        Command::GenScen(a) => run_gen_scen(a),
    }
}
