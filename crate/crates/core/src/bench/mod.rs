//! Benchmark maps, scenarios and batch evaluation.

pub mod maps;
pub mod scen;
pub mod suite;
pub mod svg;

pub use maps::{gen_map, MapKind};
pub use scen::{gen_agents, gen_scen};
pub use suite::{make_tasks, run_suite, write_report, SuiteConfig, SuiteReport, SuiteTask};
