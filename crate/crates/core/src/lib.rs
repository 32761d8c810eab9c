//! Large neighborhood search for multi-agent path finding, with a learned
//! (or scripted) joint replanner alongside the prioritized one.

pub mod error;
pub mod grid;
pub mod io;
pub mod sipps;
pub mod alns;
pub mod replan;
pub mod env;
pub mod features;
pub mod policy;
pub mod driver;
pub mod adg;
pub mod bench;
