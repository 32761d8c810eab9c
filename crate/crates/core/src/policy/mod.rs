//! Policies that drive the controlled agents of a replanning episode.

pub mod protocol;
mod remote;
mod scripted;

use std::str::FromStr;

pub use remote::{RemotePolicy, ACT_TIMEOUT};
pub use scripted::{scripted_action, ScriptedPolicy};

use crate::env::{PmdoState, PmdoTask};
use crate::error::PolicyError;
use crate::features::ObservationBundle;
use crate::grid::Action;
use protocol::ActMode;

/// One episode at a time: `start`, then `act` once per timestep, then
/// `finish`. Returned actions are valid for their agents.
pub trait Policy: Send {
    fn start(&mut self, task: &PmdoTask, seed: u64) -> Result<(), PolicyError>;

    fn act(
        &mut self,
        task: &PmdoTask,
        state: &PmdoState,
        observations: &[ObservationBundle],
    ) -> Result<Vec<Action>, PolicyError>;

    fn finish(&mut self) -> Result<(), PolicyError> {
        Ok(())
    }
}

/// Where a policy comes from, as given on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicySpec {
    Scripted,
    /// `remote:HOST:PORT`
    Remote(String),
    /// `cmd:<argv>`, split on whitespace.
    Command(Vec<String>),
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "scripted" {
            Ok(PolicySpec::Scripted)
        } else if let Some(addr) = s.strip_prefix("remote:") {
            if addr.rsplit_once(':').is_none_or(|(h, p)| h.is_empty() || p.parse::<u16>().is_err()) {
                return Err(format!("expected remote:HOST:PORT, got `{s}`"));
            }
            Ok(PolicySpec::Remote(addr.to_string()))
        } else if let Some(cmd) = s.strip_prefix("cmd:") {
            let argv: Vec<String> = cmd.split_whitespace().map(String::from).collect();
            if argv.is_empty() {
                return Err("cmd: needs a program".into());
            }
            Ok(PolicySpec::Command(argv))
        } else {
            Err(format!("unknown policy `{s}` (scripted | remote:HOST:PORT | cmd:<argv>)"))
        }
    }
}

impl PolicySpec {
    pub fn connect(&self, act_mode: ActMode) -> Result<Box<dyn Policy>, PolicyError> {
        Ok(match self {
            PolicySpec::Scripted => Box::new(ScriptedPolicy),
            PolicySpec::Remote(addr) => Box::new(RemotePolicy::connect_tcp(addr, act_mode)?),
            PolicySpec::Command(argv) => Box::new(RemotePolicy::spawn(argv, act_mode)?),
        })
    }
}
