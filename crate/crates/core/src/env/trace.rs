use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{RewardTerms, StepEvents};
use crate::grid::{Action, Cell};

/// One line of an episode trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Timestep after the step.
    pub t: usize,
    pub positions: Vec<Cell>,
    pub actions: Vec<Action>,
    pub rewards: Vec<RewardTerms>,
    pub events: Vec<StepEvents>,
}

/// Writes one JSON object per line.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn write(&mut self, record: &StepRecord) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn read_trace<R: BufRead>(input: R) -> io::Result<Vec<StepRecord>> {
    input
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|l| serde_json::from_str(&l?).map_err(io::Error::from))
        .collect()
}
