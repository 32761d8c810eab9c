use std::io::{BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::protocol::{mask_action, read_frame, write_frame, ActMode, Frame, ResetDescriptor};
use super::Policy;
use crate::env::{PmdoState, PmdoTask};
use crate::error::{PolicyError, ProtocolError};
use crate::features::ObservationBundle;
use crate::grid::Action;

/// How long the client waits for each ACT frame.
pub const ACT_TIMEOUT: Duration = Duration::from_secs(5);

type Incoming = Result<Frame, PolicyError>;

/// Client of an external policy service over TCP or a child's stdio.
///
/// A background thread reads frames so every wait can time out; once a
/// session breaks, every later call fails fast.
pub struct RemotePolicy {
    writer: Box<dyn Write + Send>,
    frames: Receiver<Incoming>,
    child: Option<Child>,
    act_mode: ActMode,
    timeout: Duration,
    session: u64,
    broken: bool,
}

fn spawn_reader<R: std::io::Read + Send + 'static>(reader: R) -> Receiver<Incoming> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut reader = BufReader::new(reader);
        loop {
            let item = match read_frame(&mut reader) {
                Ok(Some(frame)) => Ok(frame),
                Ok(None) => Err(PolicyError::Connection("policy service closed the stream".into())),
                Err(e) => Err(e),
            };
            let stop = item.is_err();
            if tx.send(item).is_err() || stop {
                return;
            }
        }
    });
    rx
}

impl RemotePolicy {
    pub fn connect_tcp(addr: &str, act_mode: ActMode) -> Result<Self, PolicyError> {
        let target = addr
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| PolicyError::Connection(format!("cannot resolve {addr}")))?;
        let stream = TcpStream::connect_timeout(&target, ACT_TIMEOUT)?;
        stream.set_nodelay(true)?;
        let frames = spawn_reader(stream.try_clone()?);
        Ok(Self::from_parts(Box::new(BufWriter::new(stream)), frames, None, act_mode))
    }

    /// Launch `argv` and talk to it over its stdin/stdout.
    pub fn spawn(argv: &[String], act_mode: ActMode) -> Result<Self, PolicyError> {
        let (prog, args) = argv.split_first().ok_or_else(|| PolicyError::Connection("empty command".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped");
        let stdout = child.stdout.take().expect("piped");
        let frames = spawn_reader(stdout);
        Ok(Self::from_parts(Box::new(BufWriter::new(stdin)), frames, Some(child), act_mode))
    }

    fn from_parts(
        writer: Box<dyn Write + Send>,
        frames: Receiver<Incoming>,
        child: Option<Child>,
        act_mode: ActMode,
    ) -> Self {
        Self { writer, frames, child, act_mode, timeout: ACT_TIMEOUT, session: 0, broken: false }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn send(&mut self, frame: &Frame) -> Result<(), PolicyError> {
        if self.broken {
            return Err(PolicyError::Connection("session already failed".into()));
        }
        write_frame(&mut self.writer, frame).map_err(|e| {
            self.broken = true;
            PolicyError::from(e)
        })
    }

    fn receive(&mut self) -> Result<Frame, PolicyError> {
        let got = match self.frames.recv_timeout(self.timeout) {
            Ok(item) => item,
            Err(RecvTimeoutError::Timeout) => Err(PolicyError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(PolicyError::Connection("reader stopped".into())),
        };
        if got.is_err() {
            self.broken = true;
        }
        got
    }
}

impl Policy for RemotePolicy {
    fn start(&mut self, task: &PmdoTask, seed: u64) -> Result<(), PolicyError> {
        self.session += 1;
        let mut d = ResetDescriptor::layout_defaults(self.session, self.act_mode, seed);
        d.map_width = task.map.width();
        d.map_height = task.map.height();
        d.num_agents = task.num_controlled();
        d.agent_ids = task.controlled.clone();
        d.episode_limit = task.config.episode_limit;
        self.send(&Frame::Reset(d))
    }

    fn act(
        &mut self,
        task: &PmdoTask,
        state: &PmdoState,
        observations: &[ObservationBundle],
    ) -> Result<Vec<Action>, PolicyError> {
        let n = task.num_controlled();
        if observations.len() != n {
            return Err(PolicyError::Arity { expected: n, got: observations.len() });
        }
        let entries = observations.iter().enumerate().map(|(i, o)| (i as u16, o.clone())).collect();
        self.send(&Frame::Obs(entries))?;
        let entries = match self.receive()? {
            Frame::Act(entries) => entries,
            Frame::Err(msg) => {
                self.broken = true;
                return Err(PolicyError::Remote(msg));
            }
            other => {
                self.broken = true;
                return Err(ProtocolError::Malformed(format!("expected ACT, got tag {}", other.tag())).into());
            }
        };
        if entries.len() != n {
            self.broken = true;
            return Err(PolicyError::Arity { expected: n, got: entries.len() });
        }
        let mut actions: Vec<Option<Action>> = vec![None; n];
        for e in entries {
            let slot = e.slot as usize;
            if slot >= n || actions[slot].is_some() {
                self.broken = true;
                return Err(ProtocolError::Malformed(format!("bad or repeated slot {slot}")).into());
            }
            let valid = task.valid_actions(state.positions[slot]);
            actions[slot] = Some(mask_action(e.action, &e.probs, &valid));
        }
        Ok(actions.into_iter().map(|a| a.expect("every slot filled")).collect())
    }

    fn finish(&mut self) -> Result<(), PolicyError> {
        self.send(&Frame::Done)
    }
}

impl Drop for RemotePolicy {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
