//! Host side of the line protocol for agents running as child processes.
//!
//! The host writes each narration as a block of lines closed by
//! [`OBS_END`] and reads back exactly one command line. See
//! `docs/io-protocol.md`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use thiserror::Error;

use crate::agent::{Agent, AgentError, ControlAction};

pub const HELLO: &str = "###HELLO v1###";
pub const READY: &str = "###READY###";
pub const OBS_END: &str = "###OBS_END###";

/// Handshakes get at least this long, since interpreters can be slow to
/// start.
const MIN_HANDSHAKE: Duration = Duration::from_secs(5);

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("no reply within {0:?}")]
    Timeout(Duration),
    #[error("the agent process has exited")]
    ChildDead,
    #[error("handshake failed: {0}")]
    HandshakeFailed(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("spawning agent process: {0}")]
    Spawn(std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireState {
    Idle,
    AwaitingCommand,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    Command(String),
    Control(ControlAction),
}

/// Adds one backslash to lines that would otherwise read as the sentinel.
pub fn escape_line(line: &str) -> String {
    if line.trim_start_matches('\\') == OBS_END {
        format!("\\{line}")
    } else {
        line.to_string()
    }
}

/// Inverse of [`escape_line`].
pub fn unescape_line(line: &str) -> &str {
    if line.starts_with('\\') && line.trim_start_matches('\\') == OBS_END {
        &line[1..]
    } else {
        line
    }
}

/// The lines sent for one narration, sentinel included. One trailing
/// newline is dropped first, so empty narration sends only the sentinel.
pub fn encode_observation(narration: &str) -> String {
    let body = narration.strip_suffix('\n').unwrap_or(narration);
    let mut out = String::new();
    if !body.is_empty() {
        for line in body.split('\n') {
            out.push_str(&escape_line(line));
            out.push('\n');
        }
    }
    out.push_str(OBS_END);
    out.push('\n');
    out
}

/// Reassembles a narration from the lines of one block, sentinel excluded.
pub fn decode_observation<'a>(lines: impl IntoIterator<Item = &'a str>) -> String {
    lines.into_iter().map(unescape_line).collect::<Vec<_>>().join("\n")
}

/// A running child and the protocol state.
pub struct WireSession {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
    state: WireState,
    deadline: Duration,
}

impl WireSession {
    /// Spawns `command` with piped stdio and performs the handshake.
    pub fn spawn(mut command: Command, deadline: Duration) -> Result<WireSession, BridgeError> {
        let mut child = command
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(BridgeError::Spawn)?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut ws = WireSession { child, stdin, lines, state: WireState::Idle, deadline };
        ws.write(&format!("{HELLO}\n")).map_err(|_| BridgeError::HandshakeFailed("child closed its input".into()))?;
        match ws.read_line(deadline.max(MIN_HANDSHAKE)) {
            Ok(l) if l == READY => Ok(ws),
            Ok(l) => Err(BridgeError::HandshakeFailed(format!("expected {READY}, got {l:?}"))),
            Err(e) => Err(BridgeError::HandshakeFailed(e.to_string())),
        }
    }

    /// `sh -c <command line>` with `TEXT_ARENA_SEED` set.
    pub fn spawn_shell(command_line: &str, seed: u64, deadline: Duration) -> Result<WireSession, BridgeError> {
        let mut cmd = Command::new("sh");
        cmd.arg("-c").arg(command_line).env("TEXT_ARENA_SEED", seed.to_string());
        WireSession::spawn(cmd, deadline)
    }

    pub fn state(&self) -> WireState {
        self.state
    }

    pub fn pid(&self) -> u32 {
        self.child.id()
    }

    fn write(&mut self, data: &str) -> Result<(), BridgeError> {
        if matches!(self.child.try_wait(), Ok(Some(_))) {
            return Err(BridgeError::ChildDead);
        }
        let stdin = self.stdin.as_mut().ok_or(BridgeError::ChildDead)?;
        stdin.write_all(data.as_bytes()).and_then(|_| stdin.flush()).map_err(|_| BridgeError::ChildDead)
    }

    fn read_line(&mut self, timeout: Duration) -> Result<String, BridgeError> {
        match self.lines.recv_timeout(timeout) {
            Ok(mut l) => {
                if l.ends_with('\r') {
                    l.pop();
                }
                Ok(l)
            }
            Err(RecvTimeoutError::Timeout) => Err(BridgeError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(BridgeError::ChildDead),
        }
    }

    pub fn send_observation(&mut self, narration: &str) -> Result<(), BridgeError> {
        if self.state != WireState::Idle {
            return Err(BridgeError::Protocol("observation sent while a command is outstanding".into()));
        }
        self.write(&encode_observation(narration))?;
        self.state = WireState::AwaitingCommand;
        Ok(())
    }

    pub fn receive_command(&mut self) -> Result<Reply, BridgeError> {
        if self.state != WireState::AwaitingCommand {
            return Err(BridgeError::Protocol("no observation outstanding".into()));
        }
        let line = self.read_line(self.deadline)?;
        self.state = WireState::Idle;
        Ok(match ControlAction::from_token(&line) {
            Some(c) => Reply::Control(c),
            None => Reply::Command(line),
        })
    }

    /// Closes the child's input, then kills it if it has not exited within
    /// `grace`, and reaps it.
    pub fn shutdown(&mut self, grace: Duration) {
        self.stdin.take();
        let step = Duration::from_millis(10);
        let mut waited = Duration::ZERO;
        while waited < grace {
            if matches!(self.child.try_wait(), Ok(Some(_))) {
                return;
            }
            thread::sleep(step);
            waited += step;
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for WireSession {
    fn drop(&mut self) {
        self.shutdown(Duration::from_millis(200));
    }
}

/// An [`Agent`] backed by a child process. The child is started on first
/// use and restarted on [`Agent::reset`].
pub struct ExternalAgent {
    name: String,
    command: String,
    seed: u64,
    deadline: Duration,
    wire: Option<WireSession>,
}

impl ExternalAgent {
    pub fn new(name: &str, command: &str, seed: u64, deadline: Duration) -> ExternalAgent {
        ExternalAgent { name: name.to_string(), command: command.to_string(), seed, deadline, wire: None }
    }

    fn exchange(&mut self, narration: &str) -> Result<Reply, BridgeError> {
        if self.wire.is_none() {
            self.wire = Some(WireSession::spawn_shell(&self.command, self.seed, self.deadline)?);
        }
        let wire = self.wire.as_mut().expect("spawned above");
        wire.send_observation(narration)?;
        wire.receive_command()
    }
}

impl Agent for ExternalAgent {
    fn name(&self) -> &str {
        &self.name
    }

    /// A child that cannot answer quits the game.
    fn action(&mut self, narration: &str) -> String {
        self.try_action(narration).unwrap_or_else(|_| ControlAction::Quit.token().to_string())
    }

    fn try_action(&mut self, narration: &str) -> Result<String, AgentError> {
        match self.exchange(narration) {
            Ok(Reply::Command(c)) => Ok(c),
            Ok(Reply::Control(c)) => Ok(c.token().to_string()),
            Err(BridgeError::Timeout(d)) => Err(AgentError::Timeout(d.as_millis() as u64)),
            Err(e) => Err(AgentError::Fault(e.to_string())),
        }
    }

    fn reset(&mut self) {
        self.wire = None;
    }
}
