//! One agent playing one game for a fixed number of steps.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agent::{Agent, AgentError, ControlAction};
use crate::game::{GameSource, ScoreReading, Session, SessionStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Termination {
    BudgetExhausted,
    GameFinished,
    AgentTimeout,
    AgentFault,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub agent: String,
    pub game: String,
    pub run: usize,
    pub seed: u64,
    pub score: i64,
    pub max_score: i64,
    pub steps: usize,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
}

/// One transcript line. Step 0 is the opening narration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub step: usize,
    pub command: String,
    pub narration: String,
    pub score: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct EpisodeOptions {
    pub steps: usize,
    pub step_limit: Duration,
    /// Read the score after every step, not only at the end.
    pub poll_score: bool,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        EpisodeOptions { steps: 1000, step_limit: Duration::from_millis(1000), poll_score: false }
    }
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub record: RunRecord,
    pub transcript: Vec<TranscriptLine>,
    pub agent_state: Option<Value>,
    pub decision_log: Vec<Value>,
}

enum Request {
    Act(String),
    Reset,
    Finish,
}

enum Reply {
    Command(Result<String, AgentError>),
    ResetDone,
    Finished(Option<Value>, Vec<Value>),
}

/// Runs the agent on its own thread so a slow or panicking agent cannot
/// take the episode down with it.
struct Worker {
    tx: Sender<Request>,
    rx: Receiver<Reply>,
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

impl Worker {
    fn spawn(mut agent: Box<dyn Agent>) -> Worker {
        let (tx, req_rx) = mpsc::channel::<Request>();
        let (reply_tx, rx) = mpsc::channel::<Reply>();
        thread::spawn(move || {
            for req in req_rx {
                let reply = match req {
                    Request::Act(n) => Reply::Command(
                        catch_unwind(AssertUnwindSafe(|| agent.try_action(&n)))
                            .unwrap_or_else(|p| Err(AgentError::Fault(panic_message(p)))),
                    ),
                    Request::Reset => match catch_unwind(AssertUnwindSafe(|| agent.reset())) {
                        Ok(()) => Reply::ResetDone,
                        Err(p) => Reply::Command(Err(AgentError::Fault(panic_message(p)))),
                    },
                    Request::Finish => Reply::Finished(agent.export_state(), agent.decision_log()),
                };
                if reply_tx.send(reply).is_err() {
                    break;
                }
            }
        });
        Worker { tx, rx }
    }

    fn call(&self, req: Request, limit: Duration) -> Result<Reply, AgentError> {
        self.tx.send(req).map_err(|_| AgentError::Fault("agent thread is gone".into()))?;
        match self.rx.recv_timeout(limit) {
            Ok(r) => Ok(r),
            Err(RecvTimeoutError::Timeout) => Err(AgentError::Timeout(limit.as_millis() as u64)),
            Err(RecvTimeoutError::Disconnected) => Err(AgentError::Fault("agent thread is gone".into())),
        }
    }

    fn act(&self, narration: &str, limit: Duration) -> Result<String, AgentError> {
        match self.call(Request::Act(narration.to_string()), limit)? {
            Reply::Command(r) => r,
            _ => Err(AgentError::Fault("unexpected reply".into())),
        }
    }

    fn reset(&self, limit: Duration) -> Result<(), AgentError> {
        match self.call(Request::Reset, limit)? {
            Reply::ResetDone => Ok(()),
            Reply::Command(Err(e)) => Err(e),
            _ => Err(AgentError::Fault("unexpected reply".into())),
        }
    }

    fn finish(&self, limit: Duration) -> (Option<Value>, Vec<Value>) {
        match self.call(Request::Finish, limit) {
            Ok(Reply::Finished(state, log)) => (state, log),
            _ => (None, Vec::new()),
        }
    }
}

fn score_of(r: &ScoreReading) -> i64 {
    r.score.unwrap_or(0)
}

/// Plays `agent` on `game` for up to `opts.steps` agent calls.
///
/// Control tokens returned by the agent are executed and count as steps.
/// A timeout or a panic ends the episode with the score reached so far.
pub fn run_episode(
    agent: Box<dyn Agent>,
    agent_id: &str,
    game: &GameSource,
    run: usize,
    seed: u64,
    opts: &EpisodeOptions,
) -> Episode {
    let mut session = Session::open(game, seed);
    let worker = Worker::spawn(agent);
    let mut transcript = vec![TranscriptLine {
        step: 0,
        command: String::new(),
        narration: session.last_narration().to_string(),
        score: opts.poll_score.then(|| score_of(&session.read_score())),
    }];
    let mut narration = session.last_narration().to_string();
    let mut termination = Termination::BudgetExhausted;

    for step in 1..=opts.steps {
        if session.status() == SessionStatus::Finished {
            termination = Termination::GameFinished;
            break;
        }
        let command = match worker.act(&narration, opts.step_limit) {
            Ok(c) => c,
            Err(AgentError::Timeout(_)) => {
                termination = Termination::AgentTimeout;
                break;
            }
            Err(AgentError::Fault(msg)) => {
                log::warn!("{agent_id} on {}: {msg}", game.id());
                termination = Termination::AgentFault;
                break;
            }
        };
        let mut restart = false;
        let reply = match ControlAction::from_token(&command) {
            Some(action) => session.control(action, || restart = true),
            None => session.perform(&command).expect("session is running"),
        };
        if restart {
            match worker.reset(opts.step_limit) {
                Ok(()) => {}
                Err(AgentError::Timeout(_)) => termination = Termination::AgentTimeout,
                Err(AgentError::Fault(_)) => termination = Termination::AgentFault,
            }
        }
        transcript.push(TranscriptLine {
            step,
            command,
            narration: reply.clone(),
            score: opts.poll_score.then(|| score_of(&session.read_score())),
        });
        narration = reply;
        if termination != Termination::BudgetExhausted {
            break;
        }
    }
    if termination == Termination::BudgetExhausted && session.status() == SessionStatus::Finished {
        termination = Termination::GameFinished;
    }

    let reading = session.read_score();
    if let Some(last) = transcript.last_mut() {
        last.score = Some(score_of(&reading));
    }
    let (agent_state, decision_log) = match termination {
        Termination::AgentTimeout | Termination::AgentFault => (None, Vec::new()),
        _ => worker.finish(opts.step_limit.max(Duration::from_secs(5))),
    };
    Episode {
        record: RunRecord {
            agent: agent_id.to_string(),
            game: game.id().to_string(),
            run,
            seed,
            score: score_of(&reading),
            max_score: reading.max.unwrap_or(0),
            steps: session.steps(),
            termination,
            transcript: None,
        },
        transcript,
        agent_state,
        decision_log,
    }
}
