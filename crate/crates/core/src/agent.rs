//! The agent contract and the random baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use thiserror::Error;

/// Failures an agent can report instead of a command.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("agent did not answer within {0} ms")]
    Timeout(u64),
    #[error("agent fault: {0}")]
    Fault(String),
}

/// Turns narration into commands, one per call.
pub trait Agent: Send {
    fn name(&self) -> &str;

    /// Next command for the given narration. Must always return.
    fn action(&mut self, narration: &str) -> String;

    /// Forgets everything learned so far.
    fn reset(&mut self);

    /// Like [`Agent::action`] but lets out-of-process agents report transport
    /// failures.
    fn try_action(&mut self, narration: &str) -> Result<String, AgentError> {
        Ok(self.action(narration))
    }

    /// Internal world model as JSON, if the agent keeps one.
    fn export_state(&self) -> Option<Value> {
        None
    }

    /// One JSON object per decision, if the agent records them.
    fn decision_log(&self) -> Vec<Value> {
        Vec::new()
    }
}

impl<A: Agent + ?Sized> Agent for Box<A> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn action(&mut self, narration: &str) -> String {
        (**self).action(narration)
    }
    fn reset(&mut self) {
        (**self).reset()
    }
    fn try_action(&mut self, narration: &str) -> Result<String, AgentError> {
        (**self).try_action(narration)
    }
    fn export_state(&self) -> Option<Value> {
        (**self).export_state()
    }
    fn decision_log(&self) -> Vec<Value> {
        (**self).decision_log()
    }
}

/// Out-of-band requests an agent can make by returning the matching token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlAction {
    Quit,
    /// Restart the game and the agent.
    Restart,
    /// Restart the game only.
    SoftRestart,
}

impl ControlAction {
    pub const ALL: [ControlAction; 3] = [ControlAction::Quit, ControlAction::Restart, ControlAction::SoftRestart];

    pub fn token(self) -> &'static str {
        match self {
            ControlAction::Quit => "##QUIT##",
            ControlAction::Restart => "##RESTART##",
            ControlAction::SoftRestart => "##SOFTRESTART##",
        }
    }

    /// Exact match only; surrounding whitespace is not stripped.
    pub fn from_token(s: &str) -> Option<ControlAction> {
        ControlAction::ALL.into_iter().find(|c| c.token() == s)
    }
}

pub const RANDOM_COMMANDS: [&str; 8] = ["north", "south", "east", "west", "verbose", "take all", "yes", "no"];

/// Picks one of [`RANDOM_COMMANDS`] uniformly, ignoring the narration.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> RandomAgent {
        RandomAgent { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Agent for RandomAgent {
    fn name(&self) -> &str {
        "random"
    }

    fn action(&mut self, _narration: &str) -> String {
        RANDOM_COMMANDS[self.rng.gen_range(0..RANDOM_COMMANDS.len())].to_string()
    }

    fn reset(&mut self) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
    }
}
