//! Text-adventure agents, a game host over scripted games and Z-machine
//! stories, and an evaluation harness.
//!
//! ```
//! use text_arena::{Agent, GameSource, RandomAgent, Session};
//!
//! let game = GameSource::load("../../games/tiny5.json".as_ref()).unwrap();
//! let mut session = Session::open(&game, 7);
//! let mut agent = RandomAgent::new(7);
//! let command = agent.action(session.last_narration());
//! session.perform(&command).unwrap();
//! assert_eq!(session.steps(), 1);
//! ```

pub mod agent;
pub mod agents;
pub mod bridge;
pub mod cli;
pub mod game;
pub mod harness;
pub mod lexicon;
pub mod resources;
pub mod select;
pub mod text;

pub use agent::{Agent, AgentError, ControlAction, RandomAgent, RANDOM_COMMANDS};
pub use agents::{create_agent, AffordanceAgent, GolovinAgent, NailAgent, AGENT_IDS};
pub use game::{parse_score_text, GameSource, ScoreReading, ScoreSource, Session, SessionStatus};
pub use harness::{compute_metrics, run_batch, run_episode, EvalConfig, RunRecord, Termination};
pub use resources::Resources;
pub use text::{LocationKey, OutcomeClass};

/// Candidate command weighted in `f64`.
pub type WeightedCommand = select::WeightedCommand<f64>;
/// Metrics computed in `f64`.
pub type MetricsReport = harness::MetricsReport<f64>;
/// Per-agent metrics in `f64`.
pub type AgentMetrics = harness::AgentMetrics<f64>;
