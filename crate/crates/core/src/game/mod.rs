//! Game sessions over scripted games and Z-machine stories.

mod score;
pub mod scripted;
mod session;

use thiserror::Error;

pub use score::{parse_score_text, ScoreReading, ScoreSource};
pub use scripted::{GameSpec, ScriptParseError, ScriptedGame};
pub use session::{GameSource, Session, SessionStatus, TranscriptEntry};

#[derive(Debug, Error)]
pub enum GameError {
    #[error("{path}: {error}")]
    Script { path: String, error: ScriptParseError },
    #[error(transparent)]
    Story(#[from] zmachine::ZError),
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}: not a .json game or .z3 story")]
    UnknownFormat(String),
    #[error("the session has finished")]
    SessionFinished,
}
