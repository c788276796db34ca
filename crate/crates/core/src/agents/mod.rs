//! The heuristic agents and the bookkeeping they share.

pub mod affordance;
pub mod golovin;
pub mod nail;

use std::sync::Arc;

use crate::agent::{Agent, RandomAgent};
use crate::resources::Resources;
use crate::text::{canonical_direction, first_line, is_yes_no_question, normalize, LocationKey, OutcomeClass};

pub use affordance::AffordanceAgent;
pub use golovin::GolovinAgent;
pub use nail::NailAgent;

pub const AGENT_IDS: [&str; 4] = ["random", "golovin", "affordance", "nail"];

/// Builds one of the in-process agents by id.
pub fn create_agent(id: &str, seed: u64, res: Arc<Resources>) -> Option<Box<dyn Agent>> {
    Some(match id {
        "random" => Box::new(RandomAgent::new(seed)),
        "golovin" => Box::new(GolovinAgent::new(seed, res)),
        "affordance" => Box::new(AffordanceAgent::new(seed, res)),
        "nail" => Box::new(NailAgent::new(seed, res)),
        _ => return None,
    })
}

/// What the latest narration says about the previous command.
#[derive(Debug, Clone)]
pub(crate) struct Observation {
    pub command: Option<String>,
    pub outcome: Option<OutcomeClass>,
    pub before: Option<LocationKey>,
    pub after: Option<LocationKey>,
    /// The narration describes the current room (arrival or `look`).
    pub room_view: bool,
}

impl Observation {
    pub fn moved(&self) -> bool {
        self.room_view && self.before.is_some() && self.before != self.after
    }
}

/// Tracks the current location and judges each command's effect.
///
/// Locations are keyed by the room title (first narration line). The key
/// changes only when the location is unknown, after a movement that had an
/// effect, or after `look`. A command is judged against the description of
/// the room it was issued in.
#[derive(Debug, Clone)]
pub(crate) struct Observer {
    res: Arc<Resources>,
    extra_cues: Vec<String>,
    location: Option<LocationKey>,
    room_text: String,
    last_command: Option<String>,
}

impl Observer {
    pub fn new(res: Arc<Resources>, extra_cues: Vec<String>) -> Observer {
        Observer { res, extra_cues, location: None, room_text: String::new(), last_command: None }
    }

    pub fn location(&self) -> Option<LocationKey> {
        self.location
    }

    pub fn room_text(&self) -> &str {
        &self.room_text
    }

    pub fn classify(&self, command: &str, before: &str, after: &str) -> OutcomeClass {
        let base = self.res.text.classify_outcome(command, before, after);
        if base == OutcomeClass::Failed {
            return base;
        }
        let norm = normalize(after);
        if self.extra_cues.iter().any(|c| crate::text::contains_phrase(&norm, c)) {
            OutcomeClass::Failed
        } else {
            OutcomeClass::Succeeded
        }
    }

    pub fn observe(&mut self, narration: &str) -> Observation {
        let command = self.last_command.take();
        let outcome = command.as_deref().map(|c| self.classify(c, &self.room_text, narration));
        let before = self.location;
        let question = is_yes_no_question(narration);
        let is_move = command.as_deref().and_then(canonical_direction).is_some();
        let is_look = matches!(command.as_deref(), Some("look" | "l"));
        let room_view = !question
            && first_line(narration).is_some()
            && (self.location.is_none() || is_look || (is_move && outcome == Some(OutcomeClass::Succeeded)));
        if room_view {
            self.location = first_line(narration).map(LocationKey::of);
            self.room_text = narration.to_string();
        }
        Observation { command, outcome, before, after: self.location, room_view }
    }

    pub fn commit(&mut self, command: &str) {
        self.last_command = Some(command.to_string());
    }
}
