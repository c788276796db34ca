use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use zmachine::{MachineState, Status, StoryImage};

use super::score::{parse_score_text, ScoreReading, ScoreSource};
use super::scripted::{GameSpec, ScriptedGame};
use super::GameError;
use crate::agent::ControlAction;

/// A loaded game that sessions can be opened on.
#[derive(Debug, Clone)]
pub enum GameSource {
    Scripted { id: String, spec: Arc<GameSpec> },
    Story { id: String, story: Arc<StoryImage>, max_score: Option<i64> },
}

impl GameSource {
    /// Loads a `.json` scripted game or a `.z3` story file. The id is the
    /// file stem.
    pub fn load(path: &Path) -> Result<GameSource, GameError> {
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let io = |source| GameError::Io { path: path.display().to_string(), source };
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => {
                let text = std::fs::read_to_string(path).map_err(io)?;
                let spec = GameSpec::from_json(&text)
                    .map_err(|e| GameError::Script { path: path.display().to_string(), error: e })?;
                Ok(GameSource::Scripted { id, spec: Arc::new(spec) })
            }
            Some("z3") => {
                let bytes = std::fs::read(path).map_err(io)?;
                let story = zmachine::load_story(&bytes)?;
                Ok(GameSource::Story { id, story: Arc::new(story), max_score: None })
            }
            _ => Err(GameError::UnknownFormat(path.display().to_string())),
        }
    }

    pub fn scripted(id: impl Into<String>, spec: GameSpec) -> GameSource {
        GameSource::Scripted { id: id.into(), spec: Arc::new(spec) }
    }

    pub fn story(id: impl Into<String>, bytes: &[u8]) -> Result<GameSource, GameError> {
        Ok(GameSource::Story { id: id.into(), story: Arc::new(zmachine::load_story(bytes)?), max_score: None })
    }

    pub fn id(&self) -> &str {
        match self {
            GameSource::Scripted { id, .. } | GameSource::Story { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SessionStatus {
    Running,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptEntry {
    pub command: String,
    pub narration: String,
}

#[derive(Debug, Clone)]
struct ZBackend {
    story: Arc<StoryImage>,
    vm: MachineState,
    declared_max: Option<i64>,
    probed_max: Option<i64>,
}

impl ZBackend {
    fn boot(story: Arc<StoryImage>, seed: u64) -> (MachineState, String) {
        let mut vm = MachineState::new(story, seed);
        let mut out = String::new();
        // a fault here leaves the machine halted, which the session reports
        let _ = vm.run_into(&mut out);
        (vm, out)
    }

    /// Runs `score` on a throwaway copy of the machine.
    fn probe(&self) -> Option<(i64, i64)> {
        if self.vm.status() != Status::AwaitingInput {
            return None;
        }
        let mut copy = MachineState::new(self.story.clone(), self.vm.seed());
        copy.restore(&self.vm.snapshot());
        copy.feed_input("score").ok()?;
        let mut out = String::new();
        let _ = copy.run_into(&mut out);
        parse_score_text(&out)
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Scripted(ScriptedGame),
    Z(Box<ZBackend>),
}

/// One running game with its transcript. Entry 0 holds the opening text
/// under an empty command.
#[derive(Debug, Clone)]
pub struct Session {
    game_id: String,
    backend: Backend,
    transcript: Vec<TranscriptEntry>,
    steps: usize,
    status: SessionStatus,
    seed: u64,
}

impl Session {
    pub fn open(source: &GameSource, seed: u64) -> Session {
        let (backend, opening) = match source {
            GameSource::Scripted { spec, .. } => {
                let g = ScriptedGame::new(spec.clone());
                let text = g.opening();
                (Backend::Scripted(g), text)
            }
            GameSource::Story { story, max_score, .. } => {
                let (vm, text) = ZBackend::boot(story.clone(), seed);
                let z = ZBackend { story: story.clone(), vm, declared_max: *max_score, probed_max: None };
                (Backend::Z(Box::new(z)), text)
            }
        };
        let mut s = Session {
            game_id: source.id().to_string(),
            backend,
            transcript: vec![TranscriptEntry { command: String::new(), narration: opening }],
            steps: 0,
            status: SessionStatus::Running,
            seed,
        };
        s.refresh_status();
        s
    }

    fn refresh_status(&mut self) {
        if let Backend::Z(z) = &self.backend {
            if z.vm.status() != Status::AwaitingInput {
                self.status = SessionStatus::Finished;
            }
        }
    }

    pub fn game_id(&self) -> &str {
        &self.game_id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    pub fn last_narration(&self) -> &str {
        &self.transcript.last().expect("opening entry").narration
    }

    /// The scripted game state, for tests and tools that need ground truth.
    pub fn scripted(&self) -> Option<&ScriptedGame> {
        match &self.backend {
            Backend::Scripted(g) => Some(g),
            Backend::Z(_) => None,
        }
    }

    pub fn machine(&self) -> Option<&MachineState> {
        match &self.backend {
            Backend::Z(z) => Some(&z.vm),
            Backend::Scripted(_) => None,
        }
    }

    /// Runs one game command and returns the game's reply.
    pub fn perform(&mut self, command: &str) -> Result<String, GameError> {
        if self.status == SessionStatus::Finished {
            return Err(GameError::SessionFinished);
        }
        let reply = match &mut self.backend {
            Backend::Scripted(g) => g.perform(command),
            Backend::Z(z) => {
                z.vm.feed_input(command)?;
                let mut out = String::new();
                if let Err(e) = z.vm.run_into(&mut out) {
                    log::warn!("{}: {e}", self.game_id);
                }
                out
            }
        };
        self.steps += 1;
        self.transcript.push(TranscriptEntry { command: command.to_string(), narration: reply.clone() });
        self.refresh_status();
        Ok(reply)
    }

    /// Executes a control action. `reset_agent` is called for Restart only.
    /// Returns the narration the agent should see next.
    pub fn control(&mut self, action: ControlAction, reset_agent: impl FnOnce()) -> String {
        let narration = match action {
            ControlAction::Quit => {
                self.status = SessionStatus::Finished;
                String::new()
            }
            ControlAction::Restart | ControlAction::SoftRestart => {
                let text = self.reset_backend();
                if action == ControlAction::Restart {
                    reset_agent();
                }
                text
            }
        };
        self.steps += 1;
        self.transcript.push(TranscriptEntry { command: action.token().to_string(), narration: narration.clone() });
        narration
    }

    fn reset_backend(&mut self) -> String {
        self.status = SessionStatus::Running;
        let text = match &mut self.backend {
            Backend::Scripted(g) => {
                *g = ScriptedGame::new(g.spec().clone());
                g.opening()
            }
            Backend::Z(z) => {
                let (vm, text) = ZBackend::boot(z.story.clone(), self.seed);
                z.vm = vm;
                text
            }
        };
        self.refresh_status();
        text
    }

    /// A command line or a control token; tokens are executed as control
    /// actions.
    pub fn submit(&mut self, line: &str, reset_agent: impl FnOnce()) -> Result<String, GameError> {
        match ControlAction::from_token(line) {
            Some(action) if self.status == SessionStatus::Running => Ok(self.control(action, reset_agent)),
            Some(_) => Err(GameError::SessionFinished),
            None => self.perform(line),
        }
    }

    /// Current score without spending a game turn.
    pub fn read_score(&mut self) -> ScoreReading {
        match &mut self.backend {
            Backend::Scripted(g) => ScoreReading::new(g.score() as i64, g.max_score() as i64, ScoreSource::DirectGlobals),
            Backend::Z(z) => {
                let probe = || z.probe();
                if z.story.header().is_score_game() {
                    if z.probed_max.is_none() && z.declared_max.is_none() {
                        z.probed_max = probe().map(|(_, m)| m);
                    }
                    if let Some(max) = z.declared_max.or(z.probed_max) {
                        let score = z.vm.global(1) as i16 as i64;
                        return ScoreReading::new(score, max, ScoreSource::DirectGlobals);
                    }
                }
                match z.probe() {
                    Some((s, m)) => ScoreReading::new(s, m, ScoreSource::ParsedText),
                    None => ScoreReading::unavailable(),
                }
            }
        }
    }
}
