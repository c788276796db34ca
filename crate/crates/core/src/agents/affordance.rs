//! Exhaustive verb/noun search ranked by affinity, with a per-location
//! memory of commands that worked.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::Observer;
use crate::agent::Agent;
use crate::lexicon::{Lexicon, DEFAULT_AFFINITY};
use crate::resources::Resources;
use crate::text::{canonical_direction, is_yes_no_question, LocationKey, OutcomeClass, DIRECTIONS};

/// Verbs per noun in one widening block.
pub const BLOCK: usize = 5;
/// Blocks consumed before a location counts as exhausted.
pub const DEFAULT_MAX_LEVELS: usize = 4;
/// `look` / `inventory` are issued every this many steps.
pub const OBSERVE_PERIOD: usize = 10;

/// Commands that worked, per location, in first-success order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SuccessMemory {
    entries: BTreeMap<LocationKey, Vec<String>>,
}

impl SuccessMemory {
    /// Records the outcome; only successes are kept, each once per key.
    pub fn record(&mut self, key: LocationKey, command: &str, outcome: OutcomeClass) {
        if outcome != OutcomeClass::Succeeded {
            return;
        }
        let list = self.entries.entry(key).or_default();
        if !list.iter().any(|c| c == command) {
            list.push(command.to_string());
        }
    }

    pub fn get(&self, key: LocationKey) -> &[String] {
        self.entries.get(&key).map_or(&[], Vec::as_slice)
    }
}

/// Position in the ranked candidate list of a location.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AttemptCursor {
    pub level: usize,
    pub position: usize,
}

/// Carried/scene combinations from the two-slot patterns, ranked by the
/// affinity of the pattern verb with the scene noun times the pattern prior.
pub fn propose_prepositional(lexicon: &Lexicon, scene: &[String], inventory: &[String]) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = Vec::new();
    for p in &lexicon.prepositional {
        for item in inventory {
            for target in scene.iter().filter(|s| *s != item) {
                let a = lexicon.affinity(target, p.verb()).unwrap_or(DEFAULT_AFFINITY);
                let cmd = p.fill(item, target);
                if !out.iter().any(|(c, _)| *c == cmd) {
                    out.push((cmd, a * p.prior));
                }
            }
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

pub struct AffordanceAgent {
    seed: u64,
    rng: ChaCha8Rng,
    res: Arc<Resources>,
    observer: Observer,
    max_levels: usize,
    steps: usize,
    seen: BTreeSet<LocationKey>,
    attempted: BTreeMap<LocationKey, BTreeSet<String>>,
    cursors: BTreeMap<LocationKey, AttemptCursor>,
    success: SuccessMemory,
    inventory: Vec<String>,
    visit: Option<LocationKey>,
    replayed: usize,
    log: Vec<Value>,
}

impl AffordanceAgent {
    pub fn new(seed: u64, res: Arc<Resources>) -> AffordanceAgent {
        AffordanceAgent {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            observer: Observer::new(res.clone(), Vec::new()),
            res,
            max_levels: DEFAULT_MAX_LEVELS,
            steps: 0,
            seen: BTreeSet::new(),
            attempted: BTreeMap::new(),
            cursors: BTreeMap::new(),
            success: SuccessMemory::default(),
            inventory: Vec::new(),
            visit: None,
            replayed: 0,
            log: Vec::new(),
        }
    }

    pub fn with_max_levels(mut self, levels: usize) -> AffordanceAgent {
        self.max_levels = levels.max(1);
        self
    }

    pub fn success_memory(&self) -> &SuccessMemory {
        &self.success
    }

    pub fn inventory(&self) -> &[String] {
        &self.inventory
    }

    /// Ranked commands for the current room: per widening level, a block of
    /// verbs for each noun; the prepositional combinations follow the first
    /// block.
    pub fn candidates(&self, scene: &[String]) -> Vec<(usize, String)> {
        let lex = &self.res.lexicon;
        let mut nouns: Vec<String> = scene.to_vec();
        for i in &self.inventory {
            if !nouns.contains(i) {
                nouns.push(i.clone());
            }
        }
        // Dropping things only undoes progress, and taking what is already
        // carried is wasted.
        let ranked: Vec<Vec<(String, f64)>> = nouns
            .iter()
            .map(|n| {
                let held = self.inventory.contains(n);
                lex.match_verbs(n, BLOCK * self.max_levels + 3)
                    .into_iter()
                    .filter(|(v, _)| v != "drop" && !(held && matches!(v.as_str(), "take" | "get")))
                    .take(BLOCK * self.max_levels)
                    .collect()
            })
            .collect();
        let mut out = Vec::new();
        for level in 0..self.max_levels {
            for (noun, verbs) in nouns.iter().zip(&ranked) {
                for (verb, _) in verbs.iter().skip(level * BLOCK).take(BLOCK) {
                    out.push((level, format!("{verb} {noun}")));
                }
            }
            if level == 0 {
                for (cmd, _) in propose_prepositional(lex, scene, &self.inventory) {
                    out.push((0, cmd));
                }
            }
        }
        out
    }

    fn note_inventory(&mut self, command: &str, narration: &str) {
        let text = &self.res.text;
        let add = |n: String, inv: &mut Vec<String>| {
            if !inv.contains(&n) {
                inv.push(n);
            }
        };
        if matches!(command, "inventory" | "i") {
            if !crate::text::normalize(narration).contains("empty-handed") {
                self.inventory = text.extract_nouns(narration);
            } else {
                self.inventory.clear();
            }
            return;
        }
        for line in narration.lines() {
            if let Some((what, rest)) = line.split_once(':') {
                if rest.trim().eq_ignore_ascii_case("taken.") {
                    if let Some(n) = what.split_whitespace().last() {
                        add(n.to_lowercase(), &mut self.inventory);
                    }
                }
            }
        }
        let mut ws = command.split_whitespace();
        if matches!(ws.next(), Some("take" | "get")) && narration.trim() == "Taken." {
            if let Some(n) = ws.last() {
                add(n.to_string(), &mut self.inventory);
            }
        }
        if command.starts_with("drop ") && narration.trim() == "Dropped." {
            if let Some(n) = command.split_whitespace().last() {
                self.inventory.retain(|i| i != n);
            }
        }
    }

    fn choose(&mut self, here: LocationKey) -> (String, &'static str) {
        if self.seen.insert(here) {
            return ("get all".into(), "new-location");
        }
        if self.steps % OBSERVE_PERIOD == 0 {
            let cmd = if (self.steps / OBSERVE_PERIOD) % 2 == 1 { "look" } else { "inventory" };
            return (cmd.into(), "periodic");
        }
        let scene = self.res.text.extract_nouns(self.observer.room_text());
        let tried = self.attempted.get(&here);
        let cands = self.candidates(&scene);
        if let Some((pos, (level, cmd))) =
            cands.into_iter().enumerate().find(|(_, (_, c))| !tried.is_some_and(|t| t.contains(c)))
        {
            self.cursors.insert(here, AttemptCursor { level, position: pos });
            return (cmd, "affordance");
        }
        // Replayed moves would leave the room and restart the replay
        // elsewhere, so exits are left to the random walk.
        let memory: Vec<&String> =
            self.success.get(here).iter().filter(|c| canonical_direction(c).is_none()).collect();
        if self.replayed < memory.len() {
            let cmd = memory[self.replayed].clone();
            self.replayed += 1;
            return (cmd, "replay");
        }
        (DIRECTIONS.choose(&mut self.rng).expect("non-empty").to_string(), "random-move")
    }
}

impl Agent for AffordanceAgent {
    fn name(&self) -> &str {
        "affordance"
    }

    fn action(&mut self, narration: &str) -> String {
        let obs = self.observer.observe(narration);
        if let (Some(cmd), Some(outcome), Some(before)) = (obs.command.as_deref(), obs.outcome, obs.before) {
            self.attempted.entry(before).or_default().insert(cmd.to_string());
            if !matches!(cmd, "look" | "inventory") {
                self.success.record(before, cmd, outcome);
            }
            self.note_inventory(cmd, narration);
        }
        if obs.after != self.visit {
            self.visit = obs.after;
            self.replayed = 0;
        }
        self.steps += 1;

        let (cmd, rule) = if is_yes_no_question(narration) {
            ("no".to_string(), "yes-no")
        } else if let Some(here) = self.observer.location() {
            self.choose(here)
        } else {
            ("look".to_string(), "orient")
        };
        self.log.push(json!({"step": self.steps, "rule": rule, "command": cmd}));
        self.observer.commit(&cmd);
        cmd
    }

    fn reset(&mut self) {
        let levels = self.max_levels;
        *self = AffordanceAgent::new(self.seed, self.res.clone()).with_max_levels(levels);
    }

    fn export_state(&self) -> Option<Value> {
        let memory: BTreeMap<String, &Vec<String>> =
            self.success.entries.iter().map(|(k, v)| (k.to_string(), v)).collect();
        let cursors: BTreeMap<String, AttemptCursor> = self.cursors.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Some(json!({"success_memory": memory, "cursors": cursors, "inventory": self.inventory}))
    }

    fn decision_log(&self) -> Vec<Value> {
        self.log.clone()
    }
}
