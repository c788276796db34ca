//! JSON-described text adventures used as deterministic test games.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::text::{canonical_direction, DIRECTIONS};

/// A problem in a game description, located by line/column for syntax
/// errors or by field path for semantic ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptParseError {
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub path: Option<String>,
}

impl fmt::Display for ScriptParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.path, self.line, self.column) {
            (Some(p), _, _) => write!(f, "{p}: {}", self.message),
            (None, Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ScriptParseError {}

fn at(path: impl Into<String>, message: impl Into<String>) -> ScriptParseError {
    ScriptParseError { message: message.into(), line: None, column: None, path: Some(path.into()) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSpec {
    pub id: String,
    pub desc: String,
    #[serde(default)]
    pub exits: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: String,
    pub name: String,
    pub room: String,
    pub takeable: bool,
    pub points: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub desc: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreEventSpec {
    pub command: String,
    pub room: String,
    pub points: u32,
    /// Object ids that must be carried.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub requires: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub title: String,
    pub rooms: Vec<RoomSpec>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub score_events: Vec<ScoreEventSpec>,
    pub max_score: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preamble_prompt: Option<String>,
    /// Starting room id; the first room when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace()
        .map(|w| w.trim_matches(|c: char| c.is_ascii_punctuation() && c != '-'))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl GameSpec {
    pub fn from_json(text: &str) -> Result<GameSpec, ScriptParseError> {
        let spec: GameSpec = serde_json::from_str(text).map_err(|e| ScriptParseError {
            message: e.to_string(),
            line: Some(e.line()),
            column: Some(e.column()),
            path: None,
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ScriptParseError> {
        if self.rooms.is_empty() {
            return Err(at("rooms", "at least one room is required"));
        }
        let mut room_ids = BTreeSet::new();
        for (i, r) in self.rooms.iter().enumerate() {
            if r.id.is_empty() || !room_ids.insert(r.id.as_str()) {
                return Err(at(format!("rooms[{i}].id"), format!("empty or duplicate room id {:?}", r.id)));
            }
        }
        for (i, r) in self.rooms.iter().enumerate() {
            if r.desc.trim().is_empty() {
                return Err(at(format!("rooms[{i}].desc"), "description is empty"));
            }
            for (dir, to) in &r.exits {
                if !DIRECTIONS.contains(&dir.as_str()) {
                    return Err(at(format!("rooms[{i}].exits.{dir}"), format!("unknown direction {dir:?}")));
                }
                if !room_ids.contains(to.as_str()) {
                    return Err(at(format!("rooms[{i}].exits.{dir}"), format!("unknown room {to:?}")));
                }
            }
        }
        if let Some(s) = &self.start {
            if !room_ids.contains(s.as_str()) {
                return Err(at("start", format!("unknown room {s:?}")));
            }
        }
        let mut object_ids = BTreeSet::new();
        for (i, o) in self.objects.iter().enumerate() {
            let p = |f: &str| format!("objects[{i}].{f}");
            if o.id.is_empty() || !object_ids.insert(o.id.as_str()) {
                return Err(at(p("id"), format!("empty or duplicate object id {:?}", o.id)));
            }
            if words(&o.name).is_empty() {
                return Err(at(p("name"), "name is empty"));
            }
            if !room_ids.contains(o.room.as_str()) {
                return Err(at(p("room"), format!("unknown room {:?}", o.room)));
            }
            if !o.takeable && o.points > 0 {
                return Err(at(p("points"), "points on an object that cannot be taken are unreachable"));
            }
        }
        let mut seen = BTreeSet::new();
        for (i, e) in self.score_events.iter().enumerate() {
            let p = |f: &str| format!("score_events[{i}].{f}");
            if words(&e.command).is_empty() {
                return Err(at(p("command"), "command is empty"));
            }
            let Some(room) = self.rooms.iter().find(|r| r.id == e.room) else {
                return Err(at(p("room"), format!("unknown room {:?}", e.room)));
            };
            if e.points == 0 {
                return Err(at(p("points"), "score events must award at least one point"));
            }
            if let Some(dir) = canonical_direction(&e.command) {
                if !room.exits.contains_key(dir) {
                    return Err(at(p("command"), format!("room {:?} has no {dir} exit", e.room)));
                }
            }
            for (j, r) in e.requires.iter().enumerate() {
                let ok = self.objects.iter().any(|o| &o.id == r && o.takeable);
                if !ok {
                    return Err(at(format!("score_events[{i}].requires[{j}]"), format!("no takeable object {r:?}")));
                }
            }
            if !seen.insert((self.canonical(&e.command), e.room.clone())) {
                return Err(at(p("command"), "duplicate event for this room"));
            }
        }
        let total: u64 = self.objects.iter().map(|o| o.points as u64).sum::<u64>()
            + self.score_events.iter().map(|e| e.points as u64).sum::<u64>();
        if total != self.max_score as u64 {
            return Err(at("max_score", format!("declared {} but awardable points sum to {total}", self.max_score)));
        }
        Ok(())
    }

    pub fn start_index(&self) -> usize {
        self.start
            .as_ref()
            .and_then(|s| self.rooms.iter().position(|r| &r.id == s))
            .unwrap_or(0)
    }

    pub fn room_index(&self, id: &str) -> Option<usize> {
        self.rooms.iter().position(|r| r.id == id)
    }

    /// Object id named by a word sequence: the full name, its last word, or
    /// the id itself.
    fn object_for(&self, ws: &[String]) -> Option<usize> {
        let joined = ws.join(" ");
        self.objects.iter().position(|o| words(&o.name).join(" ") == joined || o.id == joined).or_else(|| {
            if ws.len() == 1 {
                self.objects.iter().position(|o| words(&o.name).last() == Some(&ws[0]))
            } else {
                None
            }
        })
    }

    /// Command with verb aliases expanded, articles dropped and object
    /// references replaced by ids, so "get the iron key" and "take key"
    /// compare equal.
    pub fn canonical(&self, command: &str) -> String {
        let mut ws: Vec<String> = words(command).into_iter().filter(|w| !matches!(w.as_str(), "the" | "a" | "an")).collect();
        if let Some(d) = canonical_direction(&ws.join(" ")) {
            return d.to_string();
        }
        if let Some(first) = ws.first_mut() {
            let alias = match first.as_str() {
                "get" => "take",
                "x" => "examine",
                "l" => "look",
                "i" | "inv" => "inventory",
                "z" => "wait",
                _ => "",
            };
            if !alias.is_empty() {
                *first = alias.to_string();
            }
        }
        let mut out = Vec::new();
        let mut i = 0;
        'outer: while i < ws.len() {
            for len in (1..=ws.len() - i).rev() {
                if let Some(o) = self.object_for(&ws[i..i + len]) {
                    // the verb position is never an object
                    if i > 0 {
                        out.push(self.objects[o].id.clone());
                        i += len;
                        continue 'outer;
                    }
                }
            }
            out.push(ws[i].clone());
            i += 1;
        }
        out.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Place {
    Room(usize),
    Carried,
}

/// Runtime state of a scripted game.
#[derive(Debug, Clone)]
pub struct ScriptedGame {
    spec: Arc<GameSpec>,
    room: usize,
    places: Vec<Place>,
    scored_objects: BTreeSet<usize>,
    fired: BTreeSet<usize>,
    score: u32,
    turns: u32,
    in_preamble: bool,
}

impl ScriptedGame {
    pub fn new(spec: Arc<GameSpec>) -> ScriptedGame {
        let places = spec
            .objects
            .iter()
            .map(|o| Place::Room(spec.room_index(&o.room).expect("validated")))
            .collect();
        ScriptedGame {
            room: spec.start_index(),
            in_preamble: spec.preamble_prompt.is_some(),
            places,
            scored_objects: BTreeSet::new(),
            fired: BTreeSet::new(),
            score: 0,
            turns: 0,
            spec,
        }
    }

    pub fn spec(&self) -> &Arc<GameSpec> {
        &self.spec
    }

    pub fn score(&self) -> u32 {
        self.score
    }

    pub fn max_score(&self) -> u32 {
        self.spec.max_score
    }

    pub fn turns(&self) -> u32 {
        self.turns
    }

    pub fn current_room(&self) -> &str {
        &self.spec.rooms[self.room].id
    }

    pub fn carried(&self) -> Vec<&str> {
        self.objects_where(Place::Carried).map(|i| self.spec.objects[i].id.as_str()).collect()
    }

    /// Text shown before the first command.
    pub fn opening(&self) -> String {
        match &self.spec.preamble_prompt {
            Some(p) if self.in_preamble => p.clone(),
            _ => self.describe(),
        }
    }

    fn objects_where(&self, place: Place) -> impl Iterator<Item = usize> + '_ {
        self.places.iter().enumerate().filter(move |(_, p)| **p == place).map(|(i, _)| i)
    }

    fn describe(&self) -> String {
        let mut s = self.spec.rooms[self.room].desc.trim_end().to_string();
        s.push('\n');
        for i in self.objects_where(Place::Room(self.room)) {
            let name = &self.spec.objects[i].name;
            let article = if name.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" };
            s.push_str(&format!("There is {article} {name} here.\n"));
        }
        s
    }

    fn visible(&self, obj: usize) -> bool {
        matches!(self.places[obj], Place::Carried) || self.places[obj] == Place::Room(self.room)
    }

    fn resolve(&self, ws: &[String]) -> Option<usize> {
        if ws.is_empty() {
            return None;
        }
        let id = ws.join(" ");
        self.spec.objects.iter().position(|o| o.id == id)
    }

    fn take(&mut self, obj: usize) -> String {
        let o = &self.spec.objects[obj];
        if self.places[obj] == Place::Carried {
            return "You already have that.".into();
        }
        if !o.takeable {
            return "You can't take that.".into();
        }
        self.places[obj] = Place::Carried;
        if o.points > 0 && self.scored_objects.insert(obj) {
            self.score += o.points;
        }
        "Taken.".into()
    }

    /// Applies one command and returns the response.
    pub fn perform(&mut self, command: &str) -> String {
        self.turns += 1;
        let raw = words(command);
        if self.in_preamble {
            return match raw.join(" ").as_str() {
                "no" | "n" => {
                    self.in_preamble = false;
                    self.describe()
                }
                "yes" | "y" => {
                    self.in_preamble = false;
                    format!("No saved game found.\n\n{}", self.describe())
                }
                _ => "Please answer yes or no.".into(),
            };
        }
        let canon = self.spec.canonical(command);
        let ws: Vec<String> = canon.split_whitespace().map(String::from).collect();

        if let Some(dir) = canonical_direction(&canon) {
            let origin = self.room;
            let Some(to) = self.spec.rooms[origin].exits.get(dir) else {
                return "You can't go that way.".into();
            };
            self.room = self.spec.room_index(to).expect("validated");
            let mut out = self.describe();
            if let Some(resp) = self.fire_event(dir, origin) {
                out.push_str(&resp);
                out.push('\n');
            }
            return out;
        }
        if let Some(resp) = self.fire_event(&canon, self.room) {
            return resp;
        }

        let verb = ws.first().map(String::as_str).unwrap_or("");
        let rest = if ws.is_empty() { &[][..] } else { &ws[1..] };
        match (verb, rest.len()) {
            ("", _) => "I beg your pardon?".into(),
            ("look", 0) => self.describe(),
            ("inventory", 0) => {
                let carried: Vec<usize> = self.objects_where(Place::Carried).collect();
                if carried.is_empty() {
                    "You are empty-handed.".into()
                } else {
                    let mut s = String::from("You are carrying:\n");
                    for i in carried {
                        s.push_str(&format!("  a {}\n", self.spec.objects[i].name));
                    }
                    s
                }
            }
            ("score", 0) => format!(
                "You have so far scored {} out of a possible {}, in {} turns.",
                self.score, self.spec.max_score, self.turns
            ),
            ("verbose", 0) => "Maximum verbosity.".into(),
            ("wait", 0) => "Time passes.".into(),
            ("yes" | "no" | "y" | "n", 0) => "That was a rhetorical question.".into(),
            ("take", _) if rest == ["all"] => {
                let here: Vec<usize> = self
                    .objects_where(Place::Room(self.room))
                    .filter(|&i| self.spec.objects[i].takeable)
                    .collect();
                if here.is_empty() {
                    return "There is nothing here to take.".into();
                }
                let mut s = String::new();
                for i in here {
                    let reply = self.take(i);
                    s.push_str(&format!("{}: {reply}\n", self.spec.objects[i].name));
                }
                s
            }
            ("take", n) if n > 0 => match self.resolve(rest) {
                Some(o) if self.visible(o) => self.take(o),
                _ => "You can't see any such thing.".into(),
            },
            ("drop", n) if n > 0 => match self.resolve(rest) {
                Some(o) if self.places[o] == Place::Carried => {
                    self.places[o] = Place::Room(self.room);
                    "Dropped.".into()
                }
                _ => "You don't have that.".into(),
            },
            ("examine", n) if n > 0 => match self.resolve(rest) {
                Some(o) if self.visible(o) => {
                    let obj = &self.spec.objects[o];
                    obj.desc.clone().unwrap_or_else(|| format!("You see nothing special about the {}.", obj.name))
                }
                _ => "You can't see any such thing.".into(),
            },
            (_, 0) => "I don't understand that.".into(),
            _ => {
                let mentions_visible = rest.iter().any(|w| {
                    self.spec.objects.iter().position(|o| &o.id == w).is_some_and(|o| self.visible(o))
                });
                if mentions_visible {
                    "Nothing happens.".into()
                } else {
                    "You can't see any such thing.".into()
                }
            }
        }
    }

    fn fire_event(&mut self, canon: &str, room: usize) -> Option<String> {
        let room_id = &self.spec.rooms[room].id;
        let idx = self
            .spec
            .score_events
            .iter()
            .position(|e| &e.room == room_id && self.spec.canonical(&e.command) == canon)?;
        if self.fired.contains(&idx) {
            return None;
        }
        let ev = &self.spec.score_events[idx];
        let have = ev.requires.iter().all(|r| {
            self.spec.objects.iter().position(|o| &o.id == r).is_some_and(|o| self.places[o] == Place::Carried)
        });
        if !have {
            return None;
        }
        self.fired.insert(idx);
        self.score += ev.points;
        Some(ev.response.clone().unwrap_or_else(|| "Done.".into()))
    }
}
