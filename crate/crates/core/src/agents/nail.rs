//! Independent decision modules bidding for control, over a knowledge graph
//! that only takes facts from actions judged to have had an effect.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::Observer;
use crate::agent::Agent;
use crate::resources::{BigramTable, Resources};
use crate::text::{canonical_direction, first_line, LocationKey, OutcomeClass, DIRECTIONS};

/// Bigram scores below this are never proposed.
pub const BIGRAM_THRESHOLD: f64 = 0.05;

/// Verbs tried on objects the bigram table knows nothing useful about.
pub const FALLBACK_VERBS: [&str; 10] = ["open", "push", "pull", "turn", "read", "move", "search", "eat", "wear", "light"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LocationInfo {
    pub title: String,
    pub description: String,
    pub examined: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectInfo {
    pub seen_at: BTreeSet<LocationKey>,
    pub acquired: bool,
    pub relevant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub location: LocationKey,
    pub command: String,
    pub outcome: OutcomeClass,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Connection {
    pub from: LocationKey,
    pub command: String,
    pub to: LocationKey,
}

/// Locations, connections, objects and every attempted interaction.
#[derive(Debug, Clone, Default, Serialize)]
pub struct KnowledgeGraph {
    pub locations: BTreeMap<LocationKey, LocationInfo>,
    pub connections: BTreeSet<Connection>,
    pub objects: BTreeMap<String, ObjectInfo>,
    attempts: Vec<Attempt>,
    #[serde(skip)]
    attempted: HashSet<(LocationKey, String)>,
}

impl KnowledgeGraph {
    pub fn attempts(&self) -> &[Attempt] {
        &self.attempts
    }

    pub fn was_attempted(&self, location: LocationKey, command: &str) -> bool {
        self.attempted.contains(&(location, command.to_string()))
    }

    pub fn add_location(&mut self, key: LocationKey, description: &str, nouns: &[String]) {
        let info = self.locations.entry(key).or_default();
        info.title = first_line(description).unwrap_or_default().to_string();
        info.description = description.to_string();
        for n in nouns {
            self.objects.entry(n.clone()).or_default().seen_at.insert(key);
        }
    }

    /// Objects seen here plus everything carried.
    pub fn objects_at(&self, here: LocationKey) -> Vec<&str> {
        self.objects
            .iter()
            .filter(|(_, o)| o.acquired || o.seen_at.contains(&here))
            .map(|(n, _)| n.as_str())
            .collect()
    }

    /// Records an attempt; facts are written only for successful ones.
    pub fn update(
        &mut self,
        command: &str,
        outcome: OutcomeClass,
        before: LocationKey,
        after: LocationKey,
        narration: &str,
        nouns: &[String],
    ) {
        self.attempts.push(Attempt { location: before, command: command.to_string(), outcome });
        self.attempted.insert((before, command.to_string()));
        if outcome == OutcomeClass::Failed {
            return;
        }
        if before != after {
            self.add_location(after, narration, nouns);
            self.connections.insert(Connection { from: before, command: command.to_string(), to: after });
        }
        let mut ws = command.split_whitespace();
        match (ws.next(), ws.last()) {
            (Some("examine"), Some(obj)) => {
                if let Some(l) = self.locations.get_mut(&before) {
                    l.examined.insert(obj.to_string());
                }
                self.objects.entry(obj.to_string()).or_default().relevant = true;
            }
            (Some("take"), Some(obj)) => {
                let o = self.objects.entry(obj.to_string()).or_default();
                o.acquired = true;
                o.relevant = true;
            }
            _ => {}
        }
    }

    /// Directions not yet attempted at a location.
    pub fn untried_directions(&self, at: LocationKey) -> Vec<&'static str> {
        DIRECTIONS.iter().copied().filter(|d| !self.was_attempted(at, d)).collect()
    }

    /// Shortest command route to the nearest location that still has
    /// untried directions.
    pub fn frontier_route(&self, here: LocationKey) -> Option<Vec<String>> {
        let mut prev: BTreeMap<LocationKey, (LocationKey, String)> = BTreeMap::new();
        let mut queue = VecDeque::from([here]);
        let mut seen = BTreeSet::from([here]);
        while let Some(at) = queue.pop_front() {
            if at != here && !self.untried_directions(at).is_empty() {
                let mut route = Vec::new();
                let mut cur = at;
                while cur != here {
                    let (p, c) = prev[&cur].clone();
                    route.push(c);
                    cur = p;
                }
                route.reverse();
                return Some(route);
            }
            for c in self.connections.iter().filter(|c| c.from == at) {
                if seen.insert(c.to) {
                    prev.insert(c.to, (at, c.command.clone()));
                    queue.push_back(c.to);
                }
            }
        }
        None
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("plain data")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ModuleId {
    YesNo,
    Acquirer,
    Examiner,
    Interactor,
    Navigator,
    Idler,
}

impl ModuleId {
    /// Tie-break order, most preferred first.
    pub const PRIORITY: [ModuleId; 6] = [
        ModuleId::YesNo,
        ModuleId::Acquirer,
        ModuleId::Examiner,
        ModuleId::Interactor,
        ModuleId::Navigator,
        ModuleId::Idler,
    ];
}

/// (verb, object) commands for the objects here ranked by bigram score.
/// Only objects confirmed by a successful examine or take are used.
/// Objects without a usable bigram get the fallback verbs, after all
/// scored commands. Attempted commands are left out.
pub fn interactor_propose(kg: &KnowledgeGraph, here: LocationKey, bigrams: &BigramTable) -> Vec<(String, f64)> {
    let mut scored = Vec::new();
    let mut fallback = Vec::new();
    for obj in kg.objects_at(here).into_iter().filter(|o| kg.objects[*o].relevant) {
        let usable: Vec<(String, f64)> =
            bigrams.verbs_for(obj).into_iter().filter(|(_, s)| *s >= BIGRAM_THRESHOLD).collect();
        if usable.is_empty() {
            for v in FALLBACK_VERBS {
                fallback.push((format!("{v} {obj}"), 0.0));
            }
        } else {
            for (v, s) in usable {
                scored.push((format!("{v} {obj}"), s));
            }
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.extend(fallback);
    scored.retain(|(c, _)| !kg.was_attempted(here, c));
    scored
}

pub struct NailAgent {
    seed: u64,
    rng: ChaCha8Rng,
    res: Arc<Resources>,
    observer: Observer,
    kg: KnowledgeGraph,
    route: Vec<String>,
    steps: usize,
    log: Vec<Value>,
}

impl NailAgent {
    pub fn new(seed: u64, res: Arc<Resources>) -> NailAgent {
        NailAgent {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            observer: Observer::new(res.clone(), res.rejection_cues.clone()),
            res,
            kg: KnowledgeGraph::default(),
            route: Vec::new(),
            steps: 0,
            log: Vec::new(),
        }
    }

    pub fn knowledge_graph(&self) -> &KnowledgeGraph {
        &self.kg
    }

    /// The shared classifier plus parser-rejection cues.
    pub fn validity_detect(&self, command: &str, before: &str, after: &str) -> OutcomeClass {
        self.observer.classify(command, before, after)
    }

    /// Examined objects count as worth taking until a take was tried.
    fn wants(&self, here: LocationKey, object: &str) -> bool {
        let o = &self.kg.objects[object];
        o.relevant && !o.acquired && !self.kg.was_attempted(here, &format!("take {object}"))
    }

    fn eagerness(&self, narration: &str, here: Option<LocationKey>) -> Vec<(ModuleId, f64)> {
        let mut bids = vec![(ModuleId::YesNo, if crate::text::is_yes_no_question(narration) { 1.0 } else { 0.0 })];
        let Some(here) = here else {
            bids.push((ModuleId::Idler, 0.01));
            return bids;
        };
        let scene: Vec<&str> = self
            .kg
            .objects
            .iter()
            .filter(|(_, o)| o.seen_at.contains(&here))
            .map(|(n, _)| n.as_str())
            .collect();
        let acquirable = scene.iter().any(|o| self.wants(here, o));
        bids.push((ModuleId::Acquirer, if acquirable { 0.9 } else { 0.0 }));
        let unexamined = scene.iter().filter(|o| !self.kg.was_attempted(here, &format!("examine {o}"))).count();
        let frac = if scene.is_empty() { 0.0 } else { unexamined as f64 / scene.len() as f64 };
        bids.push((ModuleId::Examiner, 0.8 * frac));
        let interact = !interactor_propose(&self.kg, here, &self.res.bigrams).is_empty();
        bids.push((ModuleId::Interactor, if interact { 0.6 } else { 0.0 }));
        let nav = if !self.route.is_empty() || !self.kg.untried_directions(here).is_empty() {
            0.5
        } else if self.kg.frontier_route(here).is_some() {
            0.3
        } else {
            0.0
        };
        bids.push((ModuleId::Navigator, nav));
        bids.push((ModuleId::Idler, 0.01));
        bids
    }

    fn act(&mut self, module: ModuleId, here: Option<LocationKey>) -> String {
        let random_dir = |rng: &mut ChaCha8Rng| DIRECTIONS.choose(rng).expect("non-empty").to_string();
        let Some(here) = here else {
            return if module == ModuleId::YesNo { "no".into() } else { random_dir(&mut self.rng) };
        };
        let scene: Vec<String> = self
            .kg
            .objects
            .iter()
            .filter(|(_, o)| o.seen_at.contains(&here))
            .map(|(n, _)| n.clone())
            .collect();
        match module {
            ModuleId::YesNo => "no".into(),
            ModuleId::Acquirer => scene
                .iter()
                .map(|o| format!("take {o}"))
                .find(|c| self.wants(here, &c[5..]))
                .unwrap_or_else(|| random_dir(&mut self.rng)),
            ModuleId::Examiner => scene
                .iter()
                .map(|o| format!("examine {o}"))
                .find(|c| !self.kg.was_attempted(here, c))
                .unwrap_or_else(|| random_dir(&mut self.rng)),
            ModuleId::Interactor => interactor_propose(&self.kg, here, &self.res.bigrams)
                .into_iter()
                .next()
                .map(|(c, _)| c)
                .unwrap_or_else(|| random_dir(&mut self.rng)),
            ModuleId::Navigator => {
                if !self.route.is_empty() {
                    return self.route.remove(0);
                }
                let untried = self.kg.untried_directions(here);
                if let Some(d) = untried.choose(&mut self.rng) {
                    return d.to_string();
                }
                match self.kg.frontier_route(here) {
                    Some(mut route) if !route.is_empty() => {
                        let first = route.remove(0);
                        self.route = route;
                        first
                    }
                    _ => random_dir(&mut self.rng),
                }
            }
            ModuleId::Idler => random_dir(&mut self.rng),
        }
    }
}

impl Agent for NailAgent {
    fn name(&self) -> &str {
        "nail"
    }

    fn action(&mut self, narration: &str) -> String {
        let obs = self.observer.observe(narration);
        let nouns = self.res.text.extract_nouns(narration);
        if let (Some(cmd), Some(outcome), Some(before), Some(after)) =
            (obs.command.as_deref(), obs.outcome, obs.before, obs.after)
        {
            self.kg.update(cmd, outcome, before, after, narration, &nouns);
            if outcome == OutcomeClass::Failed || (canonical_direction(cmd).is_some() && !obs.moved()) {
                self.route.clear();
            }
        } else if obs.room_view {
            if let Some(after) = obs.after {
                self.kg.add_location(after, narration, &nouns);
            }
        }
        self.steps += 1;

        let here = self.observer.location();
        let bids = self.eagerness(narration, here);
        let best = bids.iter().map(|(_, e)| *e).fold(f64::MIN, f64::max);
        let winner = ModuleId::PRIORITY
            .into_iter()
            .find(|m| bids.iter().any(|(id, e)| id == m && *e == best))
            .expect("idler always bids");
        let cmd = self.act(winner, here);
        let bid_map: BTreeMap<String, f64> = bids.iter().map(|(m, e)| (format!("{m:?}"), *e)).collect();
        self.log.push(json!({"step": self.steps, "eagerness": bid_map, "winner": format!("{winner:?}"), "command": cmd}));
        self.observer.commit(&cmd);
        cmd
    }

    fn reset(&mut self) {
        *self = NailAgent::new(self.seed, self.res.clone());
    }

    fn export_state(&self) -> Option<Value> {
        Some(self.kg.to_json())
    }

    fn decision_log(&self) -> Vec<Value> {
        self.log.clone()
    }
}
