//! Cascade of five command generators over a map of visited locations,
//! with per-location blacklists and roulette-wheel choice.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::{Observation, Observer};
use crate::agent::Agent;
use crate::lexicon::{fill_pattern, propose_by_synonym, FIGHTING_VERBS};
use crate::resources::Resources;
use crate::select::{roulette_index, WeightedCommand};
use crate::text::{is_yes_no_question, LocationKey, OutcomeClass, DIRECTIONS};

/// Inventory is checked every this many steps.
pub const INVENTORY_PERIOD: usize = 10;
/// Verbs tried on a noun nothing is known about.
const UNKNOWN_NOUN_VERBS: usize = 5;
/// Battle commands are retried at most this many times per location.
const BATTLE_RETRIES: usize = 3;

#[derive(Debug, Clone, Default, Serialize)]
pub struct MapNode {
    pub title: String,
    pub generated: BTreeSet<String>,
    pub attempted: BTreeSet<String>,
}

impl MapNode {
    /// Share of generated commands not yet attempted.
    pub fn unattempted_fraction(&self) -> f64 {
        if self.generated.is_empty() {
            return 0.0;
        }
        let left = self.generated.iter().filter(|c| !self.attempted.contains(*c)).count();
        left as f64 / self.generated.len() as f64
    }
}

/// Locations and the movement commands observed to connect them.
#[derive(Debug, Clone, Default, Serialize)]
pub struct MapGraph {
    pub nodes: BTreeMap<LocationKey, MapNode>,
    pub edges: BTreeMap<LocationKey, BTreeMap<String, LocationKey>>,
}

impl MapGraph {
    /// Adds a node with every direction already generated.
    pub fn add_node(&mut self, key: LocationKey, title: &str) -> &mut MapNode {
        self.nodes.entry(key).or_insert_with(|| MapNode {
            title: title.to_string(),
            generated: DIRECTIONS.iter().map(|d| d.to_string()).collect(),
            attempted: BTreeSet::new(),
        })
    }

    pub fn add_edge(&mut self, from: LocationKey, command: &str, to: LocationKey) {
        self.edges.entry(from).or_default().insert(command.to_string(), to);
    }

    /// Hop distances and first-hop routes from `here`, breadth first.
    pub fn routes_from(&self, here: LocationKey) -> BTreeMap<LocationKey, Vec<String>> {
        let mut routes = BTreeMap::new();
        routes.insert(here, Vec::new());
        let mut queue = VecDeque::from([here]);
        while let Some(at) = queue.pop_front() {
            let Some(out) = self.edges.get(&at) else { continue };
            for (cmd, to) in out {
                if !routes.contains_key(to) {
                    let mut r = routes[&at].clone();
                    r.push(cmd.clone());
                    routes.insert(*to, r);
                    queue.push_back(*to);
                }
            }
        }
        routes
    }

    /// The reachable location maximising `u / (1 + d)`, where `u` is its
    /// unattempted fraction and `d` its hop distance. Ties go to the nearer
    /// location, then the smaller key.
    pub fn promising_destination(&self, here: LocationKey) -> Option<(LocationKey, Vec<String>)> {
        let routes = self.routes_from(here);
        let mut best: Option<(f64, usize, LocationKey)> = None;
        for (key, route) in &routes {
            if *key == here {
                continue;
            }
            let Some(node) = self.nodes.get(key) else { continue };
            let u = node.unattempted_fraction();
            if u <= 0.0 {
                continue;
            }
            let d = route.len();
            let promise = u / (1.0 + d as f64);
            let better = match best {
                None => true,
                Some((p, bd, bk)) => promise > p || (promise == p && (d < bd || (d == bd && *key < bk))),
            };
            if better {
                best = Some((promise, d, *key));
            }
        }
        best.map(|(_, _, k)| (k, routes[&k].clone()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct GolovinMemory {
    pub graph: MapGraph,
    pub blacklist: BTreeMap<LocationKey, BTreeSet<String>>,
    pub succeeded: BTreeMap<LocationKey, BTreeSet<String>>,
    pub taken: Vec<String>,
    pub fought: bool,
    pub fight_targets: BTreeSet<String>,
    pub battle_tries: BTreeMap<(LocationKey, String), usize>,
    pub last_inventory: Option<String>,
    pub scene_nouns: BTreeMap<LocationKey, Vec<String>>,
}

impl GolovinMemory {
    /// Applies the outcome of `command` issued at `before`.
    pub fn update(
        &mut self,
        command: &str,
        outcome: OutcomeClass,
        before: LocationKey,
        after: LocationKey,
        after_title: &str,
    ) {
        let node = self.graph.nodes.entry(before).or_default();
        node.generated.insert(command.to_string());
        node.attempted.insert(command.to_string());
        if before != after {
            self.graph.add_node(after, after_title);
            self.graph.add_edge(before, command, after);
        }
        match outcome {
            OutcomeClass::Failed => {
                self.blacklist.entry(before).or_default().insert(command.to_string());
            }
            OutcomeClass::Succeeded => {
                self.succeeded.entry(before).or_default().insert(command.to_string());
            }
        }
    }

    /// Reacts to a fresh inventory listing. When it differs from the last
    /// one, the location's blacklist is lifted and carried nouns recorded.
    pub fn observe_inventory(&mut self, here: LocationKey, text: &str, nouns: Vec<String>) -> bool {
        let changed = self.last_inventory.as_deref().is_some_and(|old| old != text);
        if changed {
            if let Some(cleared) = self.blacklist.remove(&here) {
                if let Some(node) = self.graph.nodes.get_mut(&here) {
                    for c in &cleared {
                        node.attempted.remove(c);
                    }
                }
            }
        }
        for n in nouns {
            if !self.taken.contains(&n) {
                self.taken.push(n);
            }
        }
        self.last_inventory = Some(text.to_string());
        changed
    }

    pub fn is_blacklisted(&self, here: LocationKey, command: &str) -> bool {
        self.blacklist.get(&here).is_some_and(|b| b.contains(command))
    }

    fn excluded(&self, here: LocationKey, command: &str) -> bool {
        self.is_blacklisted(here, command) || self.succeeded.get(&here).is_some_and(|s| s.contains(command))
    }
}

pub struct GolovinAgent {
    seed: u64,
    rng: ChaCha8Rng,
    res: Arc<Resources>,
    observer: Observer,
    memory: GolovinMemory,
    steps: usize,
    probing: bool,
    route: Vec<String>,
    log: Vec<Value>,
}

impl GolovinAgent {
    pub fn new(seed: u64, res: Arc<Resources>) -> GolovinAgent {
        GolovinAgent {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            observer: Observer::new(res.clone(), Vec::new()),
            res,
            memory: GolovinMemory::default(),
            steps: 0,
            probing: false,
            route: Vec::new(),
            log: Vec::new(),
        }
    }

    pub fn memory(&self) -> &GolovinMemory {
        &self.memory
    }

    fn weapons_ok(&self, command: &str) -> bool {
        match command.split(" with ").nth(1) {
            Some(w) => self.memory.taken.iter().any(|t| t == w.trim()),
            None => true,
        }
    }

    fn battle(&self, here: LocationKey, nouns: &[String]) -> Vec<WeightedCommand> {
        if !self.memory.fought {
            return Vec::new();
        }
        let mut out = Vec::new();
        for n in nouns.iter().filter(|n| self.memory.fight_targets.contains(*n)) {
            for p in self.res.lexicon.fighting_patterns() {
                let cmd = if p.is_free() {
                    fill_pattern(&p.text, n).expect("validated")
                } else if self.res.lexicon.synonyms_with_self(n).iter().any(|(s, _)| s == p.slot()) {
                    fill_pattern(&p.text, n).expect("validated")
                } else {
                    continue;
                };
                let tries = self.memory.battle_tries.get(&(here, cmd.clone())).copied().unwrap_or(0);
                if tries < BATTLE_RETRIES && self.weapons_ok(&cmd) {
                    push_max(&mut out, cmd, p.prior, 1);
                }
            }
        }
        out
    }

    fn gathering(&self, nouns: &[String]) -> Vec<WeightedCommand> {
        nouns
            .iter()
            .filter(|n| !self.memory.taken.contains(n))
            .map(|n| WeightedCommand::new(format!("take {n}"), 1.0, 2))
            .collect()
    }

    /// Pattern commands for one noun: anchored patterns through synonyms,
    /// free patterns only where the affinity table pairs the verb with the
    /// noun, and the top verbs by prior for nouns nothing is known about.
    fn noun_commands(&self, noun: &str, generator: u8, out: &mut Vec<WeightedCommand>) {
        let lex = &self.res.lexicon;
        let before = out.len();
        for (cmd, sim) in propose_by_synonym(noun, &lex.patterns, lex) {
            let prior = lex.patterns.iter().find(|p| fill_pattern(&p.text, noun).ok().as_deref() == Some(&cmd));
            let w = sim * prior.map_or(1.0, |p| p.prior);
            if self.weapons_ok(&cmd) {
                push_max(out, cmd, w, generator);
            }
        }
        if let Some(row) = lex.affinity.get(noun) {
            for p in lex.patterns.iter().filter(|p| p.is_free()) {
                if let Some(a) = row.get(p.verb()) {
                    let cmd = fill_pattern(&p.text, noun).expect("validated");
                    if *a > 0.0 && self.weapons_ok(&cmd) {
                        push_max(out, cmd, a * p.prior, generator);
                    }
                }
            }
        }
        if out.len() == before && !lex.affinity.contains_key(noun) {
            for (verb, prior) in lex.match_verbs(noun, UNKNOWN_NOUN_VERBS) {
                push_max(out, format!("{verb} {noun}"), prior, generator);
            }
        }
    }

    fn inventory_commands(&self) -> Vec<WeightedCommand> {
        let mut out = Vec::new();
        for t in &self.memory.taken {
            self.noun_commands(t, 3, &mut out);
        }
        out.retain(|c| !c.command.starts_with("take ") && !c.command.starts_with("drop "));
        out
    }

    fn general(&self, nouns: &[String]) -> Vec<WeightedCommand> {
        let mut out = Vec::new();
        for n in nouns {
            self.noun_commands(n, 4, &mut out);
        }
        out
    }

    fn exploration(&mut self, here: LocationKey) -> (Vec<WeightedCommand>, &'static str) {
        let untried: Vec<&str> = DIRECTIONS
            .iter()
            .copied()
            .filter(|d| !self.memory.graph.nodes.get(&here).is_some_and(|n| n.attempted.contains(*d)))
            .collect();
        if let Some(d) = untried.choose(&mut self.rng) {
            return (vec![WeightedCommand::new(*d, 1.0, 5)], "untried");
        }
        if let Some((_, route)) = self.memory.graph.promising_destination(here) {
            if let Some((first, rest)) = route.split_first() {
                let first = first.clone();
                self.route = rest.to_vec();
                return (vec![WeightedCommand::new(first, 1.0, 5)], "promising");
            }
        }
        let open: Vec<&str> = DIRECTIONS.iter().copied().filter(|d| !self.memory.is_blacklisted(here, d)).collect();
        let pool = if open.is_empty() { &DIRECTIONS[..] } else { &open[..] };
        let d = pool.choose(&mut self.rng).expect("non-empty");
        (vec![WeightedCommand::new(*d, 1.0, 5)], "random")
    }

    fn decide(&mut self, here: LocationKey) -> String {
        // keep walking towards a chosen destination
        if let Some(next) = (!self.route.is_empty()).then(|| self.route.remove(0)) {
            self.log.push(json!({"step": self.steps, "generator": 5, "candidates": 1, "command": next, "mode": "route"}));
            return next;
        }
        let nouns = self.memory.scene_nouns.get(&here).cloned().unwrap_or_default();
        let attempted_filter = |agent: &Self, mut v: Vec<WeightedCommand>, blacklist: bool| {
            v.retain(|c| {
                if blacklist {
                    !agent.memory.excluded(here, &c.command)
                } else {
                    !agent.memory.succeeded.get(&here).is_some_and(|s| s.contains(&c.command))
                }
            });
            v
        };
        let cascade: [(u8, Vec<WeightedCommand>); 4] = [
            (1, attempted_filter(self, self.battle(here, &nouns), false)),
            (2, attempted_filter(self, self.gathering(&nouns), true)),
            (3, attempted_filter(self, self.inventory_commands(), true)),
            (4, attempted_filter(self, self.general(&nouns), true)),
        ];
        let node = self.memory.graph.add_node(here, "");
        for (_, set) in &cascade {
            node.generated.extend(set.iter().map(|c| c.command.clone()));
        }
        for (generator, set) in cascade {
            if set.is_empty() {
                continue;
            }
            let i = roulette_index(&set, &mut self.rng).expect("weights are positive");
            let cmd = set[i].command.clone();
            self.log.push(json!({"step": self.steps, "generator": generator, "candidates": set.len(), "command": cmd}));
            return cmd;
        }
        let (set, mode) = self.exploration(here);
        let cmd = set[0].command.clone();
        self.log.push(json!({"step": self.steps, "generator": 5, "candidates": 1, "command": cmd, "mode": mode}));
        cmd
    }

    fn absorb(&mut self, obs: &Observation, narration: &str) {
        let Some(after) = obs.after else { return };
        if obs.room_view {
            let title = crate::text::first_line(narration).unwrap_or_default();
            self.memory.graph.add_node(after, title).title = title.to_string();
            self.memory.scene_nouns.insert(after, self.res.text.extract_nouns(narration));
        }
        let (Some(cmd), Some(outcome), Some(before)) = (obs.command.as_deref(), obs.outcome, obs.before) else {
            return;
        };
        if self.probing {
            let nouns = self.res.text.extract_nouns(narration);
            self.memory.observe_inventory(after, narration, nouns);
            return;
        }
        if FIGHTING_VERBS.contains(&cmd.split_whitespace().next().unwrap_or("")) {
            self.memory.fought = true;
            if let Some(target) = cmd.split_whitespace().nth(1) {
                self.memory.fight_targets.insert(target.to_string());
            }
            *self.memory.battle_tries.entry((before, cmd.to_string())).or_default() += 1;
            // battle commands are never blacklisted
            if outcome == OutcomeClass::Failed {
                let node = self.memory.graph.nodes.entry(before).or_default();
                node.generated.insert(cmd.to_string());
                node.attempted.insert(cmd.to_string());
                return;
            }
        }
        if outcome == OutcomeClass::Failed && !self.route.is_empty() {
            self.route.clear();
        }
        self.memory.update(cmd, outcome, before, after, crate::text::first_line(narration).unwrap_or_default());
    }
}

fn push_max(out: &mut Vec<WeightedCommand>, command: String, weight: f64, generator: u8) {
    if weight <= 0.0 {
        return;
    }
    match out.iter_mut().find(|c| c.command == command) {
        Some(c) => c.weight = c.weight.max(weight),
        None => out.push(WeightedCommand::new(command, weight, generator)),
    }
}

impl Agent for GolovinAgent {
    fn name(&self) -> &str {
        "golovin"
    }

    fn action(&mut self, narration: &str) -> String {
        let obs = self.observer.observe(narration);
        self.absorb(&obs, narration);
        self.probing = false;
        self.steps += 1;

        let cmd = if is_yes_no_question(narration) {
            "no".to_string()
        } else if let Some(here) = self.observer.location() {
            if self.steps % INVENTORY_PERIOD == 0 {
                self.probing = true;
                "inventory".to_string()
            } else {
                self.decide(here)
            }
        } else {
            "look".to_string()
        };
        self.observer.commit(&cmd);
        cmd
    }

    fn reset(&mut self) {
        *self = GolovinAgent::new(self.seed, self.res.clone());
    }

    fn export_state(&self) -> Option<Value> {
        let nodes: Vec<Value> = self
            .memory
            .graph
            .nodes
            .iter()
            .map(|(k, n)| json!({"key": k.to_string(), "title": n.title, "generated": n.generated.len(), "attempted": n.attempted.len()}))
            .collect();
        let edges: Vec<Value> = self
            .memory
            .graph
            .edges
            .iter()
            .flat_map(|(from, out)| out.iter().map(move |(c, to)| json!([from.to_string(), c, to.to_string()])))
            .collect();
        Some(json!({"nodes": nodes, "edges": edges, "taken": self.memory.taken, "fought": self.memory.fought}))
    }

    fn decision_log(&self) -> Vec<Value> {
        self.log.clone()
    }
}
