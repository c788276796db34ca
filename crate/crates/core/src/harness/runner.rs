//! Batches of episodes over games × agents × runs, and report files.

use std::fmt;
use std::hash::Hasher;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use fnv::FnvHasher;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::episode::{run_episode, EpisodeOptions, RunRecord};
use super::metrics::{compute_metrics, format_row, MetricsError, MetricsReport};
use crate::agent::Agent;
use crate::agents::{create_agent, AGENT_IDS};
use crate::bridge::ExternalAgent;
use crate::game::{GameError, GameSource, Session};
use crate::resources::Resources;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("game {0} has no score (max score 0); scoreless games are not evaluated")]
    Scoreless(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Metrics(MetricsError::IncompleteGrid(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentSpec {
    Builtin(String),
    /// A child process speaking the line protocol, run through `sh -c`.
    External { name: String, command: String },
}

impl AgentSpec {
    pub fn id(&self) -> &str {
        match self {
            AgentSpec::Builtin(id) => id,
            AgentSpec::External { name, .. } => name,
        }
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub games: Vec<PathBuf>,
    pub agents: Vec<AgentSpec>,
    pub steps: usize,
    pub runs: usize,
    pub seed: u64,
    pub step_limit: Duration,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub poll_score: bool,
    pub dump_kg: Option<PathBuf>,
    pub agent_logs: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            games: Vec::new(),
            agents: Vec::new(),
            steps: 1000,
            runs: 10,
            seed: 0,
            step_limit: Duration::from_millis(1000),
            out: None,
            jobs: None,
            poll_score: false,
            dump_kg: None,
            agent_logs: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: &str| Err(RunError::Config(m.to_string()));
        if self.steps == 0 {
            return bad("steps must be at least 1");
        }
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.step_limit.is_zero() {
            return bad("the per-step limit must be positive");
        }
        if self.games.is_empty() {
            return bad("no games given");
        }
        if self.agents.is_empty() {
            return bad("no agents given");
        }
        let mut ids: Vec<&str> = self.agents.iter().map(AgentSpec::id).collect();
        for a in &self.agents {
            if let AgentSpec::Builtin(id) = a {
                if !AGENT_IDS.contains(&id.as_str()) {
                    return Err(RunError::Config(format!("unknown agent {id:?} (known: {})", AGENT_IDS.join(", "))));
                }
            }
        }
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("agent ids must be unique");
        }
        Ok(())
    }
}

/// Expands directories into the `.json` and `.z3` files they contain,
/// sorted by name.
pub fn expand_game_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, RunError> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|source| RunError::Io { path: p.display().to_string(), source })?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| matches!(f.extension().and_then(|e| e.to_str()), Some("json" | "z3")))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Loads every game, rejecting scoreless ones and duplicate ids.
pub fn load_games(paths: &[PathBuf]) -> Result<Vec<GameSource>, RunError> {
    let mut games = Vec::new();
    for p in expand_game_paths(paths)? {
        let g = GameSource::load(&p)?;
        let reading = Session::open(&g, 0).read_score();
        if reading.scoreless || reading.max.is_none() {
            return Err(RunError::Scoreless(g.id().to_string()));
        }
        if games.iter().any(|x: &GameSource| x.id() == g.id()) {
            return Err(RunError::Config(format!("two games share the id {:?}", g.id())));
        }
        games.push(g);
    }
    if games.is_empty() {
        return Err(RunError::Config("no games found".into()));
    }
    Ok(games)
}

/// `base ^ FNV-1a(agent, game, run)`.
pub fn episode_seed(base: u64, agent: &str, game: &str, run: usize) -> u64 {
    let mut h = FnvHasher::default();
    h.write(agent.as_bytes());
    h.write(&[0]);
    h.write(game.as_bytes());
    h.write(&[0]);
    h.write(&(run as u64).to_le_bytes());
    base ^ h.finish()
}

pub fn transcript_name(agent: &str, game: &str, run: usize) -> String {
    format!("{agent}__{game}__run{run}")
}

fn make_agent(spec: &AgentSpec, seed: u64, res: &Arc<Resources>, limit: Duration) -> Box<dyn Agent> {
    match spec {
        AgentSpec::Builtin(id) => create_agent(id, seed, res.clone()).expect("validated agent id"),
        AgentSpec::External { name, command } => Box::new(ExternalAgent::new(name, command, seed, limit)),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub config: ConfigSummary,
    pub records: Vec<RunRecord>,
    pub metrics: MetricsReport<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigSummary {
    pub agents: Vec<String>,
    pub games: Vec<String>,
    pub steps: usize,
    pub runs: usize,
    pub seed: u64,
    pub step_limit_ms: u64,
}

fn write(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.display().to_string(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| RunError::Io { path: path.display().to_string(), source })
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it).expect("plain data"));
        s.push('\n');
    }
    s
}

/// Runs the whole grid and writes reports when an output directory is set.
pub fn run_batch(config: &EvalConfig, res: Arc<Resources>) -> Result<BatchReport, RunError> {
    config.validate()?;
    let games = load_games(&config.games)?;
    let mut tasks = Vec::new();
    for a in &config.agents {
        for g in &games {
            for r in 0..config.runs {
                tasks.push((a, g, r));
            }
        }
    }
    let opts = EpisodeOptions { steps: config.steps, step_limit: config.step_limit, poll_score: config.poll_score };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Config(e.to_string()))?;

    let results: Vec<Result<RunRecord, RunError>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(spec, game, run)| {
                let seed = episode_seed(config.seed, spec.id(), game.id(), *run);
                let agent = make_agent(spec, seed, &res, config.step_limit);
                let ep = run_episode(agent, spec.id(), game, *run, seed, &opts);
                let name = transcript_name(spec.id(), game.id(), *run);
                let mut record = ep.record;
                if let Some(out) = &config.out {
                    let rel = format!("transcripts/{name}.jsonl");
                    write(&out.join(&rel), jsonl(&ep.transcript).as_bytes())?;
                    record.transcript = Some(rel);
                    if config.agent_logs && !ep.decision_log.is_empty() {
                        write(&out.join(format!("logs/{name}.jsonl")), jsonl(&ep.decision_log).as_bytes())?;
                    }
                }
                if let (Some(dir), Some(state)) = (&config.dump_kg, &ep.agent_state) {
                    let text = serde_json::to_string_pretty(state).expect("plain data");
                    write(&dir.join(format!("{name}.json")), text.as_bytes())?;
                }
                Ok(record)
            })
            .collect()
    });
    let mut records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    records.sort_by(|a, b| (&a.agent, &a.game, a.run).cmp(&(&b.agent, &b.game, b.run)));
    let metrics = compute_metrics::<f64>(&records)?;
    let report = BatchReport {
        config: ConfigSummary {
            agents: config.agents.iter().map(|a| a.id().to_string()).collect(),
            games: games.iter().map(|g| g.id().to_string()).collect(),
            steps: config.steps,
            runs: config.runs,
            seed: config.seed,
            step_limit_ms: config.step_limit.as_millis() as u64,
        },
        records,
        metrics,
    };
    if let Some(out) = &config.out {
        write(&out.join("metrics.json"), (serde_json::to_string_pretty(&report).expect("plain data") + "\n").as_bytes())?;
        write(&out.join("metrics.csv"), metrics_csv(&report.metrics).as_bytes())?;
    }
    Ok(report)
}

pub fn metrics_csv(m: &MetricsReport<f64>) -> String {
    let mut s = String::from("agent,completion_mean,completion_sd,nonzero_mean,nonzero_sd\n");
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.2}")).unwrap_or_default();
    for a in &m.agents {
        s.push_str(&format!(
            "{},{:.2},{},{:.2},{}\n",
            a.agent,
            a.completion_mean,
            opt(a.completion_sd),
            a.nonzero_mean,
            opt(a.nonzero_sd)
        ));
    }
    s
}

/// The results table, one row per agent.
pub fn render_table(m: &MetricsReport<f64>) -> String {
    m.agents.iter().map(|a| format_row(a) + "\n").collect()
}
