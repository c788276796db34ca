//! Command-line interface.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand};

use crate::agent::ControlAction;
use crate::agents::AGENT_IDS;
use crate::game::{GameSource, Session, SessionStatus};
use crate::harness::{render_table, run_batch, AgentSpec, EvalConfig, RunError};
use crate::resources::Resources;

pub const SEED_ENV: &str = "TEXT_ARENA_SEED";

#[derive(Debug, Parser)]
#[command(name = "text-arena", version, about = "Run text-adventure agents against games and score them")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Evaluate agents over games and write metrics and transcripts.
    Run(RunArgs),
    /// Play a game interactively on stdin/stdout.
    Play {
        game: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Disassemble a story file from its initial program counter.
    Zdump {
        file: PathBuf,
        #[arg(long, default_value_t = 200)]
        limit: usize,
    },
    /// Check a game file and summarise it.
    ValidateGame { file: PathBuf },
    /// List the built-in agents.
    ListAgents,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Game files or directories, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    games: Vec<PathBuf>,
    /// Built-in agent ids, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "random")]
    agents: Vec<String>,
    /// External agent as NAME=COMMAND; may be repeated.
    #[arg(long = "external", value_name = "NAME=CMD")]
    external: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Base seed; the TEXT_ARENA_SEED environment variable overrides it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    step_limit_ms: u64,
    /// Parallel episodes; defaults to the number of CPUs.
    #[arg(long)]
    jobs: Option<usize>,
    /// Record the score after every step in transcripts.
    #[arg(long)]
    poll_score: bool,
    /// Directory for per-episode agent world models (the NAIL knowledge graph).
    #[arg(long, value_name = "DIR")]
    dump_kg: Option<PathBuf>,
    /// Write per-episode decision logs under OUT/logs.
    #[arg(long)]
    agent_logs: bool,
}

fn config_from(args: RunArgs, env_seed: Option<String>) -> Result<EvalConfig, RunError> {
    let seed = match env_seed {
        Some(s) => s.trim().parse().map_err(|_| RunError::Config(format!("{SEED_ENV}={s:?} is not a u64")))?,
        None => args.seed,
    };
    let mut agents: Vec<AgentSpec> =
        args.agents.into_iter().filter(|a| !a.is_empty()).map(AgentSpec::Builtin).collect();
    for e in args.external {
        let (name, command) =
            e.split_once('=').ok_or_else(|| RunError::Config(format!("--external {e:?} is not NAME=CMD")))?;
        agents.push(AgentSpec::External { name: name.to_string(), command: command.to_string() });
    }
    Ok(EvalConfig {
        games: args.games,
        agents,
        steps: args.steps,
        runs: args.runs,
        seed,
        step_limit: Duration::from_millis(args.step_limit_ms),
        out: args.out,
        jobs: args.jobs,
        poll_score: args.poll_score,
        dump_kg: args.dump_kg,
        agent_logs: args.agent_logs,
    })
}

fn validate_game(file: &Path) -> Result<String, String> {
    match GameSource::load(file).map_err(|e| e.to_string())? {
        GameSource::Scripted { spec, .. } => Ok(format!("OK: {} rooms, max_score {}", spec.rooms.len(), spec.max_score)),
        GameSource::Story { story, .. } => Ok(format!(
            "OK: version {} story, {} bytes, {}",
            story.header().version,
            story.len(),
            if story.header().is_score_game() { "score game" } else { "time game" }
        )),
    }
}

fn play(file: &Path, seed: u64, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), String> {
    let game = GameSource::load(file).map_err(|e| e.to_string())?;
    let mut session = Session::open(&game, seed);
    let io = |e: std::io::Error| e.to_string();
    writeln!(out, "{}", session.last_narration()).map_err(io)?;
    let mut line = String::new();
    while session.status() == SessionStatus::Running {
        write!(out, "> ").map_err(io)?;
        out.flush().map_err(io)?;
        line.clear();
        if input.read_line(&mut line).map_err(io)? == 0 {
            break;
        }
        let cmd = line.trim_end_matches(['\n', '\r']);
        let reply = match ControlAction::from_token(cmd) {
            Some(a) => session.control(a, || {}),
            None => session.perform(cmd).map_err(|e| e.to_string())?,
        };
        writeln!(out, "{reply}").map_err(io)?;
    }
    let r = session.read_score();
    if let (Some(s), Some(m)) = (r.score, r.max) {
        writeln!(out, "[score {s} of {m} after {} steps]", session.steps()).map_err(io)?;
    }
    Ok(())
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 on
/// configuration or usage errors, 2 when the record grid is incomplete.
pub fn run_cli<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return 1;
            }
            let _ = write!(out, "{text}");
            return 0;
        }
    };
    match cli.command {
        Cmd::Run(args) => {
            let result = config_from(args, std::env::var(SEED_ENV).ok())
                .and_then(|cfg| run_batch(&cfg, Resources::embedded()));
            match result {
                Ok(report) => {
                    let _ = write!(out, "{}", render_table(&report.metrics));
                    0
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    e.exit_code()
                }
            }
        }
        Cmd::Play { game, seed } => match play(&game, seed, input, out) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Cmd::Zdump { file, limit } => {
            let story = std::fs::read(&file).map_err(|e| e.to_string()).and_then(|b| zmachine::load_story(&b).map_err(|e| e.to_string()));
            match story {
                Ok(s) => {
                    let _ = write!(out, "{}", zmachine::disasm::listing(&s, limit));
                    0
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {}: {e}", file.display());
                    1
                }
            }
        }
        Cmd::ValidateGame { file } => match validate_game(&file) {
            Ok(msg) => {
                let _ = writeln!(out, "{msg}");
                0
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Cmd::ListAgents => {
            let about = [
                "uniform choice among eight basic commands",
                "five ordered generators, blacklists, map-guided exploration",
                "ranked verb/noun search with success replay",
                "eagerness-arbitrated modules over a knowledge graph",
            ];
            for (id, text) in AGENT_IDS.iter().zip(about) {
                let _ = writeln!(out, "{id:<11} {text}");
            }
            0
        }
    }
}
