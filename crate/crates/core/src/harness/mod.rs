//! Evaluation: episodes, batches, metrics and report files.

pub mod episode;
pub mod metrics;
pub mod runner;

pub use episode::{run_episode, Episode, EpisodeOptions, RunRecord, Termination, TranscriptLine};
pub use metrics::{compute_metrics, format_row, score_percent, AgentMetrics, MetricsError, MetricsReport};
pub use runner::{
    episode_seed, expand_game_paths, load_games, metrics_csv, render_table, run_batch, transcript_name, AgentSpec,
    BatchReport, EvalConfig, RunError,
};
