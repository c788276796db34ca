//! Completion and non-zero metrics over a full games × runs grid.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::episode::RunRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("incomplete grid, missing: {}", .0.join(", "))]
    IncompleteGrid(Vec<String>),
    #[error("duplicate record for {0}")]
    DuplicateRecord(String),
    #[error("no records")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMetrics<T = f64> {
    pub agent: String,
    pub completion_mean: T,
    pub completion_sd: Option<T>,
    pub nonzero_mean: T,
    pub nonzero_sd: Option<T>,
    /// Mean score percentage per game.
    pub per_game: BTreeMap<String, T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<T = f64> {
    pub games: Vec<String>,
    pub runs: usize,
    pub agents: Vec<AgentMetrics<T>>,
}

fn cast<T: Float>(x: f64) -> T {
    T::from(x).expect("finite f64 converts")
}

fn hundred<T: Float>() -> T {
    cast(100.0)
}

/// Score as a percentage of the maximum, clamped to [0, 100].
pub fn score_percent<T: Float>(score: i64, max: i64) -> T {
    if max <= 0 {
        return T::zero();
    }
    let p = hundred::<T>() * cast::<T>(score as f64) / cast::<T>(max as f64);
    p.max(T::zero()).min(hundred())
}

fn mean<T: Float>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |a, &x| a + x) / cast(xs.len() as f64)
}

/// Sample standard deviation; `None` for fewer than two values.
fn sample_sd<T: Float>(xs: &[T]) -> Option<T> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let ss = xs.iter().fold(T::zero(), |a, &x| a + (x - m) * (x - m));
    Some((ss / cast((xs.len() - 1) as f64)).sqrt())
}

/// Per agent: completion is the mean score percentage over all (game, run)
/// cells, with the SD taken over per-run means; non-zero is the share of
/// games with a positive score in each run, averaged over runs. Games and
/// runs are the union over all records, and every agent must cover all of
/// them exactly once.
pub fn compute_metrics<T: Float>(records: &[RunRecord]) -> Result<MetricsReport<T>, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let games: BTreeSet<&str> = records.iter().map(|r| r.game.as_str()).collect();
    let runs: BTreeSet<usize> = records.iter().map(|r| r.run).collect();
    let agents: BTreeSet<&str> = records.iter().map(|r| r.agent.as_str()).collect();

    let mut cells: BTreeMap<(&str, &str, usize), &RunRecord> = BTreeMap::new();
    for r in records {
        if cells.insert((r.agent.as_str(), r.game.as_str(), r.run), r).is_some() {
            return Err(MetricsError::DuplicateRecord(format!("{}/{}/run{}", r.agent, r.game, r.run)));
        }
    }
    let mut missing = Vec::new();
    for a in &agents {
        for g in &games {
            for r in &runs {
                if !cells.contains_key(&(*a, *g, *r)) {
                    missing.push(format!("{a}/{g}/run{r}"));
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(MetricsError::IncompleteGrid(missing));
    }

    let n_games: T = cast(games.len() as f64);
    let mut out = Vec::new();
    for a in &agents {
        let mut run_completion = Vec::new();
        let mut run_nonzero = Vec::new();
        let mut all_cells = Vec::new();
        for r in &runs {
            let pcts: Vec<T> = games.iter().map(|g| {
                let rec = cells[&(*a, *g, *r)];
                score_percent(rec.score, rec.max_score)
            }).collect();
            let hits = games.iter().filter(|g| cells[&(*a, **g, *r)].score > 0).count();
            run_completion.push(mean(&pcts));
            run_nonzero.push(hundred::<T>() * cast::<T>(hits as f64) / n_games);
            all_cells.extend(pcts);
        }
        let per_game = games
            .iter()
            .map(|g| {
                let pcts: Vec<T> = runs.iter().map(|r| {
                    let rec = cells[&(*a, *g, *r)];
                    score_percent(rec.score, rec.max_score)
                }).collect();
                (g.to_string(), mean(&pcts))
            })
            .collect();
        out.push(AgentMetrics {
            agent: a.to_string(),
            completion_mean: mean(&all_cells),
            completion_sd: sample_sd(&run_completion),
            nonzero_mean: mean(&run_nonzero),
            nonzero_sd: sample_sd(&run_nonzero),
            per_game,
        });
    }
    Ok(MetricsReport { games: games.iter().map(|g| g.to_string()).collect(), runs: runs.len(), agents: out })
}

/// A results-table row: completion mean and SD, then non-zero mean and SD.
pub fn format_row<T: Float + std::fmt::Display>(m: &AgentMetrics<T>) -> String {
    let sd = |x: Option<T>, prec: usize| match x {
        Some(v) => format!("{v:.prec$}"),
        None => "-".to_string(),
    };
    format!(
        "{}  {:.2} {}  {:.1} {}",
        m.agent,
        m.completion_mean,
        sd(m.completion_sd, 2),
        m.nonzero_mean,
        sd(m.nonzero_sd, 2)
    )
}
