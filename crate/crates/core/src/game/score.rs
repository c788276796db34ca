//! Score readings and score-text parsing.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreSource {
    /// Read straight from game state.
    DirectGlobals,
    /// Parsed from the reply to a `score` command.
    ParsedText,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreReading {
    pub score: Option<i64>,
    pub max: Option<i64>,
    pub source: ScoreSource,
    pub scoreless: bool,
}

impl ScoreReading {
    pub fn new(score: i64, max: i64, source: ScoreSource) -> ScoreReading {
        ScoreReading { score: Some(score), max: Some(max), source, scoreless: max == 0 }
    }

    pub fn unavailable() -> ScoreReading {
        ScoreReading { score: None, max: None, source: ScoreSource::None, scoreless: false }
    }
}

fn families() -> &'static [Regex; 4] {
    static RE: OnceLock<[Regex; 4]> = OnceLock::new();
    RE.get_or_init(|| {
        [
            r"(?i)scored\s+(\d+)\s+out\s+of\s+a\s+possible\s+(\d+)",
            r"(?i)score(?:\s+is)?\s+(\d+)\s+points?\s+out\s+of\s+a\s+maximum\s+of\s+(\d+)",
            r"(?i)your\s+score\s+is\s+(\d+)\s*\(\s*out\s+of\s+(\d+)\s*\)",
            r"(?i)(?:^|[^\d-])(\d+)\s+out\s+of\s+(\d+)",
        ]
        .map(|p| Regex::new(p).expect("score regex"))
    })
}

/// Finds "N out of M" style score reports. Families are tried in a fixed
/// order and the earliest match of the first matching family wins.
pub fn parse_score_text(text: &str) -> Option<(i64, i64)> {
    families().iter().find_map(|re| {
        re.captures_iter(text).find_map(|c| {
            let score = c[1].parse().ok()?;
            let max = c[2].parse().ok()?;
            Some((score, max))
        })
    })
}
