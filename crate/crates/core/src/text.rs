//! Shared narration utilities: normalisation, location identity, noun
//! extraction and the no-effect classifier.

use std::collections::BTreeSet;
use std::hash::Hasher;
use std::sync::OnceLock;

use fnv::FnvHasher;
use regex::Regex;
use serde::{Deserialize, Serialize};

/// Whether a command changed anything in the game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeClass {
    Succeeded,
    Failed,
}

/// Identity of a location: FNV-1a 64 of its normalised description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LocationKey(pub u64);

impl LocationKey {
    pub fn of(description: &str) -> LocationKey {
        let mut h = FnvHasher::default();
        h.write(normalize(description).as_bytes());
        LocationKey(h.finish())
    }
}

impl std::fmt::Display for LocationKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

fn status_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?ix)
            ^\s*(score|moves|turns)\s*:
            | out\ of\ a\ (possible|maximum)
            | ^\s*you\ are\ carrying
            | ^\s*you\ are\ empty-handed
            | ^\s*you\ have\ so\ far\ scored",
        )
        .expect("status regex")
    })
}

/// Lower-cases, drops score and inventory lines, and collapses whitespace.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines().filter(|l| !status_line().is_match(l)) {
        for word in line.split_whitespace() {
            if !out.is_empty() {
                out.push(' ');
            }
            out.extend(word.chars().flat_map(char::to_lowercase));
        }
    }
    out
}

/// The first non-blank line, which games print as the room title.
pub fn first_line(narration: &str) -> Option<&str> {
    narration.lines().map(str::trim).find(|l| !l.is_empty())
}

/// True for out-of-game yes/no prompts such as "resume a saved game (Y/N)?".
pub fn is_yes_no_question(narration: &str) -> bool {
    let lower = narration.trim_end().to_lowercase();
    lower.ends_with('?')
        && ["(y/n)", "yes or no", "(yes/no)", "y/n"]
            .iter()
            .any(|cue| lower.contains(cue))
}

pub const DIRECTIONS: [&str; 10] = [
    "north",
    "south",
    "east",
    "west",
    "northeast",
    "northwest",
    "southeast",
    "southwest",
    "up",
    "down",
];

/// Maps abbreviations and `go <dir>` to one of [`DIRECTIONS`].
pub fn canonical_direction(command: &str) -> Option<&'static str> {
    let cmd = command.trim().to_lowercase();
    let word = cmd.strip_prefix("go ").unwrap_or(&cmd).trim();
    let short = match word {
        "n" => "north",
        "s" => "south",
        "e" => "east",
        "w" => "west",
        "ne" => "northeast",
        "nw" => "northwest",
        "se" => "southeast",
        "sw" => "southwest",
        "u" => "up",
        "d" => "down",
        other => other,
    };
    DIRECTIONS.iter().copied().find(|d| *d == short)
}

/// Word lists used by noun extraction and outcome classification.
#[derive(Debug, Clone, Default)]
pub struct TextLexicon {
    pub stopwords: BTreeSet<String>,
    pub nouns: BTreeSet<String>,
    pub failure_phrases: Vec<String>,
}

const ARTICLES: [&str; 4] = ["a", "an", "the", "some"];

/// Parses a one-entry-per-line list; blank lines and `#` comments are skipped.
pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

impl TextLexicon {
    pub fn from_lists(stopwords: &str, nouns: &str, failure_phrases: &str) -> TextLexicon {
        TextLexicon {
            stopwords: parse_word_list(stopwords).into_iter().collect(),
            nouns: parse_word_list(nouns).into_iter().collect(),
            failure_phrases: parse_word_list(failure_phrases),
        }
    }

    fn is_stop(&self, w: &str) -> bool {
        self.stopwords.contains(w)
    }

    /// Nouns in order of first occurrence. A token counts when it is in the
    /// noun list, or when it ends the run of words following an article
    /// ("a small brass lamp" gives "lamp"). Stopwords never count.
    pub fn extract_nouns(&self, narration: &str) -> Vec<String> {
        fn push(out: &mut Vec<String>, w: &str) {
            if !out.iter().any(|x| x == w) {
                out.push(w.to_string());
            }
        }
        let lower = narration.to_lowercase();
        let mut out = Vec::new();
        for clause in lower.split(|c: char| ".,;:!?()\"\n".contains(c)) {
            // None: outside a phrase. Some(None): after an article, skipping
            // adjectives. Some(Some(w)): inside the run, w is the latest word.
            let mut phrase: Option<Option<&str>> = None;
            let tokens = clause
                .split(|c: char| !(c.is_ascii_alphabetic() || c == '\'' || c == '-'))
                .map(|t| t.trim_matches(|c| c == '\'' || c == '-'))
                .filter(|t| !t.is_empty());
            for tok in tokens {
                if ARTICLES.contains(&tok) {
                    if let Some(Some(h)) = phrase {
                        push(&mut out, h);
                    }
                    phrase = Some(None);
                } else if self.is_stop(tok) {
                    if let Some(Some(h)) = phrase {
                        push(&mut out, h);
                        phrase = None;
                    }
                } else {
                    if self.nouns.contains(tok) {
                        push(&mut out, tok);
                    }
                    if phrase.is_some() {
                        phrase = Some(Some(tok));
                    }
                }
            }
            if let Some(Some(h)) = phrase {
                push(&mut out, h);
            }
        }
        out
    }

    /// True when the normalised response contains a failure phrase as
    /// whole words ("you see no" does not match "you see nothing").
    pub fn mentions_failure(&self, narration: &str) -> bool {
        let norm = normalize(narration);
        self.failure_phrases.iter().any(|p| contains_phrase(&norm, p))
    }

    /// Failed when the response is unchanged or matches the failure lexicon.
    pub fn classify_outcome(&self, _command: &str, before: &str, after: &str) -> OutcomeClass {
        if normalize(before) == normalize(after) || self.mentions_failure(after) {
            OutcomeClass::Failed
        } else {
            OutcomeClass::Succeeded
        }
    }
}

/// Substring match that must start and end on word boundaries.
pub(crate) fn contains_phrase(text: &str, phrase: &str) -> bool {
    let is_word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric());
    text.match_indices(phrase).any(|(i, m)| {
        !is_word(text[..i].chars().next_back()) && !is_word(text[i + m.len()..].chars().next())
    })
}
