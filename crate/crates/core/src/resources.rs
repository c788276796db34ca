//! The shipped data tables, embedded at build time or read from a directory
//! with the same layout as `data/`.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::lexicon::{parse_unit, tsv_rows, Lexicon, LexiconError};
use crate::text::{parse_word_list, TextLexicon};

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

/// Verb/noun scores standing in for a language model.
#[derive(Debug, Clone, Default)]
pub struct BigramTable {
    scores: HashMap<(String, String), f64>,
}

impl BigramTable {
    pub fn parse(text: &str) -> Result<BigramTable, LexiconError> {
        let mut scores = HashMap::new();
        for (line, cols) in tsv_rows(text) {
            if cols.len() != 3 {
                return Err(LexiconError::Parse {
                    file: "bigram_scores.tsv".into(),
                    line,
                    reason: format!("expected 3 columns, found {}", cols.len()),
                });
            }
            let s = parse_unit("bigram_scores.tsv", line, cols[2], false)?;
            scores.insert((cols[0].to_lowercase(), cols[1].to_lowercase()), s);
        }
        Ok(BigramTable { scores })
    }

    pub fn score(&self, verb: &str, noun: &str) -> Option<f64> {
        self.scores.get(&(verb.to_string(), noun.to_string())).copied()
    }

    /// All (verb, score) rows for a noun.
    pub fn verbs_for(&self, noun: &str) -> Vec<(String, f64)> {
        let mut v: Vec<_> = self
            .scores
            .iter()
            .filter(|((_, n), _)| n == noun)
            .map(|((v, _), s)| (v.clone(), *s))
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Resources {
    pub text: TextLexicon,
    pub lexicon: Lexicon,
    pub bigrams: BigramTable,
    pub rejection_cues: Vec<String>,
}

const FILES: [&str; 10] = [
    "stopwords.txt",
    "nouns.txt",
    "failure_phrases.txt",
    "lexicon/verbs.tsv",
    "lexicon/affinity.tsv",
    "lexicon/synonyms.tsv",
    "lexicon/patterns.tsv",
    "lexicon/prepositional_patterns.tsv",
    "nail/bigram_scores.tsv",
    "nail/rejection_cues.txt",
];

const EMBEDDED: [&str; 10] = [
    include_str!("../../../data/stopwords.txt"),
    include_str!("../../../data/nouns.txt"),
    include_str!("../../../data/failure_phrases.txt"),
    include_str!("../../../data/lexicon/verbs.tsv"),
    include_str!("../../../data/lexicon/affinity.tsv"),
    include_str!("../../../data/lexicon/synonyms.tsv"),
    include_str!("../../../data/lexicon/patterns.tsv"),
    include_str!("../../../data/lexicon/prepositional_patterns.tsv"),
    include_str!("../../../data/nail/bigram_scores.tsv"),
    include_str!("../../../data/nail/rejection_cues.txt"),
];

impl Resources {
    fn from_texts(t: &[&str; 10]) -> Result<Resources, ResourceError> {
        Ok(Resources {
            text: TextLexicon::from_lists(t[0], t[1], t[2]),
            lexicon: Lexicon::parse(t[3], t[4], t[5], t[6], t[7])?,
            bigrams: BigramTable::parse(t[8])?,
            rejection_cues: parse_word_list(t[9]),
        })
    }

    /// The tables compiled into the binary, parsed once per process.
    pub fn embedded() -> Arc<Resources> {
        static SHARED: OnceLock<Arc<Resources>> = OnceLock::new();
        SHARED
            .get_or_init(|| Arc::new(Resources::from_texts(&EMBEDDED).expect("embedded data is valid")))
            .clone()
    }

    pub fn load_dir(dir: &Path) -> Result<Resources, ResourceError> {
        let mut texts = Vec::with_capacity(FILES.len());
        for f in FILES {
            let path = dir.join(f);
            texts.push(std::fs::read_to_string(&path).map_err(|source| ResourceError::Io {
                path: path.display().to_string(),
                source,
            })?);
        }
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        Resources::from_texts(&refs.try_into().expect("ten files"))
    }
}
