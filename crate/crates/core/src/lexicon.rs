//! Static lexical tables: verb priors, noun/verb affinity, synonyms and
//! command patterns.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LexiconError {
    #[error("{file}:{line}: {reason}")]
    Parse { file: String, line: usize, reason: String },
    #[error("malformed pattern {0:?}: expected exactly one {{slot}}")]
    MalformedPattern(String),
}

pub type Result<T> = std::result::Result<T, LexiconError>;

pub const FIGHTING_VERBS: [&str; 5] = ["attack", "kill", "fight", "shoot", "punch"];

/// Affinity assumed for (noun, verb) pairs missing from a known noun's row.
pub const DEFAULT_AFFINITY: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternTag {
    General,
    Fighting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandPattern {
    pub text: String,
    pub prior: f64,
    pub tag: PatternTag,
}

impl CommandPattern {
    /// The slot name without braces: `noun` for a free slot, otherwise the
    /// anchor word.
    pub fn slot(&self) -> &str {
        let open = self.text.find('{').expect("validated at load");
        let close = self.text[open..].find('}').expect("validated at load") + open;
        &self.text[open + 1..close]
    }

    pub fn is_free(&self) -> bool {
        self.slot() == "noun"
    }

    pub fn verb(&self) -> &str {
        self.text.split_whitespace().next().unwrap_or("")
    }
}

/// A two-slot pattern such as `give {item} to {target}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrepositionalPattern {
    pub text: String,
    pub prior: f64,
}

impl PrepositionalPattern {
    pub fn verb(&self) -> &str {
        self.text.split_whitespace().next().unwrap_or("")
    }

    pub fn fill(&self, item: &str, target: &str) -> String {
        squash(&self.text.replace("{item}", item).replace("{target}", target))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    /// Verbs in file order with their prior.
    pub verbs: Vec<(String, f64)>,
    pub affinity: HashMap<String, BTreeMap<String, f64>>,
    /// Per noun, synonyms ordered by non-increasing similarity.
    pub synonyms: HashMap<String, Vec<(String, f64)>>,
    pub patterns: Vec<CommandPattern>,
    pub prepositional: Vec<PrepositionalPattern>,
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Splits a TSV body into numbered rows, skipping blanks and `#` comments.
pub(crate) fn tsv_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let t = l.trim_end_matches('\r');
        if t.trim().is_empty() || t.trim_start().starts_with('#') {
            None
        } else {
            Some((i + 1, t.split('\t').map(str::trim).collect()))
        }
    })
}

pub(crate) fn parse_unit(file: &str, line: usize, s: &str, open_zero: bool) -> Result<f64> {
    let err = |reason: String| LexiconError::Parse { file: file.into(), line, reason };
    let v: f64 = s.parse().map_err(|_| err(format!("not a number: {s:?}")))?;
    let lower_ok = if open_zero { v > 0.0 } else { v >= 0.0 };
    if !(lower_ok && v <= 1.0) {
        let range = if open_zero { "(0,1]" } else { "[0,1]" };
        return Err(err(format!("score {v} outside {range}")));
    }
    Ok(v)
}

fn columns<'a>(file: &str, line: usize, cols: Vec<&'a str>, n: usize) -> Result<Vec<&'a str>> {
    if cols.len() != n || cols.iter().any(|c| c.is_empty()) {
        return Err(LexiconError::Parse {
            file: file.into(),
            line,
            reason: format!("expected {n} tab-separated columns, found {}", cols.len()),
        });
    }
    Ok(cols)
}

fn slot_count(text: &str) -> usize {
    text.matches('{').count().max(text.matches('}').count())
}

impl Lexicon {
    pub fn parse(verbs: &str, affinity: &str, synonyms: &str, patterns: &str, prepositional: &str) -> Result<Lexicon> {
        let mut lex = Lexicon::default();

        for (line, cols) in tsv_rows(verbs) {
            let c = columns("verbs.tsv", line, cols, 2)?;
            lex.verbs.push((c[0].to_lowercase(), parse_unit("verbs.tsv", line, c[1], true)?));
        }
        if lex.verbs.is_empty() {
            return Err(LexiconError::Parse { file: "verbs.tsv".into(), line: 0, reason: "no verbs".into() });
        }

        for (line, cols) in tsv_rows(affinity) {
            let c = columns("affinity.tsv", line, cols, 3)?;
            let score = parse_unit("affinity.tsv", line, c[2], false)?;
            lex.affinity.entry(c[0].to_lowercase()).or_default().insert(c[1].to_lowercase(), score);
        }

        for (line, cols) in tsv_rows(synonyms) {
            let c = columns("synonyms.tsv", line, cols, 3)?;
            let sim = parse_unit("synonyms.tsv", line, c[2], false)?;
            let list = lex.synonyms.entry(c[0].to_lowercase()).or_default();
            if list.last().is_some_and(|&(_, prev)| sim > prev) {
                return Err(LexiconError::Parse {
                    file: "synonyms.tsv".into(),
                    line,
                    reason: format!("similarity increases within the list for {:?}", c[0]),
                });
            }
            list.push((c[1].to_lowercase(), sim));
        }

        for (line, cols) in tsv_rows(patterns) {
            let c = columns("patterns.tsv", line, cols, 3)?;
            let err = |reason: String| LexiconError::Parse { file: "patterns.tsv".into(), line, reason };
            if slot_count(c[0]) != 1 {
                return Err(err(format!("pattern {:?} must have exactly one slot", c[0])));
            }
            let tag = match c[2] {
                "general" => PatternTag::General,
                "fighting" => PatternTag::Fighting,
                other => return Err(err(format!("unknown tag {other:?}"))),
            };
            let pat = CommandPattern {
                text: squash(c[0]),
                prior: parse_unit("patterns.tsv", line, c[1], true)?,
                tag,
            };
            if tag == PatternTag::Fighting && !FIGHTING_VERBS.contains(&pat.verb()) {
                return Err(err(format!("fighting pattern {:?} uses a non-fighting verb", c[0])));
            }
            lex.patterns.push(pat);
        }

        for (line, cols) in tsv_rows(prepositional) {
            let c = columns("prepositional_patterns.tsv", line, cols, 2)?;
            if !(c[0].contains("{item}") && c[0].contains("{target}") && slot_count(c[0]) == 2) {
                return Err(LexiconError::Parse {
                    file: "prepositional_patterns.tsv".into(),
                    line,
                    reason: format!("pattern {:?} needs {{item}} and {{target}}", c[0]),
                });
            }
            lex.prepositional.push(PrepositionalPattern {
                text: squash(c[0]),
                prior: parse_unit("prepositional_patterns.tsv", line, c[1], true)?,
            });
        }
        Ok(lex)
    }

    pub fn verb_prior(&self, verb: &str) -> Option<f64> {
        self.verbs.iter().find(|(v, _)| v == verb).map(|&(_, p)| p)
    }

    /// Affinity of a pair. Missing pairs of a known noun get
    /// [`DEFAULT_AFFINITY`]; an unknown noun gets `None`.
    pub fn affinity(&self, noun: &str, verb: &str) -> Option<f64> {
        self.affinity
            .get(noun)
            .map(|row| row.get(verb).copied().unwrap_or(DEFAULT_AFFINITY))
    }

    /// Top `k` verbs for `noun` by affinity times prior, ties broken by
    /// verb. Unknown nouns are ranked by prior alone.
    pub fn match_verbs(&self, noun: &str, k: usize) -> Vec<(String, f64)> {
        let row = self.affinity.get(noun);
        let mut ranked: Vec<(String, f64)> = self
            .verbs
            .iter()
            .map(|(v, prior)| {
                let a = match row {
                    Some(r) => r.get(v).copied().unwrap_or(DEFAULT_AFFINITY),
                    None => 1.0,
                };
                (v.clone(), a * prior)
            })
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(k);
        ranked
    }

    pub fn fighting_patterns(&self) -> impl Iterator<Item = &CommandPattern> {
        self.patterns.iter().filter(|p| p.tag == PatternTag::Fighting)
    }

    pub fn general_patterns(&self) -> impl Iterator<Item = &CommandPattern> {
        self.patterns.iter().filter(|p| p.tag == PatternTag::General)
    }

    /// Synonym list of `noun`, headed by the noun itself at similarity 1.
    pub fn synonyms_with_self(&self, noun: &str) -> Vec<(String, f64)> {
        let mut out = vec![(noun.to_string(), 1.0)];
        if let Some(list) = self.synonyms.get(noun) {
            out.extend(list.iter().filter(|(s, _)| s != noun).cloned());
        }
        out
    }
}

/// Replaces the pattern's single slot with `noun`.
pub fn fill_pattern(pattern: &str, noun: &str) -> Result<String> {
    let open = pattern.find('{');
    let close = pattern.find('}');
    match (open, close) {
        (Some(o), Some(c)) if c > o && slot_count(pattern) == 1 => {
            Ok(squash(&format!("{}{}{}", &pattern[..o], noun, &pattern[c + 1..])))
        }
        _ => Err(LexiconError::MalformedPattern(pattern.to_string())),
    }
}

/// Commands built by matching the noun's synonyms against anchored
/// patterns. The noun is its own synonym at similarity 1. Output pairs are
/// (command, similarity), deduplicated keeping the highest similarity.
pub fn propose_by_synonym<'a>(
    noun: &str,
    patterns: impl IntoIterator<Item = &'a CommandPattern>,
    lexicon: &Lexicon,
) -> Vec<(String, f64)> {
    let syns = lexicon.synonyms_with_self(noun);
    let mut out: Vec<(String, f64)> = Vec::new();
    for pat in patterns {
        if pat.is_free() {
            continue;
        }
        let Some((_, sim)) = syns.iter().find(|(s, _)| s == pat.slot()) else {
            continue;
        };
        let cmd = fill_pattern(&pat.text, noun).expect("patterns validated at load");
        match out.iter_mut().find(|(c, _)| *c == cmd) {
            Some(existing) => existing.1 = existing.1.max(*sim),
            None => out.push((cmd, *sim)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill() {
        assert_eq!(fill_pattern("unlock {noun} with key", "door").unwrap(), "unlock door with key");
        assert!(matches!(fill_pattern("take take", "x"), Err(LexiconError::MalformedPattern(_))));
        assert!(fill_pattern("put {noun} in {noun}", "x").is_err());
        assert!(fill_pattern("put }noun{", "x").is_err());
    }

    #[test]
    fn rejects_out_of_range_scores() {
        let e = Lexicon::parse("take\t1.0\n", "box\topen\t1.5\n", "", "", "").unwrap_err();
        assert!(e.to_string().contains("affinity.tsv:1"), "{e}");
        assert!(Lexicon::parse("take\t0\n", "", "", "", "").is_err());
        assert!(Lexicon::parse("take\t1\n", "", "", "dance {noun}\t0.5\tfighting\n", "").is_err());
    }
}
