//! Keyword patterns and compiled keyword sets.
//!
//! Patterns use the `regex` crate syntax. `boundary` anchors a match as a
//! whole word: wherever the match starts (ends) with a word character, the
//! character before (after) it must not be one. This lets dotted acronyms
//! such as `A.I.` be anchored the same way as plain words.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_AI_KEYWORDS: &str = include_str!("../../data/keywords_ai.csv");

/// Compiled program size cap; keeps ad-hoc patterns from blowing up.
const REGEX_SIZE_LIMIT: usize = 1 << 20;

#[derive(Debug, Error)]
pub enum KeywordError {
    #[error("keyword set is empty")]
    Empty,
    #[error("duplicate keyword id {0:?}")]
    DuplicateId(String),
    #[error("keyword {id:?} has an empty id or pattern")]
    Blank { id: String },
    #[error("keyword {id:?} does not compile: {message}")]
    Invalid { id: String, message: String },
    #[error("keyword file: {0}")]
    Csv(#[from] csv::Error),
    #[error("keyword file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseMode {
    Insensitive,
    Exact,
}

impl FromStr for CaseMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "insensitive" => Ok(CaseMode::Insensitive),
            "exact" => Ok(CaseMode::Exact),
            other => Err(format!("unknown case mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeywordPattern {
    pub id: String,
    pub raw: String,
    pub case_mode: CaseMode,
    pub boundary: bool,
}

impl KeywordPattern {
    pub fn new(id: &str, raw: &str, case_mode: CaseMode, boundary: bool) -> Self {
        Self {
            id: id.to_string(),
            raw: raw.to_string(),
            case_mode,
            boundary,
        }
    }
}

/// The default AI keyword list shipped with the crate.
pub fn default_ai_keywords() -> Vec<KeywordPattern> {
    parse_keyword_file(DEFAULT_AI_KEYWORDS.as_bytes()).expect("bundled keyword file parses")
}

/// Parse a keyword file: CSV with header `id,raw,case_mode,boundary`.
pub fn parse_keyword_file<R: Read>(reader: R) -> Result<Vec<KeywordPattern>, KeywordError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<KeywordPattern>() {
        out.push(row?);
    }
    Ok(out)
}

pub fn load_keyword_file(path: &Path) -> Result<Vec<KeywordPattern>, KeywordError> {
    let file = std::fs::File::open(path)?;
    parse_keyword_file(file)
}

#[derive(Debug, Clone)]
struct CompiledKeyword {
    pattern: KeywordPattern,
    regex: Regex,
}

/// A validated, compiled keyword set.
#[derive(Debug, Clone)]
pub struct KeywordSet {
    keywords: Vec<CompiledKeyword>,
}

/// One keyword hit, in byte offsets of the searched text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct KeywordHit {
    pub start: usize,
    pub end: usize,
    /// Index into [`KeywordSet::patterns`].
    pub keyword: usize,
}

pub fn compile_keywords(patterns: &[KeywordPattern]) -> Result<KeywordSet, KeywordError> {
    if patterns.is_empty() {
        return Err(KeywordError::Empty);
    }
    let mut ids = HashSet::new();
    let mut keywords = Vec::with_capacity(patterns.len());
    for p in patterns {
        if p.id.trim().is_empty() || p.raw.is_empty() {
            return Err(KeywordError::Blank { id: p.id.clone() });
        }
        if !ids.insert(p.id.as_str()) {
            return Err(KeywordError::DuplicateId(p.id.clone()));
        }
        let regex = RegexBuilder::new(&p.raw)
            .case_insensitive(p.case_mode == CaseMode::Insensitive)
            .size_limit(REGEX_SIZE_LIMIT)
            .build()
            .map_err(|e| KeywordError::Invalid {
                id: p.id.clone(),
                message: e.to_string(),
            })?;
        keywords.push(CompiledKeyword {
            pattern: p.clone(),
            regex,
        });
    }
    Ok(KeywordSet { keywords })
}

impl KeywordSet {
    pub fn default_ai() -> Self {
        compile_keywords(&default_ai_keywords()).expect("bundled keywords compile")
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn patterns(&self) -> impl Iterator<Item = &KeywordPattern> {
        self.keywords.iter().map(|k| &k.pattern)
    }

    pub fn id(&self, keyword: usize) -> &str {
        &self.keywords[keyword].pattern.id
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.keywords.iter().position(|k| k.pattern.id == id)
    }

    /// A set restricted to the given ids, in this set's order.
    pub fn subset(&self, ids: &[String]) -> KeywordSet {
        KeywordSet {
            keywords: self
                .keywords
                .iter()
                .filter(|k| ids.contains(&k.pattern.id))
                .cloned()
                .collect(),
        }
    }

    /// All hits of all keywords, ordered by (start, keyword).
    ///
    /// Each keyword is matched independently, so different keywords may
    /// overlap ("generative AI" yields a `generative` and an `ai` hit).
    pub fn find_all(&self, text: &str) -> Vec<KeywordHit> {
        let mut hits = Vec::new();
        for (k, kw) in self.keywords.iter().enumerate() {
            find_keyword(kw, text, |start, end| {
                hits.push(KeywordHit { start, end, keyword: k });
                true
            });
        }
        hits.sort();
        hits
    }

    /// Like [`find_all`](Self::find_all) but stops after `limit` hits.
    /// Returns `None` when the limit was reached.
    pub fn find_all_bounded(&self, text: &str, limit: usize) -> Option<Vec<KeywordHit>> {
        let mut hits = Vec::new();
        let mut exceeded = false;
        for (k, kw) in self.keywords.iter().enumerate() {
            find_keyword(kw, text, |start, end| {
                if hits.len() >= limit {
                    exceeded = true;
                    return false;
                }
                hits.push(KeywordHit { start, end, keyword: k });
                true
            });
            if exceeded {
                return None;
            }
        }
        hits.sort();
        Some(hits)
    }

    pub fn is_match(&self, text: &str) -> bool {
        self.keywords.iter().any(|kw| {
            let mut found = false;
            find_keyword(kw, text, |_, _| {
                found = true;
                false
            });
            found
        })
    }
}

fn find_keyword(kw: &CompiledKeyword, text: &str, mut emit: impl FnMut(usize, usize) -> bool) {
    let mut pos = 0;
    while pos <= text.len() {
        let Some(m) = kw.regex.find_at(text, pos) else {
            break;
        };
        if m.start() == m.end() {
            pos = next_char(text, m.end());
            continue;
        }
        if !kw.pattern.boundary || is_whole_word(text, m.start(), m.end()) {
            if !emit(m.start(), m.end()) {
                return;
            }
            pos = m.end();
        } else {
            pos = next_char(text, m.start());
        }
    }
}

fn next_char(text: &str, pos: usize) -> usize {
    text[pos..].chars().next().map_or(text.len() + 1, |c| pos + c.len_utf8())
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub(crate) fn is_whole_word(text: &str, start: usize, end: usize) -> bool {
    let matched = &text[start..end];
    let first = matched.chars().next();
    let last = matched.chars().next_back();
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    let left_ok = !(first.is_some_and(is_word) && before.is_some_and(is_word));
    let right_ok = !(last.is_some_and(is_word) && after.is_some_and(is_word));
    left_ok && right_ok
}
