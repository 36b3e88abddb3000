//! Search, stats and export over an immutable corpus snapshot. The CLI and
//! the HTTP service both go through these functions, so their outputs agree
//! by construction.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{assign_reporting_year, CorpusIndex, Metric, Scope, StatRow};
use crate::annotation::SentenceKey;
use crate::export::{export_rows, sort_rows, ExportRow};
use crate::extraction::{
    compile_keywords, default_ai_keywords, CaseMode, KeywordError, KeywordPattern, KeywordSet,
    MatchRecord, SentenceRecord,
};
use crate::filing::{FilingRef, ItemId};
use crate::offsets::OffsetIndex;
use crate::store::{sentence_order, RecordBatch};

pub const MAX_PAGE_SIZE: usize = 500;
pub const DEFAULT_PAGE_SIZE: usize = 50;
/// Hits an ad-hoc query may produce before it is refused.
pub const ADHOC_MATCH_BUDGET: usize = 100_000;
pub const ADHOC_TIME_BUDGET: Duration = Duration::from_secs(2);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("page_size must be between 1 and {MAX_PAGE_SIZE}, got {0}")]
    PageSize(usize),
    #[error("page numbers start at 1")]
    Page,
    #[error("year range {0}..{1} is empty")]
    Years(i32, i32),
    #[error("unknown keyword id {0:?}")]
    UnknownKeyword(String),
    #[error("invalid pattern {id}: {message}")]
    Pattern { id: String, message: String },
    #[error("query exceeded its {0}; narrow the filters")]
    Budget(&'static str),
    #[error("store has no filings")]
    EmptyStore,
    #[error("parameter {name}: {message}")]
    Param { name: String, message: String },
}

fn param_err(name: &str, message: impl Into<String>) -> QueryError {
    QueryError::Param { name: name.to_string(), message: message.into() }
}

/// `2024`, `2020..2024` or `2020-2024`, inclusive.
pub fn parse_year_range(s: &str) -> Result<(i32, i32), String> {
    let s = s.trim();
    let (a, b) = s
        .split_once("..")
        .or_else(|| s.split_once('-'))
        .unwrap_or((s, s));
    let a: i32 = a.trim().parse().map_err(|_| format!("{s:?} is not a year or year range"))?;
    let b: i32 = b.trim().trim_start_matches('=').parse().map_err(|_| format!("{s:?} is not a year or year range"))?;
    if a > b {
        return Err(format!("year range {a}..{b} is empty"));
    }
    Ok((a, b))
}

fn split_list(v: &str) -> impl Iterator<Item = String> + '_ {
    v.split(',').map(str::trim).filter(|x| !x.is_empty()).map(str::to_string)
}

fn parse_num<T: std::str::FromStr>(name: &str, v: &str) -> Result<T, QueryError> {
    v.trim().parse().map_err(|_| param_err(name, format!("{v:?} is not a number")))
}

/// Filters shared by search and export. Empty lists admit everything.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchQuery {
    /// Ids of keywords in the snapshot's keyword set.
    pub keywords: Vec<String>,
    /// Ad-hoc regular expressions, case-insensitive with whole-word
    /// boundaries, applied to the extracted sentences.
    pub patterns: Vec<String>,
    pub year_from: Option<i32>,
    pub year_to: Option<i32>,
    pub sections: Vec<ItemId>,
    /// CIKs or case-insensitive company-name substrings.
    pub companies: Vec<String>,
    pub sic: Vec<String>,
    pub page: usize,
    pub page_size: usize,
}

impl Default for SearchQuery {
    fn default() -> Self {
        SearchQuery {
            keywords: Vec::new(),
            patterns: Vec::new(),
            year_from: None,
            year_to: None,
            sections: Vec::new(),
            companies: Vec::new(),
            sic: Vec::new(),
            page: 1,
            page_size: DEFAULT_PAGE_SIZE,
        }
    }
}

impl SearchQuery {
    pub fn validate(&self) -> Result<(), QueryError> {
        if !(1..=MAX_PAGE_SIZE).contains(&self.page_size) {
            return Err(QueryError::PageSize(self.page_size));
        }
        if self.page == 0 {
            return Err(QueryError::Page);
        }
        if let (Some(a), Some(b)) = (self.year_from, self.year_to) {
            if a > b {
                return Err(QueryError::Years(a, b));
            }
        }
        Ok(())
    }

    /// Build a query from url parameters. List parameters (`keywords`,
    /// `sections`, `sic`) take comma-separated values and may repeat;
    /// `pattern` and `company` repeat, one value each, since patterns and
    /// company names can contain commas. Unknown names are rejected.
    pub fn from_params<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self, QueryError> {
        let mut q = SearchQuery::default();
        for (k, v) in pairs {
            match k {
                "keywords" | "keyword" => q.keywords.extend(split_list(v)),
                "patterns" | "pattern" => {
                    if !v.is_empty() {
                        q.patterns.push(v.to_string());
                    }
                }
                "years" => {
                    let (a, b) = parse_year_range(v).map_err(|m| param_err(k, m))?;
                    q.year_from = Some(a);
                    q.year_to = Some(b);
                }
                "year_from" => q.year_from = Some(parse_num(k, v)?),
                "year_to" => q.year_to = Some(parse_num(k, v)?),
                "sections" | "section" => {
                    for item in split_list(v) {
                        q.sections.push(item.parse().map_err(|e: crate::filing::UnknownItem| param_err(k, e.to_string()))?);
                    }
                }
                "companies" | "company" => {
                    if !v.trim().is_empty() {
                        q.companies.push(v.trim().to_string());
                    }
                }
                "sic" => q.sic.extend(split_list(v)),
                "page" => q.page = parse_num(k, v)?,
                "page_size" => q.page_size = parse_num(k, v)?,
                other => return Err(param_err(other, "unknown parameter")),
            }
        }
        q.validate()?;
        Ok(q)
    }

    fn admits_filing(&self, f: &FilingRef, year: i32) -> bool {
        if self.year_from.is_some_and(|y| year < y) || self.year_to.is_some_and(|y| year > y) {
            return false;
        }
        if !self.sic.is_empty() && !self.sic.iter().any(|s| s == f.sic_group()) {
            return false;
        }
        if !self.companies.is_empty() {
            let name = f.company_name.to_lowercase();
            let hit = self.companies.iter().any(|c| {
                let c = c.trim();
                match c.parse::<u64>() {
                    Ok(cik) => cik == f.cik,
                    Err(_) => name.contains(&c.to_lowercase()),
                }
            });
            if !hit {
                return false;
            }
        }
        true
    }

    fn admits_item(&self, item: ItemId) -> bool {
        self.sections.is_empty() || self.sections.contains(&item)
    }
}

/// A highlighted span, in chars, within a hit's sentence text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Highlight {
    pub start: usize,
    pub end: usize,
    pub keyword_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub sentence_key: String,
    pub accession_number: String,
    pub cik: u64,
    pub company_name: String,
    pub sic: String,
    pub reporting_year: i32,
    pub section_item: ItemId,
    pub sections: BTreeSet<ItemId>,
    pub sentence_index: usize,
    pub sentence_text: String,
    pub keyword_ids: BTreeSet<String>,
    pub highlights: Vec<Highlight>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchPage {
    pub total: usize,
    pub page: usize,
    pub page_size: usize,
    pub hits: Vec<SearchHit>,
}

/// Parameters of a stats request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsQuery {
    pub metric: Metric,
    /// All scopes when absent.
    pub scope: Option<Scope>,
    pub year_from: Option<i32>,
    pub year_to: Option<i32>,
    /// When set, per-industry rows for the `top_n` largest SIC groups.
    pub top_sic: Option<usize>,
}

impl Default for StatsQuery {
    fn default() -> Self {
        StatsQuery {
            metric: Metric::PctCompanies,
            scope: None,
            year_from: None,
            year_to: None,
            top_sic: None,
        }
    }
}

impl StatsQuery {
    /// Build from url parameters: `metric`, `scope`, `years`, `year_from`,
    /// `year_to`, `top_sic`.
    pub fn from_params<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self, QueryError> {
        let mut q = StatsQuery::default();
        for (k, v) in pairs {
            match k {
                "metric" => q.metric = v.parse().map_err(|m: String| param_err(k, m))?,
                "scope" => q.scope = Some(v.parse().map_err(|m: String| param_err(k, m))?),
                "years" => {
                    let (a, b) = parse_year_range(v).map_err(|m| param_err(k, m))?;
                    q.year_from = Some(a);
                    q.year_to = Some(b);
                }
                "year_from" => q.year_from = Some(parse_num(k, v)?),
                "year_to" => q.year_to = Some(parse_num(k, v)?),
                "top_sic" => q.top_sic = Some(parse_num(k, v)?),
                other => return Err(param_err(other, "unknown parameter")),
            }
        }
        if let (Some(a), Some(b)) = (q.year_from, q.year_to) {
            if a > b {
                return Err(QueryError::Years(a, b));
            }
        }
        Ok(q)
    }
}

/// An immutable, loaded corpus.
#[derive(Debug, Clone)]
pub struct Snapshot {
    batch: RecordBatch,
    keywords: KeywordSet,
    index: CorpusIndex,
}

struct Matcher {
    set: KeywordSet,
    adhoc: bool,
}

impl Snapshot {
    pub fn new(mut batch: RecordBatch) -> Result<Self, KeywordError> {
        batch.normalize();
        let patterns = batch
            .meta
            .as_ref()
            .map(|m| m.keywords.clone())
            .filter(|k| !k.is_empty())
            .unwrap_or_else(default_ai_keywords);
        let keywords = compile_keywords(&patterns)?;
        let index = CorpusIndex::build(&batch.filings, &batch.matches, &batch.sentences);
        Ok(Snapshot { batch, keywords, index })
    }

    pub fn is_empty(&self) -> bool {
        self.batch.filings.is_empty()
    }

    pub fn batch(&self) -> &RecordBatch {
        &self.batch
    }

    pub fn keywords(&self) -> &KeywordSet {
        &self.keywords
    }

    pub fn index(&self) -> &CorpusIndex {
        &self.index
    }

    fn matcher(&self, q: &SearchQuery) -> Result<Option<Matcher>, QueryError> {
        if !q.patterns.is_empty() {
            let patterns: Vec<KeywordPattern> = q
                .patterns
                .iter()
                .enumerate()
                .map(|(i, raw)| KeywordPattern::new(&format!("q{}", i + 1), raw, CaseMode::Insensitive, true))
                .collect();
            let set = compile_keywords(&patterns).map_err(|e| match e {
                KeywordError::Invalid { id, message } => QueryError::Pattern { id, message },
                other => QueryError::Pattern { id: "q".into(), message: other.to_string() },
            })?;
            return Ok(Some(Matcher { set, adhoc: true }));
        }
        if !q.keywords.is_empty() {
            for id in &q.keywords {
                if self.keywords.position(id).is_none() {
                    return Err(QueryError::UnknownKeyword(id.clone()));
                }
            }
            return Ok(Some(Matcher { set: self.keywords.subset(&q.keywords), adhoc: false }));
        }
        Ok(None)
    }

    fn sentence_admitted(&self, q: &SearchQuery, s: &SentenceRecord) -> bool {
        q.admits_filing(&s.filing, assign_reporting_year(&s.filing).year)
            && s.sections.iter().any(|i| q.admits_item(*i))
    }

    /// Sentences satisfying `q`, in export order, with their highlights.
    fn select(&self, q: &SearchQuery) -> Result<Vec<(&SentenceRecord, Vec<Highlight>)>, QueryError> {
        q.validate()?;
        let matcher = self.matcher(q)?;
        let deadline = Instant::now() + ADHOC_TIME_BUDGET;
        let mut budget = ADHOC_MATCH_BUDGET;
        let mut out = Vec::new();
        for s in &self.batch.sentences {
            if !self.sentence_admitted(q, s) {
                continue;
            }
            let highlights = match &matcher {
                Some(m) if m.adhoc => {
                    if Instant::now() > deadline {
                        return Err(QueryError::Budget("time budget"));
                    }
                    let hits = m
                        .set
                        .find_all_bounded(&s.sentence_text, budget)
                        .ok_or(QueryError::Budget("match budget"))?;
                    budget -= hits.len();
                    to_highlights(&s.sentence_text, &m.set, &hits)
                }
                Some(m) => {
                    if !q.keywords.iter().any(|k| s.keyword_ids.contains(k)) {
                        continue;
                    }
                    to_highlights(&s.sentence_text, &m.set, &m.set.find_all(&s.sentence_text))
                }
                None => to_highlights(&s.sentence_text, &self.keywords, &self.keywords.find_all(&s.sentence_text)),
            };
            if matcher.as_ref().is_some_and(|m| m.adhoc) && highlights.is_empty() {
                continue;
            }
            out.push((s, highlights));
        }
        debug_assert!(out.windows(2).all(|w| sentence_order(w[0].0, w[1].0).is_le()));
        Ok(out)
    }

    pub fn search(&self, q: &SearchQuery) -> Result<SearchPage, QueryError> {
        let selected = self.select(q)?;
        let total = selected.len();
        let hits = selected
            .into_iter()
            .skip((q.page - 1).saturating_mul(q.page_size))
            .take(q.page_size)
            .map(|(s, highlights)| SearchHit {
                sentence_key: SentenceKey::of(s).to_string(),
                accession_number: s.filing.accession_number.to_string(),
                cik: s.filing.cik,
                company_name: s.filing.company_name.clone(),
                sic: s.filing.sic_group().to_string(),
                reporting_year: assign_reporting_year(&s.filing).year,
                section_item: s.item_id,
                sections: s.sections.clone(),
                sentence_index: s.sentence_index,
                sentence_text: s.sentence_text.clone(),
                keyword_ids: s.keyword_ids.clone(),
                highlights,
            })
            .collect();
        Ok(SearchPage { total, page: q.page, page_size: q.page_size, hits })
    }

    /// Export rows for `q`, ignoring pagination. Keyword queries export the
    /// stored match records; ad-hoc patterns export one row per pattern hit
    /// in the first occurrence of each selected sentence.
    pub fn export(&self, q: &SearchQuery) -> Result<Vec<ExportRow>, QueryError> {
        let matcher = self.matcher(q)?;
        if matcher.as_ref().is_some_and(|m| m.adhoc) {
            let selected = self.select(q)?;
            let mut rows = Vec::new();
            for (s, highlights) in selected {
                for h in highlights {
                    rows.push(ExportRow::from_match(&MatchRecord {
                        filing: s.filing.clone(),
                        item_id: s.item_id,
                        sentence_index: s.sentence_index,
                        keyword_id: h.keyword_id,
                        char_start: s.sentence_start + h.start,
                        char_end: s.sentence_start + h.end,
                        sentence_text: s.sentence_text.clone(),
                    }));
                }
            }
            sort_rows(&mut rows);
            return Ok(rows);
        }
        q.validate()?;
        let matches: Vec<MatchRecord> = self
            .batch
            .matches
            .iter()
            .filter(|m| {
                q.admits_filing(&m.filing, assign_reporting_year(&m.filing).year)
                    && q.admits_item(m.item_id)
                    && (q.keywords.is_empty() || q.keywords.contains(&m.keyword_id))
            })
            .cloned()
            .collect();
        Ok(export_rows(&matches))
    }

    pub fn stats(&self, q: &StatsQuery) -> Result<Vec<StatRow>, QueryError> {
        if self.is_empty() {
            return Err(QueryError::EmptyStore);
        }
        if let (Some(a), Some(b)) = (q.year_from, q.year_to) {
            if a > b {
                return Err(QueryError::Years(a, b));
            }
        }
        let in_range = |y: &i32| q.year_from.is_none_or(|a| *y >= a) && q.year_to.is_none_or(|b| *y <= b);
        let scopes: Vec<Scope> = q.scope.map_or(Scope::ALL.to_vec(), |s| vec![s]);
        let mut rows = Vec::new();
        match q.top_sic {
            None => {
                for scope in scopes {
                    rows.extend(self.index.stat_rows(q.metric, scope).into_iter().filter(|r| in_range(&r.year)));
                }
            }
            Some(n) => {
                // Industry rows only exist for the share of companies.
                for year in self.index.years().into_iter().filter(in_range) {
                    let groups = self.index.industry_breakdown(year, n).unwrap_or_default();
                    for g in groups {
                        rows.extend(g.stat_rows(year).into_iter().filter(|r| scopes.contains(&r.scope)));
                    }
                }
            }
        }
        Ok(rows)
    }
}

fn to_highlights(text: &str, set: &KeywordSet, hits: &[crate::extraction::KeywordHit]) -> Vec<Highlight> {
    let index = OffsetIndex::new(text);
    hits.iter()
        .map(|h| Highlight {
            start: index.char_of(h.start),
            end: index.char_of(h.end),
            keyword_id: set.id(h.keyword).to_string(),
        })
        .collect()
}

/// CSV of stat rows: year, scope, sic_group, metric, value.
pub fn stats_csv(rows: &[StatRow]) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(&mut out);
        w.write_record(["year", "scope", "sic_group", "metric", "value"])
            .expect("writing to memory");
        for r in rows {
            w.write_record([
                r.year.to_string(),
                r.scope.to_string(),
                r.sic_group.clone().unwrap_or_default(),
                r.metric.to_string(),
                r.value.to_string(),
            ])
            .expect("writing to memory");
        }
        w.flush().expect("writing to memory");
    }
    out
}
