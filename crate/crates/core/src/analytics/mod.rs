//! Corpus statistics: per-year mention rates, sentence averages, section
//! shares, Business/Risk overlap, industry breakdowns and growth.
//!
//! "Company" means one 10-K per CIK and reporting year; when a company has
//! several filings attributed to the same year the latest filing date wins.
//! Rates are normalized by the number of such filings in the year.

mod precision;
mod year;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

pub use precision::{
    precision_lower_bound, precision_lower_bound_with_tail, BoundMethod, PrecisionBound,
    PrecisionError, Tail,
};
pub use year::{assign_reporting_year, ReportingYear};

use crate::extraction::{MatchRecord, SentenceRecord};
use crate::filing::{FilingRef, ItemId, UNKNOWN_SIC};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("no filings in reporting year {0}")]
    NoFilings(i32),
    #[error("no filings with {scope} mentions in {year}; average undefined")]
    EmptyDenominator { year: i32, scope: Scope },
    #[error("corpus has no keyword matches")]
    NoMatches,
    #[error("{metric} in {scope} is zero in baseline year {year}")]
    ZeroBaseline { metric: Metric, scope: Scope, year: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    All,
    Business,
    Risk,
}

impl Scope {
    pub const ALL: [Scope; 3] = [Scope::All, Scope::Business, Scope::Risk];

    pub fn includes(self, item: ItemId) -> bool {
        match self {
            Scope::All => true,
            Scope::Business => item == ItemId::BUSINESS,
            Scope::Risk => item == ItemId::RISK_FACTORS,
        }
    }

    fn covers(self, sentence: &SentenceRecord) -> bool {
        match self {
            Scope::All => true,
            Scope::Business => sentence.in_item(ItemId::BUSINESS),
            Scope::Risk => sentence.in_item(ItemId::RISK_FACTORS),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::Business => "business",
            Scope::Risk => "risk",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(Scope::All),
            "business" | "1" => Ok(Scope::Business),
            "risk" | "1a" => Ok(Scope::Risk),
            other => Err(format!("unknown scope {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PctCompanies,
    /// Mean unique sentences over filings with at least one in scope.
    AvgUniqueSentences,
    /// Mean unique sentences over all filings of the year.
    AvgUniqueSentencesAll,
    TotalMatches,
    TotalSentences,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::PctCompanies,
        Metric::AvgUniqueSentences,
        Metric::AvgUniqueSentencesAll,
        Metric::TotalMatches,
        Metric::TotalSentences,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::PctCompanies => "pct_companies",
            Metric::AvgUniqueSentences => "avg_unique_sentences",
            Metric::AvgUniqueSentencesAll => "avg_unique_sentences_all",
            Metric::TotalMatches => "total_matches",
            Metric::TotalSentences => "total_sentences",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pct" | "pct_companies" => Ok(Metric::PctCompanies),
            "avg" | "avg_unique_sentences" => Ok(Metric::AvgUniqueSentences),
            "avg_all" | "avg_unique_sentences_all" => Ok(Metric::AvgUniqueSentencesAll),
            "matches" | "total_matches" => Ok(Metric::TotalMatches),
            "sentences" | "total_sentences" => Ok(Metric::TotalSentences),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

/// Whether an average counts only filings with a mention, or all filings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanMode {
    Conditional,
    Unconditional,
}

/// One aggregation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub year: i32,
    pub scope: Scope,
    pub sic_group: Option<String>,
    pub metric: Metric,
    pub value: f64,
}

/// A filing in the corpus manifest, with the items the parser found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFiling {
    pub filing: FilingRef,
    pub sections_present: BTreeSet<ItemId>,
}

#[derive(Debug, Clone)]
struct Entry {
    filing: FilingRef,
    year: ReportingYear,
    sections_present: BTreeSet<ItemId>,
    sentences: Vec<SentenceRecord>,
    matches: Vec<MatchRecord>,
}

impl Entry {
    fn has(&self, scope: Scope) -> bool {
        self.sentences.iter().any(|s| scope.covers(s))
    }

    fn sentences_in(&self, scope: Scope) -> usize {
        self.sentences.iter().filter(|s| scope.covers(s)).count()
    }

    fn matches_in(&self, scope: Scope) -> usize {
        self.matches.iter().filter(|m| scope.includes(m.item_id)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub both: f64,
    pub risk_only: f64,
    pub business_only: f64,
    pub neither: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndustryGroup {
    pub sic: String,
    pub filings: usize,
    pub pct_all: f64,
    pub pct_business: f64,
    pub pct_risk: f64,
}

impl IndustryGroup {
    pub fn stat_rows(&self, year: i32) -> Vec<StatRow> {
        [
            (Scope::All, self.pct_all),
            (Scope::Business, self.pct_business),
            (Scope::Risk, self.pct_risk),
        ]
        .into_iter()
        .map(|(scope, value)| StatRow {
            year,
            scope,
            sic_group: Some(self.sic.clone()),
            metric: Metric::PctCompanies,
            value,
        })
        .collect()
    }
}

/// Immutable, deduplicated view of a corpus for aggregation.
#[derive(Debug, Clone, Default)]
pub struct CorpusIndex {
    entries: Vec<Entry>,
    by_year: BTreeMap<i32, Vec<usize>>,
}

impl CorpusIndex {
    pub fn build(filings: &[CorpusFiling], matches: &[MatchRecord], sentences: &[SentenceRecord]) -> Self {
        // One filing per (cik, reporting year): latest filing date, then
        // highest accession number.
        let mut chosen: BTreeMap<(u64, i32), &CorpusFiling> = BTreeMap::new();
        for f in filings {
            let year = assign_reporting_year(&f.filing).year;
            chosen
                .entry((f.filing.cik, year))
                .and_modify(|cur| {
                    let newer = (f.filing.filing_date, &f.filing.accession_number)
                        > (cur.filing.filing_date, &cur.filing.accession_number);
                    if newer {
                        *cur = f;
                    }
                })
                .or_insert(f);
        }

        let mut entries: Vec<Entry> = chosen
            .into_values()
            .map(|f| Entry {
                filing: f.filing.clone(),
                year: assign_reporting_year(&f.filing),
                sections_present: f.sections_present.clone(),
                sentences: Vec::new(),
                matches: Vec::new(),
            })
            .collect();
        entries.sort_by(|a, b| {
            (a.filing.cik, &a.filing.accession_number).cmp(&(b.filing.cik, &b.filing.accession_number))
        });

        let slot: HashMap<&str, usize> = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.filing.accession_number.as_str(), i))
            .collect();
        let mut unknown = 0usize;
        let mut placed_sentences = vec![Vec::new(); entries.len()];
        let mut placed_matches = vec![Vec::new(); entries.len()];
        for s in sentences {
            match slot.get(s.filing.accession_number.as_str()) {
                Some(&i) => placed_sentences[i].push(s.clone()),
                None => unknown += 1,
            }
        }
        for m in matches {
            match slot.get(m.filing.accession_number.as_str()) {
                Some(&i) => placed_matches[i].push(m.clone()),
                None => unknown += 1,
            }
        }
        if unknown > 0 {
            warn!(unknown, "records of superseded or unlisted filings ignored");
        }
        for ((e, s), m) in entries.iter_mut().zip(placed_sentences).zip(placed_matches) {
            e.sentences = s;
            e.matches = m;
        }

        let mut by_year: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            by_year.entry(e.year.year).or_default().push(i);
        }
        Self { entries, by_year }
    }

    pub fn years(&self) -> Vec<i32> {
        self.by_year.keys().copied().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn filing_count(&self, year: i32) -> usize {
        self.by_year.get(&year).map_or(0, Vec::len)
    }

    /// Filings retained after per-company deduplication.
    pub fn filings(&self) -> impl Iterator<Item = &FilingRef> {
        self.entries.iter().map(|e| &e.filing)
    }

    pub fn reporting_year(&self, accession: &str) -> Option<ReportingYear> {
        self.entries
            .iter()
            .find(|e| e.filing.accession_number.as_str() == accession)
            .map(|e| e.year)
    }

    pub fn sections_present(&self, accession: &str) -> Option<&BTreeSet<ItemId>> {
        self.entries
            .iter()
            .find(|e| e.filing.accession_number.as_str() == accession)
            .map(|e| &e.sections_present)
    }

    /// Retained filings of one reporting year, ordered by (cik, accession).
    pub fn year_filings(&self, year: i32) -> Vec<&FilingRef> {
        self.by_year
            .get(&year)
            .into_iter()
            .flatten()
            .map(|&i| &self.entries[i].filing)
            .collect()
    }

    /// Whether a retained filing has at least one sentence in `scope`.
    pub fn mentions(&self, accession: &str, scope: Scope) -> bool {
        self.entries
            .iter()
            .any(|e| e.filing.accession_number.as_str() == accession && e.has(scope))
    }

    /// Unique sentences of one retained filing.
    pub fn sentences_of(&self, accession: &str) -> &[SentenceRecord] {
        self.entries
            .iter()
            .find(|e| e.filing.accession_number.as_str() == accession)
            .map_or(&[], |e| &e.sentences)
    }

    fn year_entries(&self, year: i32) -> Result<Vec<&Entry>, AnalyticsError> {
        match self.by_year.get(&year) {
            Some(ix) if !ix.is_empty() => Ok(ix.iter().map(|&i| &self.entries[i]).collect()),
            _ => Err(AnalyticsError::NoFilings(year)),
        }
    }

    /// Filings of `year` that mention a keyword in `scope`, over all filings
    /// of `year`.
    pub fn pct_companies(&self, year: i32, scope: Scope) -> Result<f64, AnalyticsError> {
        let entries = self.year_entries(year)?;
        let hits = entries.iter().filter(|e| e.has(scope)).count();
        Ok(hits as f64 / entries.len() as f64)
    }

    pub fn avg_unique_sentences(&self, year: i32, scope: Scope, mode: MeanMode) -> Result<f64, AnalyticsError> {
        let entries = self.year_entries(year)?;
        let total: usize = entries.iter().map(|e| e.sentences_in(scope)).sum();
        let denominator = match mode {
            MeanMode::Conditional => entries.iter().filter(|e| e.has(scope)).count(),
            MeanMode::Unconditional => entries.len(),
        };
        if denominator == 0 {
            return Err(AnalyticsError::EmptyDenominator { year, scope });
        }
        Ok(total as f64 / denominator as f64)
    }

    pub fn total_matches(&self, year: i32, scope: Scope) -> Result<usize, AnalyticsError> {
        Ok(self.year_entries(year)?.iter().map(|e| e.matches_in(scope)).sum())
    }

    pub fn total_sentences(&self, year: i32, scope: Scope) -> Result<usize, AnalyticsError> {
        Ok(self.year_entries(year)?.iter().map(|e| e.sentences_in(scope)).sum())
    }

    pub fn metric(&self, metric: Metric, year: i32, scope: Scope) -> Result<f64, AnalyticsError> {
        match metric {
            Metric::PctCompanies => self.pct_companies(year, scope),
            Metric::AvgUniqueSentences => self.avg_unique_sentences(year, scope, MeanMode::Conditional),
            Metric::AvgUniqueSentencesAll => self.avg_unique_sentences(year, scope, MeanMode::Unconditional),
            Metric::TotalMatches => self.total_matches(year, scope).map(|v| v as f64),
            Metric::TotalSentences => self.total_sentences(year, scope).map(|v| v as f64),
        }
    }

    /// Share of all matches falling in each item.
    pub fn section_share(&self) -> Result<BTreeMap<ItemId, f64>, AnalyticsError> {
        let mut counts: BTreeMap<ItemId, usize> = BTreeMap::new();
        for m in self.entries.iter().flat_map(|e| &e.matches) {
            *counts.entry(m.item_id).or_default() += 1;
        }
        let total: usize = counts.values().sum();
        if total == 0 {
            return Err(AnalyticsError::NoMatches);
        }
        Ok(counts
            .into_iter()
            .map(|(item, c)| (item, c as f64 / total as f64))
            .collect())
    }

    pub fn cross_section_overlap(&self, year: i32) -> Result<Overlap, AnalyticsError> {
        let entries = self.year_entries(year)?;
        let (mut both, mut risk_only, mut business_only, mut neither) = (0usize, 0usize, 0usize, 0usize);
        for e in &entries {
            match (e.has(Scope::Business), e.has(Scope::Risk)) {
                (true, true) => both += 1,
                (false, true) => risk_only += 1,
                (true, false) => business_only += 1,
                (false, false) => neither += 1,
            }
        }
        let n = entries.len() as f64;
        Ok(Overlap {
            both: both as f64 / n,
            risk_only: risk_only as f64 / n,
            business_only: business_only as f64 / n,
            neither: neither as f64 / n,
        })
    }

    /// The `top_n` SIC codes with most filings in `year` (ties by ascending
    /// code; filings without SIC are never ranked) and their mention rates.
    pub fn industry_breakdown(&self, year: i32, top_n: usize) -> Result<Vec<IndustryGroup>, AnalyticsError> {
        let entries = self.year_entries(year)?;
        let mut groups: BTreeMap<&str, Vec<&Entry>> = BTreeMap::new();
        for e in entries {
            groups.entry(e.filing.sic_group()).or_default().push(e);
        }
        groups.remove(UNKNOWN_SIC);
        let mut ranked: Vec<(&str, Vec<&Entry>)> = groups.into_iter().collect();
        ranked.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));
        ranked.truncate(top_n);
        Ok(ranked
            .into_iter()
            .map(|(sic, members)| {
                let n = members.len() as f64;
                let pct = |scope| members.iter().filter(|e| e.has(scope)).count() as f64 / n;
                IndustryGroup {
                    sic: sic.to_string(),
                    filings: members.len(),
                    pct_all: pct(Scope::All),
                    pct_business: pct(Scope::Business),
                    pct_risk: pct(Scope::Risk),
                }
            })
            .collect())
    }

    pub fn growth_multiplier(&self, metric: Metric, scope: Scope, from: i32, to: i32) -> Result<f64, AnalyticsError> {
        let base = self.metric(metric, from, scope)?;
        if base == 0.0 {
            return Err(AnalyticsError::ZeroBaseline { metric, scope, year: from });
        }
        Ok(self.metric(metric, to, scope)? / base)
    }

    /// One row per year where the metric is defined.
    pub fn stat_rows(&self, metric: Metric, scope: Scope) -> Vec<StatRow> {
        self.years()
            .into_iter()
            .filter_map(|year| {
                self.metric(metric, year, scope).ok().map(|value| StatRow {
                    year,
                    scope,
                    sic_group: None,
                    metric,
                    value,
                })
            })
            .collect()
    }

    /// Every metric for every scope and year.
    pub fn all_stat_rows(&self) -> Vec<StatRow> {
        let mut rows = Vec::new();
        for metric in Metric::ALL {
            for scope in Scope::ALL {
                rows.extend(self.stat_rows(metric, scope));
            }
        }
        rows
    }

    /// Per year: share of companies mentioning keywords anywhere and the
    /// conditional mean of unique sentences.
    pub fn mention_table(&self) -> Vec<MentionRow> {
        self.years()
            .into_iter()
            .filter_map(|year| {
                Some(MentionRow {
                    year,
                    filings: self.filing_count(year),
                    pct_companies: self.pct_companies(year, Scope::All).ok()?,
                    avg_unique_sentences: self
                        .avg_unique_sentences(year, Scope::All, MeanMode::Conditional)
                        .ok(),
                })
            })
            .collect()
    }

    /// Per year: share of companies mentioning keywords in Item 1 and Item 1A.
    pub fn section_trend(&self) -> Vec<SectionTrendRow> {
        self.years()
            .into_iter()
            .filter_map(|year| {
                Some(SectionTrendRow {
                    year,
                    pct_business: self.pct_companies(year, Scope::Business).ok()?,
                    pct_risk: self.pct_companies(year, Scope::Risk).ok()?,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionRow {
    pub year: i32,
    pub filings: usize,
    pub pct_companies: f64,
    pub avg_unique_sentences: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionTrendRow {
    pub year: i32,
    pub pct_business: f64,
    pub pct_risk: f64,
}
