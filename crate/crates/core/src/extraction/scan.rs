use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::info;

use super::keywords::KeywordSet;
use super::sentences::{normalized_key, split_sentences};
use crate::filing::{FilingRef, ItemId};
use crate::offsets::OffsetIndex;
use crate::parser::ParsedFiling;

/// One keyword occurrence. Offsets are char offsets into the filing's
/// normalized text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MatchRecordRow")]
pub struct MatchRecord {
    pub filing: FilingRef,
    pub item_id: ItemId,
    pub sentence_index: usize,
    pub keyword_id: String,
    pub char_start: usize,
    pub char_end: usize,
    pub sentence_text: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecordError {
    #[error("match span [{0}, {1}) is empty or reversed")]
    Span(usize, usize),
    #[error("sentence text is empty")]
    EmptySentence,
    #[error("sentence record has no keyword ids")]
    NoKeywords,
    #[error("normalized key does not match sentence text")]
    Key,
}

#[derive(Deserialize)]
struct MatchRecordRow {
    filing: FilingRef,
    item_id: ItemId,
    sentence_index: usize,
    keyword_id: String,
    char_start: usize,
    char_end: usize,
    sentence_text: String,
}

impl TryFrom<MatchRecordRow> for MatchRecord {
    type Error = RecordError;

    fn try_from(r: MatchRecordRow) -> Result<Self, Self::Error> {
        let m = MatchRecord {
            filing: r.filing,
            item_id: r.item_id,
            sentence_index: r.sentence_index,
            keyword_id: r.keyword_id,
            char_start: r.char_start,
            char_end: r.char_end,
            sentence_text: r.sentence_text,
        };
        m.validate()?;
        Ok(m)
    }
}

impl MatchRecord {
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.char_start >= self.char_end {
            return Err(RecordError::Span(self.char_start, self.char_end));
        }
        if self.sentence_text.is_empty() {
            return Err(RecordError::EmptySentence);
        }
        Ok(())
    }
}

/// A unique (per filing) sentence containing at least one keyword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SentenceRecordRow")]
pub struct SentenceRecord {
    pub filing: FilingRef,
    /// Item of the first occurrence.
    pub item_id: ItemId,
    /// Sentence index of the first occurrence within its item.
    pub sentence_index: usize,
    /// Char offset of the first occurrence in the normalized text.
    pub sentence_start: usize,
    pub sentence_text: String,
    pub normalized_key: String,
    pub keyword_ids: BTreeSet<String>,
    /// Every item in which the sentence occurs.
    pub sections: BTreeSet<ItemId>,
}

#[derive(Deserialize)]
struct SentenceRecordRow {
    filing: FilingRef,
    item_id: ItemId,
    sentence_index: usize,
    sentence_start: usize,
    sentence_text: String,
    normalized_key: String,
    keyword_ids: BTreeSet<String>,
    sections: BTreeSet<ItemId>,
}

impl TryFrom<SentenceRecordRow> for SentenceRecord {
    type Error = RecordError;

    fn try_from(r: SentenceRecordRow) -> Result<Self, Self::Error> {
        let s = SentenceRecord {
            filing: r.filing,
            item_id: r.item_id,
            sentence_index: r.sentence_index,
            sentence_start: r.sentence_start,
            sentence_text: r.sentence_text,
            normalized_key: r.normalized_key,
            keyword_ids: r.keyword_ids,
            sections: r.sections,
        };
        s.validate()?;
        Ok(s)
    }
}

impl SentenceRecord {
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.sentence_text.is_empty() {
            return Err(RecordError::EmptySentence);
        }
        if self.keyword_ids.is_empty() {
            return Err(RecordError::NoKeywords);
        }
        if normalized_key(&self.sentence_text) != self.normalized_key {
            return Err(RecordError::Key);
        }
        Ok(())
    }

    pub fn in_item(&self, item: ItemId) -> bool {
        self.sections.contains(&item)
    }
}

/// Which items of a filing to scan.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SectionSelection {
    #[default]
    All,
    Items(BTreeSet<ItemId>),
}

impl SectionSelection {
    pub fn items<I: IntoIterator<Item = ItemId>>(items: I) -> Self {
        SectionSelection::Items(items.into_iter().collect())
    }

    pub fn includes(&self, item: ItemId) -> bool {
        match self {
            SectionSelection::All => true,
            SectionSelection::Items(items) => items.contains(&item),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanOutput {
    pub matches: Vec<MatchRecord>,
    pub sentences: Vec<SentenceRecord>,
    /// Requested items the filing does not have.
    pub missing_sections: Vec<ItemId>,
}

/// Scan the selected items of a filing.
///
/// Every keyword hit yields one [`MatchRecord`]. Sentences are deduplicated
/// per filing by normalized key; keyword ids and items are unioned into the
/// first occurrence.
pub fn scan(parsed: &ParsedFiling, keywords: &KeywordSet, selection: &SectionSelection) -> ScanOutput {
    let mut out = ScanOutput::default();
    if let SectionSelection::Items(items) = selection {
        for item in items {
            if parsed.section(*item).is_none() {
                info!(
                    accession = %parsed.filing.accession_number,
                    item = %item,
                    "requested section absent; skipped"
                );
                out.missing_sections.push(*item);
            }
        }
    }

    let index = OffsetIndex::new(&parsed.text);
    let mut by_key: HashMap<String, usize> = HashMap::new();

    for section in parsed.sections.iter().filter(|s| selection.includes(s.item_id)) {
        let section_byte = index.byte_of(section.start);
        let section_text = &parsed.text[section_byte..index.byte_of(section.end)];
        for (sentence_index, span) in split_sentences(section_text).into_iter().enumerate() {
            let sentence = &section_text[span.clone()];
            let hits = keywords.find_all(sentence);
            if hits.is_empty() {
                continue;
            }
            let base = section_byte + span.start;
            for hit in &hits {
                out.matches.push(MatchRecord {
                    filing: parsed.filing.clone(),
                    item_id: section.item_id,
                    sentence_index,
                    keyword_id: keywords.id(hit.keyword).to_string(),
                    char_start: index.char_of(base + hit.start),
                    char_end: index.char_of(base + hit.end),
                    sentence_text: sentence.to_string(),
                });
            }
            let key = normalized_key(sentence);
            let slot = *by_key.entry(key.clone()).or_insert_with(|| {
                out.sentences.push(SentenceRecord {
                    filing: parsed.filing.clone(),
                    item_id: section.item_id,
                    sentence_index,
                    sentence_start: index.char_of(base),
                    sentence_text: sentence.to_string(),
                    normalized_key: key,
                    keyword_ids: BTreeSet::new(),
                    sections: BTreeSet::new(),
                });
                out.sentences.len() - 1
            });
            let record = &mut out.sentences[slot];
            record.sections.insert(section.item_id);
            record
                .keyword_ids
                .extend(hits.iter().map(|h| keywords.id(h.keyword).to_string()));
        }
    }
    out
}
