//! Normalization of raw 10-K documents and segmentation into standard Items.

mod normalize;
mod segment;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use normalize::{normalize, normalize_bytes, Normalized};
pub use segment::{segment_items, SegmentOptions};

use crate::filing::{FilingRef, ItemId, RawFiling};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("document is empty")]
    Empty,
    #[error("document contains no text")]
    NoText,
    #[error("section {item} would span [{start}, {end}): selected headings overlap")]
    Overlap { item: ItemId, start: usize, end: usize },
    #[error("invalid section table: {0}")]
    InvalidSections(String),
}

/// One Item of a filing. Offsets are char offsets into the normalized text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilingSection {
    pub item_id: ItemId,
    pub title: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ParsedFilingRecord")]
pub struct ParsedFiling {
    pub filing: FilingRef,
    pub text: String,
    pub sections: Vec<FilingSection>,
}

#[derive(Deserialize)]
struct ParsedFilingRecord {
    filing: FilingRef,
    text: String,
    sections: Vec<FilingSection>,
}

impl TryFrom<ParsedFilingRecord> for ParsedFiling {
    type Error = ParseError;

    fn try_from(r: ParsedFilingRecord) -> Result<Self, Self::Error> {
        let parsed = ParsedFiling {
            filing: r.filing,
            text: r.text,
            sections: r.sections,
        };
        parsed.validate()?;
        Ok(parsed)
    }
}

impl ParsedFiling {
    /// Checks ordering, bounds, and uniqueness of the section table.
    pub fn validate(&self) -> Result<(), ParseError> {
        let len = self.text.chars().count();
        let mut seen = std::collections::BTreeSet::new();
        let mut prev_end = 0;
        for s in &self.sections {
            if s.start >= s.end || s.end > len {
                return Err(ParseError::InvalidSections(format!(
                    "section {} [{}, {}) outside text of {} chars",
                    s.item_id, s.start, s.end, len
                )));
            }
            if s.start < prev_end {
                return Err(ParseError::InvalidSections(format!(
                    "section {} overlaps its predecessor",
                    s.item_id
                )));
            }
            if !seen.insert(s.item_id) {
                return Err(ParseError::InvalidSections(format!(
                    "duplicate section {}",
                    s.item_id
                )));
            }
            prev_end = s.end;
        }
        Ok(())
    }

    pub fn section(&self, item: ItemId) -> Option<&FilingSection> {
        self.sections.iter().find(|s| s.item_id == item)
    }

    /// The exact text of an Item, if the filing has it.
    pub fn section_text(&self, item: ItemId) -> Option<&str> {
        self.section(item).map(|s| self.slice(s.start, s.end))
    }

    /// Slice the normalized text by char offsets.
    pub fn slice(&self, start: usize, end: usize) -> &str {
        crate::offsets::char_slice(&self.text, start, end)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("parsed filing serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}

pub fn get_section(parsed: &ParsedFiling, item: ItemId) -> Option<&str> {
    parsed.section_text(item)
}

/// Normalize and segment one raw filing.
pub fn parse_filing(raw: &RawFiling, opts: &SegmentOptions) -> Result<ParsedFiling, ParseError> {
    let text = normalize(raw)?;
    let sections = segment_items(&text, opts)?;
    let parsed = ParsedFiling {
        filing: raw.filing.clone(),
        text,
        sections,
    };
    parsed.validate()?;
    Ok(parsed)
}
