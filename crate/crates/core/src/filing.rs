use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FilingRefError {
    #[error("accession number {0:?} does not match NNNNNNNNNN-NN-NNNNNN")]
    Accession(String),
    #[error("cik must be a positive integer")]
    Cik,
    #[error("form type is empty")]
    EmptyForm,
    #[error("period end {period_end} is after filing date {filing_date}")]
    PeriodAfterFiling {
        period_end: NaiveDate,
        filing_date: NaiveDate,
    },
    #[error("sic code {0:?} is not a 4-digit code")]
    Sic(String),
}

/// EDGAR accession number, `NNNNNNNNNN-NN-NNNNNN`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AccessionNumber(String);

impl AccessionNumber {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The accession number without dashes, as used in archive paths.
    pub fn compact(&self) -> String {
        self.0.replace('-', "")
    }
}

impl FromStr for AccessionNumber {
    type Err = FilingRefError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        let shape_ok = bytes.len() == 20
            && bytes.iter().enumerate().all(|(i, b)| match i {
                10 | 13 => *b == b'-',
                _ => b.is_ascii_digit(),
            });
        if shape_ok {
            Ok(Self(s.to_string()))
        } else {
            Err(FilingRefError::Accession(s.to_string()))
        }
    }
}

impl TryFrom<String> for AccessionNumber {
    type Error = FilingRefError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<AccessionNumber> for String {
    fn from(value: AccessionNumber) -> Self {
        value.0
    }
}

impl fmt::Display for AccessionNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One 10-K submission as listed by the archive index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FilingRefRecord")]
pub struct FilingRef {
    pub cik: u64,
    pub accession_number: AccessionNumber,
    pub form_type: String,
    pub filing_date: NaiveDate,
    pub period_end: Option<NaiveDate>,
    pub company_name: String,
    pub sic: Option<String>,
    /// File name of the primary document inside the submission folder.
    pub primary_document: Option<String>,
}

#[derive(Deserialize)]
struct FilingRefRecord {
    cik: u64,
    accession_number: AccessionNumber,
    form_type: String,
    filing_date: NaiveDate,
    period_end: Option<NaiveDate>,
    company_name: String,
    sic: Option<String>,
    #[serde(default)]
    primary_document: Option<String>,
}

impl TryFrom<FilingRefRecord> for FilingRef {
    type Error = FilingRefError;

    fn try_from(r: FilingRefRecord) -> Result<Self, Self::Error> {
        let filing = FilingRef {
            cik: r.cik,
            accession_number: r.accession_number,
            form_type: r.form_type,
            filing_date: r.filing_date,
            period_end: r.period_end,
            company_name: r.company_name,
            sic: r.sic,
            primary_document: r.primary_document,
        };
        filing.validate()?;
        Ok(filing)
    }
}

impl FilingRef {
    pub fn validate(&self) -> Result<(), FilingRefError> {
        if self.cik == 0 {
            return Err(FilingRefError::Cik);
        }
        if self.form_type.trim().is_empty() {
            return Err(FilingRefError::EmptyForm);
        }
        if let Some(period_end) = self.period_end {
            if period_end > self.filing_date {
                return Err(FilingRefError::PeriodAfterFiling {
                    period_end,
                    filing_date: self.filing_date,
                });
            }
        }
        if let Some(sic) = &self.sic {
            if sic.len() != 4 || !sic.bytes().all(|b| b.is_ascii_digit()) {
                return Err(FilingRefError::Sic(sic.clone()));
            }
        }
        Ok(())
    }

    /// SIC code, or `"UNKNOWN"` when the index carried none.
    pub fn sic_group(&self) -> &str {
        self.sic.as_deref().unwrap_or(UNKNOWN_SIC)
    }
}

pub const UNKNOWN_SIC: &str = "UNKNOWN";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentKind {
    Html,
    PlainText,
}

impl ContentKind {
    /// Guess from a document file name.
    pub fn from_document_name(name: &str) -> Self {
        let lower = name.to_ascii_lowercase();
        if lower.ends_with(".htm") || lower.ends_with(".html") {
            ContentKind::Html
        } else {
            ContentKind::PlainText
        }
    }
}

/// The primary document of a filing, as downloaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFiling {
    pub filing: FilingRef,
    pub content: Vec<u8>,
    pub content_kind: ContentKind,
    pub retrieved_at: DateTime<Utc>,
    pub source_url: String,
}

/// Standard 10-K Items, in the order they appear in a filing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ItemId {
    Item1,
    Item1A,
    Item1B,
    Item1C,
    Item2,
    Item3,
    Item4,
    Item5,
    Item6,
    Item7,
    Item7A,
    Item8,
    Item9,
    Item9A,
    Item9B,
    Item9C,
    Item10,
    Item11,
    Item12,
    Item13,
    Item14,
    Item15,
    Item16,
    Other,
}

impl ItemId {
    pub const STANDARD: [ItemId; 23] = [
        ItemId::Item1,
        ItemId::Item1A,
        ItemId::Item1B,
        ItemId::Item1C,
        ItemId::Item2,
        ItemId::Item3,
        ItemId::Item4,
        ItemId::Item5,
        ItemId::Item6,
        ItemId::Item7,
        ItemId::Item7A,
        ItemId::Item8,
        ItemId::Item9,
        ItemId::Item9A,
        ItemId::Item9B,
        ItemId::Item9C,
        ItemId::Item10,
        ItemId::Item11,
        ItemId::Item12,
        ItemId::Item13,
        ItemId::Item14,
        ItemId::Item15,
        ItemId::Item16,
    ];

    pub const BUSINESS: ItemId = ItemId::Item1;
    pub const RISK_FACTORS: ItemId = ItemId::Item1A;

    pub fn as_str(self) -> &'static str {
        match self {
            ItemId::Item1 => "1",
            ItemId::Item1A => "1A",
            ItemId::Item1B => "1B",
            ItemId::Item1C => "1C",
            ItemId::Item2 => "2",
            ItemId::Item3 => "3",
            ItemId::Item4 => "4",
            ItemId::Item5 => "5",
            ItemId::Item6 => "6",
            ItemId::Item7 => "7",
            ItemId::Item7A => "7A",
            ItemId::Item8 => "8",
            ItemId::Item9 => "9",
            ItemId::Item9A => "9A",
            ItemId::Item9B => "9B",
            ItemId::Item9C => "9C",
            ItemId::Item10 => "10",
            ItemId::Item11 => "11",
            ItemId::Item12 => "12",
            ItemId::Item13 => "13",
            ItemId::Item14 => "14",
            ItemId::Item15 => "15",
            ItemId::Item16 => "16",
            ItemId::Other => "OTHER",
        }
    }

    /// Look up a standard item from its printed number and optional letter.
    pub fn from_parts(number: u32, letter: Option<char>) -> Option<ItemId> {
        let letter = letter.map(|c| c.to_ascii_uppercase());
        let id = match (number, letter) {
            (1, None) => ItemId::Item1,
            (1, Some('A')) => ItemId::Item1A,
            (1, Some('B')) => ItemId::Item1B,
            (1, Some('C')) => ItemId::Item1C,
            (2, None) => ItemId::Item2,
            (3, None) => ItemId::Item3,
            (4, None) => ItemId::Item4,
            (5, None) => ItemId::Item5,
            (6, None) => ItemId::Item6,
            (7, None) => ItemId::Item7,
            (7, Some('A')) => ItemId::Item7A,
            (8, None) => ItemId::Item8,
            (9, None) => ItemId::Item9,
            (9, Some('A')) => ItemId::Item9A,
            (9, Some('B')) => ItemId::Item9B,
            (9, Some('C')) => ItemId::Item9C,
            (10, None) => ItemId::Item10,
            (11, None) => ItemId::Item11,
            (12, None) => ItemId::Item12,
            (13, None) => ItemId::Item13,
            (14, None) => ItemId::Item14,
            (15, None) => ItemId::Item15,
            (16, None) => ItemId::Item16,
            _ => return None,
        };
        Some(id)
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown item id {0:?}")]
pub struct UnknownItem(pub String);

impl FromStr for ItemId {
    type Err = UnknownItem;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let t = t
            .strip_prefix("Item ")
            .or_else(|| t.strip_prefix("item "))
            .or_else(|| t.strip_prefix("ITEM "))
            .unwrap_or(t);
        if t.eq_ignore_ascii_case("other") {
            return Ok(ItemId::Other);
        }
        let digits_end = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
        let number: u32 = t[..digits_end]
            .parse()
            .map_err(|_| UnknownItem(s.to_string()))?;
        let rest = &t[digits_end..];
        let letter = match rest.chars().count() {
            0 => None,
            1 => rest.chars().next(),
            _ => return Err(UnknownItem(s.to_string())),
        };
        ItemId::from_parts(number, letter).ok_or_else(|| UnknownItem(s.to_string()))
    }
}

impl TryFrom<String> for ItemId {
    type Error = UnknownItem;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<ItemId> for String {
    fn from(value: ItemId) -> Self {
        value.as_str().to_string()
    }
}
