//! Spreadsheet-compatible exports of match records.
//!
//! CSV is the normative format: UTF-8, a header row, CRLF line endings and
//! RFC 4180 quoting. The xlsx variant holds the same grid.

use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::assign_reporting_year;
use crate::extraction::MatchRecord;
use crate::filing::{AccessionNumber, ItemId, UNKNOWN_SIC};

pub const COLUMNS: [&str; 11] = [
    "accession_number",
    "cik",
    "company_name",
    "sic",
    "reporting_year",
    "section_item",
    "sentence_index",
    "keyword_id",
    "char_start",
    "char_end",
    "sentence_text",
];

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Destination { path: String, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[cfg(feature = "xlsx")]
    #[error("xlsx: {0}")]
    Xlsx(#[from] rust_xlsxwriter::XlsxError),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("unsupported export format {0:?}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    Xlsx,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Xlsx => "xlsx",
        }
    }

    pub fn content_type(self) -> &'static str {
        match self {
            ExportFormat::Csv => "text/csv; charset=utf-8",
            ExportFormat::Xlsx => "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = ExportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "xlsx" => Ok(ExportFormat::Xlsx),
            other => Err(ExportError::Format(other.to_string())),
        }
    }
}

/// One exported line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRow {
    pub accession_number: String,
    pub cik: u64,
    pub company_name: String,
    pub sic: String,
    pub reporting_year: i32,
    pub section_item: String,
    pub sentence_index: usize,
    pub keyword_id: String,
    pub char_start: usize,
    pub char_end: usize,
    pub sentence_text: String,
}

impl ExportRow {
    pub fn from_match(m: &MatchRecord) -> Self {
        ExportRow {
            accession_number: m.filing.accession_number.to_string(),
            cik: m.filing.cik,
            company_name: m.filing.company_name.clone(),
            sic: m.filing.sic.clone().unwrap_or_else(|| UNKNOWN_SIC.to_string()),
            reporting_year: assign_reporting_year(&m.filing).year,
            section_item: m.item_id.to_string(),
            sentence_index: m.sentence_index,
            keyword_id: m.keyword_id.clone(),
            char_start: m.char_start,
            char_end: m.char_end,
            sentence_text: m.sentence_text.clone(),
        }
    }

    /// Re-check the record invariants of a row read back from a file.
    pub fn validate(&self) -> Result<(), String> {
        self.accession_number
            .parse::<AccessionNumber>()
            .map_err(|e| e.to_string())?;
        self.section_item
            .parse::<ItemId>()
            .map_err(|e| e.to_string())?;
        if self.cik == 0 {
            return Err("cik must be positive".into());
        }
        if self.char_start >= self.char_end {
            return Err(format!("span [{}, {}) is empty", self.char_start, self.char_end));
        }
        if self.sentence_text.is_empty() {
            return Err("sentence text is empty".into());
        }
        if self.keyword_id.is_empty() {
            return Err("keyword id is empty".into());
        }
        Ok(())
    }

    fn sort_key(&self) -> (u64, &str, ItemId, usize, usize, &str) {
        (
            self.cik,
            &self.accession_number,
            self.section_item.parse().unwrap_or(ItemId::Other),
            self.sentence_index,
            self.char_start,
            &self.keyword_id,
        )
    }
}

/// Rows in export order: cik, accession, item (canonical order), sentence,
/// then char offset and keyword id so that ties are fully resolved.
pub fn export_rows(matches: &[MatchRecord]) -> Vec<ExportRow> {
    let mut rows: Vec<ExportRow> = matches.iter().map(ExportRow::from_match).collect();
    sort_rows(&mut rows);
    rows
}

pub fn sort_rows(rows: &mut [ExportRow]) {
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

pub fn write_csv<W: Write>(rows: &[ExportRow], writer: W) -> Result<(), ExportError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .has_headers(false)
        .from_writer(writer);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_bytes(rows: &[ExportRow]) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(rows, &mut out).expect("writing to memory");
    out
}

/// Parse an exported csv, validating every row.
pub fn read_csv<R: io::Read>(reader: R) -> Result<Vec<ExportRow>, ExportError> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != COLUMNS {
        return Err(ExportError::Row { row: 1, message: format!("unexpected header {header:?}") });
    }
    let mut rows = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        let row: ExportRow = row?;
        row.validate()
            .map_err(|message| ExportError::Row { row: i + 2, message })?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(feature = "xlsx")]
pub fn xlsx_bytes(rows: &[ExportRow]) -> Result<Vec<u8>, ExportError> {
    use rust_xlsxwriter::{DocProperties, ExcelDateTime, Workbook};

    let mut workbook = Workbook::new();
    // A fixed creation time keeps the file reproducible.
    let created = ExcelDateTime::from_ymd(2000, 1, 1)?;
    workbook.set_properties(&DocProperties::new().set_creation_datetime(&created));
    let sheet = workbook.add_worksheet();
    sheet.set_name("matches")?;
    for (c, name) in COLUMNS.iter().enumerate() {
        sheet.write_string(0, c as u16, *name)?;
    }
    for (i, r) in rows.iter().enumerate() {
        let row = i as u32 + 1;
        sheet.write_string(row, 0, &r.accession_number)?;
        sheet.write_number(row, 1, r.cik as f64)?;
        sheet.write_string(row, 2, &r.company_name)?;
        sheet.write_string(row, 3, &r.sic)?;
        sheet.write_number(row, 4, r.reporting_year as f64)?;
        sheet.write_string(row, 5, &r.section_item)?;
        sheet.write_number(row, 6, r.sentence_index as f64)?;
        sheet.write_string(row, 7, &r.keyword_id)?;
        sheet.write_number(row, 8, r.char_start as f64)?;
        sheet.write_number(row, 9, r.char_end as f64)?;
        sheet.write_string(row, 10, &r.sentence_text)?;
    }
    Ok(workbook.save_to_buffer()?)
}

/// Encode rows in `format`.
pub fn encode(rows: &[ExportRow], format: ExportFormat) -> Result<Vec<u8>, ExportError> {
    match format {
        ExportFormat::Csv => Ok(csv_bytes(rows)),
        #[cfg(feature = "xlsx")]
        ExportFormat::Xlsx => xlsx_bytes(rows),
        #[cfg(not(feature = "xlsx"))]
        ExportFormat::Xlsx => Err(ExportError::Format("xlsx (built without xlsx support)".into())),
    }
}

/// Write the export of `matches` to `destination`. An empty input yields a
/// header-only file.
pub fn export_matches(matches: &[MatchRecord], format: ExportFormat, destination: &Path) -> Result<usize, ExportError> {
    let rows = export_rows(matches);
    let bytes = encode(&rows, format)?;
    std::fs::write(destination, bytes).map_err(|source| ExportError::Destination {
        path: destination.display().to_string(),
        source,
    })?;
    Ok(rows.len())
}
