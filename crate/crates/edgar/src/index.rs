//! Parsers for the quarterly form index and per-company submission listings.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use tenkscan_core::AccessionNumber;

/// One data row of a quarterly `form.idx`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRow {
    pub form_type: String,
    pub company_name: String,
    pub cik: u64,
    pub date_filed: NaiveDate,
    pub accession_number: AccessionNumber,
}

/// A row that was skipped, with enough context to find it again.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexWarning {
    pub source: String,
    /// 1-based line number, 0 when not line oriented.
    pub line: usize,
    pub reason: String,
    pub raw: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedIndex {
    pub rows: Vec<IndexRow>,
    pub warnings: Vec<IndexWarning>,
}

/// Parse a `form.idx` body. The form type is read by column (it may contain
/// spaces, e.g. "SC 13G"); CIK, date and file name are taken from the right
/// because company names vary in width and sometimes overflow their column.
pub fn parse_form_index(source: &str, text: &str) -> ParsedIndex {
    let mut out = ParsedIndex::default();
    let mut form_width = None;
    let mut in_body = false;
    for (i, line) in text.lines().enumerate() {
        if !in_body {
            if let Some(col) = line.find("Company Name") {
                if line.trim_start().starts_with("Form Type") {
                    form_width = Some(col);
                }
            }
            if line.len() >= 20 && line.bytes().all(|b| b == b'-') {
                in_body = true;
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        match parse_row(line, form_width) {
            Ok(row) => out.rows.push(row),
            Err(reason) => out.warnings.push(IndexWarning {
                source: source.to_string(),
                line: i + 1,
                reason,
                raw: line.to_string(),
            }),
        }
    }
    if !in_body && !text.trim().is_empty() {
        out.warnings.push(IndexWarning {
            source: source.to_string(),
            line: 0,
            reason: "no header separator found".into(),
            raw: String::new(),
        });
    }
    out
}

pub fn parse_row(line: &str, form_width: Option<usize>) -> Result<IndexRow, String> {
    let (rest, file) = split_last(line).ok_or("too few fields")?;
    let (rest, date) = split_last(rest).ok_or("too few fields")?;
    let (left, cik) = split_last(rest).ok_or("no form/company fields")?;

    let cik: u64 = cik.parse().map_err(|_| format!("cik {cik:?} is not a number"))?;
    if cik == 0 {
        return Err("cik is zero".into());
    }
    let date_filed = NaiveDate::parse_from_str(date, "%Y-%m-%d")
        .map_err(|_| format!("date {date:?} is not YYYY-MM-DD"))?;
    let accession_number = accession_from_path(file, cik)?;

    // Use the header column when the form type fits in it, else the first token.
    let by_column = form_width.filter(|&w| {
        w > 0 && left.len() > w && left.is_char_boundary(w) && left.as_bytes()[w - 1].is_ascii_whitespace()
    });
    let (form_type, company_name) = match by_column {
        Some(w) => (left[..w].trim(), left[w..].trim()),
        None => match left.trim().split_once(char::is_whitespace) {
            Some((f, c)) => (f, c.trim()),
            None => (left.trim(), ""),
        },
    };
    if form_type.is_empty() {
        return Err("form type is empty".into());
    }
    if company_name.is_empty() {
        return Err("company name is empty".into());
    }
    Ok(IndexRow {
        form_type: form_type.to_string(),
        company_name: company_name.to_string(),
        cik,
        date_filed,
        accession_number,
    })
}

/// Split off the last whitespace-separated token.
fn split_last(s: &str) -> Option<(&str, &str)> {
    let s = s.trim_end();
    let (before, token) = s.rsplit_once(char::is_whitespace)?;
    (!token.is_empty() && !before.trim().is_empty()).then_some((before, token))
}

/// `edgar/data/{cik}/{accession}.txt` → accession.
fn accession_from_path(file: &str, cik: u64) -> Result<AccessionNumber, String> {
    let mut parts = file.rsplit('/');
    let name = parts.next().unwrap_or_default();
    let dir_cik = parts.next();
    if dir_cik.and_then(|d| d.parse::<u64>().ok()) != Some(cik) {
        return Err(format!("file {file:?} is not under the cik directory"));
    }
    let stem = name.strip_suffix(".txt").ok_or_else(|| format!("file {file:?} is not a .txt submission"))?;
    stem.parse().map_err(|e: tenkscan_core::FilingRefError| e.to_string())
}

/// Filing metadata of one company, from the submissions JSON.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompanySubmissions {
    pub cik: u64,
    pub name: String,
    pub sic: Option<String>,
    pub filings: BTreeMap<AccessionNumber, SubmissionEntry>,
    /// Names of older listing pages, fetched only when needed.
    pub extra_pages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmissionEntry {
    pub form: String,
    pub filing_date: Option<NaiveDate>,
    pub report_date: Option<NaiveDate>,
    pub primary_document: Option<String>,
}

#[derive(Deserialize)]
struct SubmissionsDoc {
    #[serde(default)]
    name: String,
    #[serde(default)]
    sic: Option<String>,
    filings: SubmissionsFilings,
}

#[derive(Deserialize)]
struct SubmissionsFilings {
    recent: FilingColumns,
    #[serde(default)]
    files: Vec<FilePage>,
}

#[derive(Deserialize)]
struct FilePage {
    name: String,
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "camelCase")]
struct FilingColumns {
    #[serde(default)]
    accession_number: Vec<String>,
    #[serde(default)]
    filing_date: Vec<String>,
    #[serde(default)]
    report_date: Vec<String>,
    #[serde(default)]
    form: Vec<String>,
    #[serde(default)]
    primary_document: Vec<String>,
}

fn date_opt(s: Option<&String>) -> Option<NaiveDate> {
    s.and_then(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok())
}

fn sic_opt(s: Option<String>) -> Option<String> {
    s.map(|s| s.trim().to_string())
        .filter(|s| s.len() == 4 && s.bytes().all(|b| b.is_ascii_digit()))
}

impl FilingColumns {
    fn entries(self) -> BTreeMap<AccessionNumber, SubmissionEntry> {
        let mut out = BTreeMap::new();
        for (i, acc) in self.accession_number.iter().enumerate() {
            let Ok(acc) = acc.parse::<AccessionNumber>() else { continue };
            out.insert(
                acc,
                SubmissionEntry {
                    form: self.form.get(i).cloned().unwrap_or_default(),
                    filing_date: date_opt(self.filing_date.get(i)),
                    report_date: date_opt(self.report_date.get(i)),
                    primary_document: self.primary_document.get(i).filter(|d| !d.trim().is_empty()).cloned(),
                },
            );
        }
        out
    }
}

/// Parse `CIK##########.json`.
pub fn parse_submissions(cik: u64, body: &[u8]) -> Result<CompanySubmissions, serde_json::Error> {
    let doc: SubmissionsDoc = serde_json::from_slice(body)?;
    Ok(CompanySubmissions {
        cik,
        name: doc.name,
        sic: sic_opt(doc.sic),
        filings: doc.filings.recent.entries(),
        extra_pages: doc.filings.files.into_iter().map(|f| f.name).collect(),
    })
}

/// Parse an older listing page (`CIK##########-submissions-001.json`), which
/// carries the columns at top level.
pub fn parse_submissions_page(body: &[u8]) -> Result<BTreeMap<AccessionNumber, SubmissionEntry>, serde_json::Error> {
    let cols: FilingColumns = serde_json::from_slice(body)?;
    Ok(cols.entries())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
Description:           Master Index of EDGAR Dissemination Feed by Form Type
Last Data Received:    March 31, 2024
Comments:              webmaster@sec.gov
Anonymous FTP:         ftp://ftp.sec.gov/edgar/




Form Type   Company Name                                                  CIK         Date Filed  File Name
---------------------------------------------------------------------------------------------------------------------------------------------
10-K        1 800 FLOWERS COM INC                                         1084869     2023-09-15  edgar/data/1084869/0001437749-23-025850.txt
10-K/A      ACME CORP                                                     12345       2024-01-02  edgar/data/12345/0000012345-24-000002.txt
SC 13G      BIG HOLDER LP                                                 777         2024-02-14  edgar/data/777/0000777000-24-000001.txt
10-K        BROKEN ROW                                                    abc         2024-02-14  edgar/data/1/0000000001-24-000001.txt
";

    #[test]
    fn parses_rows_and_reports_bad_ones() {
        let p = parse_form_index("form.idx", SAMPLE);
        assert_eq!(p.rows.len(), 3);
        assert_eq!(p.rows[0].company_name, "1 800 FLOWERS COM INC");
        assert_eq!(p.rows[0].cik, 1084869);
        assert_eq!(p.rows[1].form_type, "10-K/A");
        assert_eq!(p.rows[2].form_type, "SC 13G");
        assert_eq!(p.rows[2].company_name, "BIG HOLDER LP");
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(p.warnings[0].line, 14);
        assert!(p.warnings[0].reason.contains("cik"));
    }

    #[test]
    fn overflowing_company_name() {
        let line = "10-K        A VERY LONG COMPANY NAME THAT RUNS PAST ITS COLUMN WIDTH AND BEYOND INC 42 2024-03-01  edgar/data/42/0000000042-24-000001.txt";
        let row = parse_row(line, Some(12)).unwrap();
        assert_eq!(row.form_type, "10-K");
        assert!(row.company_name.ends_with("BEYOND INC"));
        assert_eq!(row.cik, 42);
    }

    #[test]
    fn accession_must_sit_under_cik() {
        let line = "10-K        X INC    42  2024-03-01  edgar/data/43/0000000042-24-000001.txt";
        assert!(parse_row(line, Some(12)).is_err());
    }

    #[test]
    fn submissions_json() {
        let body = br#"{"cik":"320193","name":"Apple Inc.","sic":"3571",
            "filings":{"recent":{"accessionNumber":["0000320193-24-000123","bad"],
            "filingDate":["2024-11-01","2024-01-01"],"reportDate":["2024-09-28",""],
            "form":["10-K","8-K"],"primaryDocument":["aapl-20240928.htm",""]},
            "files":[{"name":"CIK0000320193-submissions-001.json"}]}}"#;
        let s = parse_submissions(320193, body).unwrap();
        assert_eq!(s.name, "Apple Inc.");
        assert_eq!(s.sic.as_deref(), Some("3571"));
        assert_eq!(s.filings.len(), 1);
        let e = s.filings.values().next().unwrap();
        assert_eq!(e.report_date, NaiveDate::from_ymd_opt(2024, 9, 28));
        assert_eq!(s.extra_pages, ["CIK0000320193-submissions-001.json"]);
    }

    #[test]
    fn blank_sic_is_none() {
        let body = br#"{"name":"X","sic":"","filings":{"recent":{}}}"#;
        assert_eq!(parse_submissions(1, body).unwrap().sic, None);
    }
}
