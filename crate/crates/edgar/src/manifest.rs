//! Corpus manifest: a frozen record of which filings a crawl saw.

use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use tenkscan_core::{FilingRef, RawFiling};

use crate::cache::{atomic_write, sha256_hex};
use crate::EdgarError;

pub const MANIFEST_FORMAT: &str = "tenkscan-manifest";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format: String,
    pub version: u32,
    /// Day the crawl was taken.
    pub snapshot_date: NaiveDate,
    pub years: (i32, i32),
    pub forms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(flatten)]
    pub filing: FilingRef,
    pub sha256: String,
    pub retrieved_at: DateTime<Utc>,
    pub source_url: String,
}

impl ManifestEntry {
    pub fn of(raw: &RawFiling) -> Self {
        ManifestEntry {
            filing: raw.filing.clone(),
            sha256: sha256_hex(&raw.content),
            retrieved_at: raw.retrieved_at,
            source_url: raw.source_url.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub header: ManifestHeader,
    /// Sorted by (cik, accession).
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(snapshot_date: NaiveDate, years: (i32, i32), forms: Vec<String>, mut entries: Vec<ManifestEntry>) -> Self {
        entries.sort_by(|a, b| {
            (a.filing.cik, &a.filing.accession_number).cmp(&(b.filing.cik, &b.filing.accession_number))
        });
        entries.dedup_by(|a, b| a.filing.accession_number == b.filing.accession_number);
        Manifest {
            header: ManifestHeader {
                format: MANIFEST_FORMAT.into(),
                version: 1,
                snapshot_date,
                years,
                forms,
            },
            entries,
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), EdgarError> {
        atomic_write(path, self.to_jsonl().as_bytes()).map_err(EdgarError::Cache)
    }

    pub fn read(path: &Path) -> Result<Manifest, EdgarError> {
        let file = std::fs::File::open(path).map_err(EdgarError::Cache)?;
        let mut lines = BufReader::new(file).lines();
        let corrupt = |line: usize, message: String| EdgarError::Manifest { line, message };
        let header: ManifestHeader = match lines.next() {
            Some(l) => serde_json::from_str(&l.map_err(EdgarError::Cache)?).map_err(|e| corrupt(1, e.to_string()))?,
            None => return Err(corrupt(1, "empty manifest".into())),
        };
        if header.format != MANIFEST_FORMAT || header.version != 1 {
            return Err(corrupt(1, format!("unsupported format {} v{}", header.format, header.version)));
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(EdgarError::Cache)?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line).map_err(|e| corrupt(i + 2, e.to_string()))?);
        }
        Ok(Manifest { header, entries })
    }

    pub fn filings(&self) -> impl Iterator<Item = &FilingRef> {
        self.entries.iter().map(|e| &e.filing)
    }
}
