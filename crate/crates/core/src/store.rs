//! Single-file record store for a frozen corpus snapshot.
//!
//! The file is line-delimited JSON. The first line is a header naming the
//! format and schema version; every other line is one tagged record. Writes
//! go to a temporary file in the same directory that replaces the store
//! only after it is complete, so readers never see a partial batch.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analytics::{assign_reporting_year, CorpusFiling};
use crate::extraction::{KeywordPattern, MatchRecord, SectionSelection, SentenceRecord};
use crate::filing::{FilingRef, ItemId};

pub const FORMAT: &str = "tenkscan-store";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no store at {0}")]
    Missing(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("{path}: store version {found} is not supported (expected {VERSION})")]
    Version { path: PathBuf, found: u32 },
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

/// How the records were produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreMeta {
    pub keywords: Vec<KeywordPattern>,
    pub sections: SectionSelection,
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", content = "record", rename_all = "snake_case")]
enum Record {
    Meta(StoreMeta),
    Filing(CorpusFiling),
    Match(MatchRecord),
    Sentence(SentenceRecord),
}

/// A set of records. Persisting normalizes the order, so a loaded batch
/// equals the persisted one after [`normalize`](Self::normalize).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordBatch {
    pub meta: Option<StoreMeta>,
    pub filings: Vec<CorpusFiling>,
    pub matches: Vec<MatchRecord>,
    pub sentences: Vec<SentenceRecord>,
}

fn filing_key(f: &FilingRef) -> (u64, &str) {
    (f.cik, f.accession_number.as_str())
}

/// Order of match rows everywhere (store, search, export).
pub fn match_order(a: &MatchRecord, b: &MatchRecord) -> std::cmp::Ordering {
    (filing_key(&a.filing), a.item_id, a.sentence_index, a.char_start, &a.keyword_id).cmp(&(
        filing_key(&b.filing),
        b.item_id,
        b.sentence_index,
        b.char_start,
        &b.keyword_id,
    ))
}

/// Order of sentence records everywhere.
pub fn sentence_order(a: &SentenceRecord, b: &SentenceRecord) -> std::cmp::Ordering {
    (filing_key(&a.filing), a.item_id, a.sentence_index, &a.normalized_key).cmp(&(
        filing_key(&b.filing),
        b.item_id,
        b.sentence_index,
        &b.normalized_key,
    ))
}

impl RecordBatch {
    pub fn is_empty(&self) -> bool {
        self.filings.is_empty() && self.matches.is_empty() && self.sentences.is_empty()
    }

    pub fn normalize(&mut self) {
        self.filings.sort_by(|a, b| filing_key(&a.filing).cmp(&filing_key(&b.filing)));
        self.matches.sort_by(match_order);
        self.sentences.sort_by(sentence_order);
    }

    /// Add `other`, replacing filings already present (and their records)
    /// by accession number. `other`'s meta wins when set.
    pub fn merge(&mut self, other: RecordBatch) {
        let replaced: BTreeSet<String> = other
            .filings
            .iter()
            .map(|f| f.filing.accession_number.to_string())
            .collect();
        let keep = |f: &FilingRef| !replaced.contains(f.accession_number.as_str());
        self.filings.retain(|f| keep(&f.filing));
        self.matches.retain(|m| keep(&m.filing));
        self.sentences.retain(|s| keep(&s.filing));
        self.filings.extend(other.filings);
        self.matches.extend(other.matches);
        self.sentences.extend(other.sentences);
        if other.meta.is_some() {
            self.meta = other.meta;
        }
        self.normalize();
    }

    pub fn filter(&self, f: &RecordFilter) -> RecordBatch {
        RecordBatch {
            meta: self.meta.clone(),
            filings: self.filings.iter().filter(|c| f.admits_filing(&c.filing)).cloned().collect(),
            matches: self
                .matches
                .iter()
                .filter(|m| f.admits_filing(&m.filing) && f.admits_item(m.item_id))
                .cloned()
                .collect(),
            sentences: self
                .sentences
                .iter()
                .filter(|s| f.admits_filing(&s.filing) && s.sections.iter().any(|i| f.admits_item(*i)))
                .cloned()
                .collect(),
        }
    }
}

/// Record selection on load. Empty fields admit everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordFilter {
    pub years: Option<RangeInclusive<i32>>,
    pub ciks: BTreeSet<u64>,
    pub sections: BTreeSet<ItemId>,
}

impl RecordFilter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn years(range: RangeInclusive<i32>) -> Self {
        RecordFilter { years: Some(range), ..Default::default() }
    }

    fn admits_filing(&self, f: &FilingRef) -> bool {
        self.years
            .as_ref()
            .is_none_or(|r| r.contains(&assign_reporting_year(f).year))
            && (self.ciks.is_empty() || self.ciks.contains(&f.cik))
    }

    fn admits_item(&self, item: ItemId) -> bool {
        self.sections.is_empty() || self.sections.contains(&item)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Receipt {
    pub path: PathBuf,
    pub filings: usize,
    pub matches: usize,
    pub sentences: usize,
    /// SHA-256 of the committed file.
    pub sha256: String,
}

/// Points at which a commit can be interrupted by a [`FaultHook`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommitStage {
    /// After this many records have been written to the temporary file.
    Records(usize),
    BeforeRename,
}

/// Called during commit; an error aborts the commit at that point.
pub type FaultHook<'a> = &'a mut dyn FnMut(CommitStage) -> io::Result<()>;

/// Replace the store at `path` with `batch`.
pub fn persist(path: &Path, batch: &RecordBatch) -> Result<Receipt, StoreError> {
    persist_with_hook(path, batch, &mut |_| Ok(()))
}

pub fn persist_with_hook(path: &Path, batch: &RecordBatch, hook: FaultHook<'_>) -> Result<Receipt, StoreError> {
    let io_err = |source| StoreError::Io { path: path.to_path_buf(), source };
    let mut batch = batch.clone();
    batch.normalize();

    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    let mut hasher = Sha256::new();
    {
        let mut w = HashingWriter { inner: BufWriter::new(tmp.as_file()), hasher: &mut hasher };
        let header = Header { format: FORMAT.into(), version: VERSION };
        write_line(&mut w, &header).map_err(io_err)?;
        let records = batch
            .meta
            .iter()
            .map(|m| Record::Meta(m.clone()))
            .chain(batch.filings.iter().cloned().map(Record::Filing))
            .chain(batch.matches.iter().cloned().map(Record::Match))
            .chain(batch.sentences.iter().cloned().map(Record::Sentence));
        for (i, r) in records.enumerate() {
            write_line(&mut w, &r).map_err(io_err)?;
            hook(CommitStage::Records(i + 1)).map_err(io_err)?;
        }
        w.inner.flush().map_err(io_err)?;
    }
    tmp.as_file().sync_all().map_err(io_err)?;
    hook(CommitStage::BeforeRename).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(Receipt {
        path: path.to_path_buf(),
        filings: batch.filings.len(),
        matches: batch.matches.len(),
        sentences: batch.sentences.len(),
        sha256: hex::encode(hasher.finalize()),
    })
}

/// Merge `batch` into the store at `path` (created if absent).
pub fn append(path: &Path, batch: RecordBatch) -> Result<Receipt, StoreError> {
    let mut current = match load(path, &RecordFilter::all()) {
        Ok(b) => b,
        Err(StoreError::Missing(_)) => RecordBatch::default(),
        Err(e) => return Err(e),
    };
    current.merge(batch);
    persist(path, &current)
}

pub fn load(path: &Path, filter: &RecordFilter) -> Result<RecordBatch, StoreError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::Missing(path.to_path_buf())),
        Err(source) => return Err(StoreError::Io { path: path.to_path_buf(), source }),
    };
    let corrupt = |line: usize, message: String| StoreError::Corrupt { path: path.to_path_buf(), line, message };
    let mut lines = BufReader::new(file).lines();
    let header: Header = match lines.next() {
        Some(Ok(l)) => serde_json::from_str(&l).map_err(|e| corrupt(1, format!("bad header: {e}")))?,
        Some(Err(source)) => return Err(StoreError::Io { path: path.to_path_buf(), source }),
        None => return Err(corrupt(1, "empty file".into())),
    };
    if header.format != FORMAT {
        return Err(corrupt(1, format!("not a {FORMAT} file")));
    }
    if header.version != VERSION {
        return Err(StoreError::Version { path: path.to_path_buf(), found: header.version });
    }
    let mut batch = RecordBatch::default();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|source| StoreError::Io { path: path.to_path_buf(), source })?;
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str(&line).map_err(|e| corrupt(i + 2, e.to_string()))? {
            Record::Meta(m) => batch.meta = Some(m),
            Record::Filing(f) => batch.filings.push(f),
            Record::Match(m) => batch.matches.push(m),
            Record::Sentence(s) => batch.sentences.push(s),
        }
    }
    batch.normalize();
    Ok(if *filter == RecordFilter::all() { batch } else { batch.filter(filter) })
}

fn write_line<W: Write, T: Serialize>(w: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")
}

struct HashingWriter<'h, W> {
    inner: W,
    hasher: &'h mut Sha256,
}

impl<W: Write> Write for HashingWriter<'_, W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::normalized_key;
    use chrono::NaiveDate;

    fn filing(cik: u64, year: i32) -> FilingRef {
        FilingRef {
            cik,
            accession_number: format!("{cik:010}-{:02}-000001", (year + 1) % 100).parse().unwrap(),
            form_type: "10-K".into(),
            filing_date: NaiveDate::from_ymd_opt(year + 1, 3, 1).unwrap(),
            period_end: NaiveDate::from_ymd_opt(year, 12, 31),
            company_name: format!("Filer {cik}, \"quoted\""),
            sic: Some("7372".into()),
            primary_document: Some("doc.htm".into()),
        }
    }

    fn batch(n: usize) -> RecordBatch {
        let mut b = RecordBatch::default();
        for i in 0..n {
            let year = 2020 + (i % 5) as i32;
            let f = filing(i as u64 / 5 + 1, year);
            b.filings.push(CorpusFiling { filing: f.clone(), sections_present: BTreeSet::from([ItemId::Item1A]) });
            let text = format!("AI sentence number {i}.");
            b.matches.push(MatchRecord {
                filing: f.clone(),
                item_id: ItemId::Item1A,
                sentence_index: i,
                keyword_id: "ai".into(),
                char_start: 10 * i,
                char_end: 10 * i + 2,
                sentence_text: text.clone(),
            });
            b.sentences.push(SentenceRecord {
                filing: f,
                item_id: ItemId::Item1A,
                sentence_index: i,
                sentence_start: 10 * i,
                normalized_key: normalized_key(&text),
                sentence_text: text,
                keyword_ids: BTreeSet::from(["ai".into()]),
                sections: BTreeSet::from([ItemId::Item1A]),
            });
        }
        b.meta = Some(StoreMeta {
            keywords: crate::extraction::default_ai_keywords(),
            sections: SectionSelection::All,
            seed: Some(7),
        });
        b
    }

    #[test]
    fn round_trip_thousand_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let mut b = batch(1000);
        b.matches.reverse();
        let receipt = persist(&path, &b).unwrap();
        assert_eq!(receipt.matches, 1000);
        let back = load(&path, &RecordFilter::all()).unwrap();
        b.normalize();
        assert_eq!(back, b);
        // Stable bytes on a second commit.
        let again = persist(&path, &back).unwrap();
        assert_eq!(again.sha256, receipt.sha256);
    }

    #[test]
    fn interrupted_commit_leaves_previous_state() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        persist(&path, &batch(10)).unwrap();
        let before = std::fs::read(&path).unwrap();
        for stage in [CommitStage::Records(3), CommitStage::BeforeRename] {
            let mut hook = |s: CommitStage| {
                if s == stage {
                    Err(io::Error::other("injected crash"))
                } else {
                    Ok(())
                }
            };
            assert!(persist_with_hook(&path, &batch(50), &mut hook).is_err());
            assert_eq!(std::fs::read(&path).unwrap(), before);
        }
        // No temporary files left behind.
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn year_filter() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        persist(&path, &batch(40)).unwrap();
        let only = load(&path, &RecordFilter::years(2024..=2024)).unwrap();
        assert!(!only.matches.is_empty());
        assert!(only.matches.iter().all(|m| assign_reporting_year(&m.filing).year == 2024));
        assert!(only.filings.iter().all(|f| assign_reporting_year(&f.filing).year == 2024));
    }

    #[test]
    fn missing_and_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        assert!(matches!(load(&path, &RecordFilter::all()), Err(StoreError::Missing(_))));
        std::fs::write(&path, "{\"format\":\"tenkscan-store\",\"version\":1}\n{\"kind\":\"match\"}\n").unwrap();
        assert!(matches!(load(&path, &RecordFilter::all()), Err(StoreError::Corrupt { line: 2, .. })));
        std::fs::write(&path, "{\"format\":\"tenkscan-store\",\"version\":9}\n").unwrap();
        assert!(matches!(load(&path, &RecordFilter::all()), Err(StoreError::Version { found: 9, .. })));
    }

    #[test]
    fn append_replaces_filings_by_accession() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        append(&path, batch(10)).unwrap();
        let receipt = append(&path, batch(10)).unwrap();
        assert_eq!(receipt.matches, 10);
        let mut b = batch(10);
        b.normalize();
        assert_eq!(load(&path, &RecordFilter::all()).unwrap(), b);
    }
}
