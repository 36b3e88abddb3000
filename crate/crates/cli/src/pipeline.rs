//! crawl, parse and extract: the stages that turn the archive into a store.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tenkscan_core::analytics::CorpusFiling;
use tenkscan_core::extraction::{
    compile_keywords, default_ai_keywords, load_keyword_file, scan, KeywordPattern, SectionSelection,
};
use tenkscan_core::parser::{parse_filing, SegmentOptions};
use tenkscan_core::store::{self, RecordBatch, StoreMeta};
use tenkscan_core::{ContentKind, ItemId, ParsedFiling, RawFiling};
use tenkscan_edgar::{
    EdgarClient, EdgarConfig, EdgarError, FilingCache, ListRequest, Manifest, ManifestEntry, MirrorTransport,
    SystemClock,
};
use tracing::{info, warn};

use crate::workdir::{require, write_file, ConfigError, Provenance, WorkDir};

/// Fair-access ceiling of the public archive.
pub const MAX_LIVE_RATE: usize = 10;

pub struct CrawlArgs {
    pub years: (i32, i32),
    pub forms: Vec<String>,
    pub ciks: Vec<u64>,
    pub cache_dir: Option<PathBuf>,
    pub mirror: Option<PathBuf>,
    pub rate: usize,
}

#[derive(Debug, Serialize)]
struct FetchFailure {
    accession_number: String,
    url: Option<String>,
    retriable: bool,
    error: String,
}

pub fn crawl(work: &WorkDir, args: &CrawlArgs) -> Result<serde_json::Value> {
    let mut config = match EdgarConfig::from_env() {
        Ok(c) => c,
        Err(EdgarError::MissingContact) => {
            return Err(ConfigError(format!(
                "set {} to a contact name and email; the archive refuses anonymous clients",
                tenkscan_edgar::CONTACT_ENV
            ))
            .into())
        }
        Err(e) => return Err(e.into()),
    };
    if args.rate == 0 {
        return Err(ConfigError("--rate must be at least 1".into()).into());
    }
    if args.mirror.is_none() && args.rate > MAX_LIVE_RATE {
        return Err(ConfigError(format!("--rate above {MAX_LIVE_RATE} is only allowed with --mirror")).into());
    }
    config.max_per_second = args.rate;
    let cache = FilingCache::new(args.cache_dir.clone().unwrap_or_else(|| work.cache()));
    let client = match &args.mirror {
        Some(root) => {
            require(root, "synth --out <dir>")?;
            EdgarClient::with_parts(
                config,
                cache,
                Arc::new(MirrorTransport::new(root)),
                Arc::new(SystemClock::default()),
            )
        }
        None => EdgarClient::http(config, cache),
    };

    let mut req = ListRequest::new(args.years.0..=args.years.1);
    if !args.forms.is_empty() {
        req.forms = args.forms.iter().cloned().collect();
    }
    if !args.ciks.is_empty() {
        req.ciks = Some(args.ciks.iter().copied().collect());
    }
    let listing = client.list_filings(&req)?;
    info!(filings = listing.filings.len(), warnings = listing.warnings.len(), "listing complete");

    let results: Vec<_> = listing
        .filings
        .par_iter()
        .map(|f| (f, client.fetch_filing(f)))
        .collect();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (f, r) in results {
        match r {
            Ok(raw) => entries.push(ManifestEntry::of(&raw)),
            Err(e) => {
                warn!(accession = %f.accession_number, error = %e, "download failed");
                failures.push(FetchFailure {
                    accession_number: f.accession_number.to_string(),
                    url: e.url().map(str::to_string),
                    retriable: e.is_retriable(),
                    error: e.to_string(),
                });
            }
        }
    }
    let fetched = entries.len();
    let manifest = Manifest::new(
        tenkscan_edgar::client::today(),
        args.years,
        req.forms.iter().cloned().collect(),
        entries,
    );
    fs::create_dir_all(work.root())?;
    manifest.write(&work.manifest())?;
    let failures_path = work.root().join("crawl_failures.jsonl");
    let mut lines = String::new();
    for f in &failures {
        lines.push_str(&serde_json::to_string(f)?);
        lines.push('\n');
    }
    write_file(&failures_path, lines.as_bytes())?;

    Ok(json!({
        "listed": listing.filings.len(),
        "fetched": fetched,
        "failed": failures.len(),
        "index_warnings": listing.warnings.len(),
        "network_requests": client.network_requests(),
        "downloads": client.downloads(),
        "manifest": work.manifest(),
    }))
}

/// One line of `parsed/index.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParsedEntry {
    pub accession_number: String,
    pub cik: u64,
    pub status: ParseStatus,
    #[serde(default)]
    pub sections: Vec<ItemId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    Failed,
    NotCached,
}

fn parsed_path(work: &WorkDir, accession: &str) -> PathBuf {
    work.parsed().join(format!("{accession}.json"))
}

pub fn parse(work: &WorkDir, cache_dir: Option<&Path>, min_body_chars: usize) -> Result<serde_json::Value> {
    let manifest_path = work.manifest();
    require(&manifest_path, "crawl")?;
    let manifest = Manifest::read(&manifest_path)?;
    let cache = FilingCache::new(cache_dir.map(Path::to_path_buf).unwrap_or_else(|| work.cache()));
    let opts = SegmentOptions { min_body_chars };
    fs::create_dir_all(work.parsed())?;

    let entries: Vec<ParsedEntry> = manifest
        .entries
        .par_iter()
        .map(|entry| -> Result<ParsedEntry> {
            let acc = entry.filing.accession_number.as_str();
            let mut out = ParsedEntry {
                accession_number: acc.to_string(),
                cik: entry.filing.cik,
                status: ParseStatus::Ok,
                sections: Vec::new(),
                error: None,
            };
            let Some(hit) = cache.get_filing(acc)? else {
                warn!(accession = acc, "manifest entry not in cache");
                out.status = ParseStatus::NotCached;
                return Ok(out);
            };
            let raw = RawFiling {
                filing: entry.filing.clone(),
                content: hit.body,
                content_kind: hit.meta.content_kind.unwrap_or(ContentKind::Html),
                retrieved_at: hit.meta.retrieved_at,
                source_url: hit.meta.url,
            };
            match parse_filing(&raw, &opts) {
                Ok(parsed) => {
                    out.sections = parsed.sections.iter().map(|s| s.item_id).collect();
                    write_file(&parsed_path(work, acc), parsed.to_json().as_bytes())?;
                }
                Err(e) => {
                    warn!(accession = acc, error = %e, "parse failed");
                    out.status = ParseStatus::Failed;
                    out.error = Some(e.to_string());
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut index = String::new();
    for e in &entries {
        index.push_str(&serde_json::to_string(e)?);
        index.push('\n');
    }
    write_file(&work.parsed_index(), index.as_bytes())?;
    let count = |s: ParseStatus| entries.iter().filter(|e| e.status == s).count();
    Ok(json!({
        "filings": entries.len(),
        "parsed": count(ParseStatus::Ok),
        "failed": count(ParseStatus::Failed),
        "not_cached": count(ParseStatus::NotCached),
        "without_item_1a": entries
            .iter()
            .filter(|e| e.status == ParseStatus::Ok && !e.sections.contains(&ItemId::Item1A))
            .count(),
        "index": work.parsed_index(),
    }))
}

pub fn read_parsed_index(work: &WorkDir) -> Result<Vec<ParsedEntry>> {
    let path = work.parsed_index();
    require(&path, "parse")?;
    let file = fs::File::open(&path).with_context(|| format!("open {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), i + 1))?,
        );
    }
    Ok(out)
}

pub fn load_parsed(work: &WorkDir, accession: &str) -> Result<ParsedFiling> {
    let path = parsed_path(work, accession);
    require(&path, "parse")?;
    let text = fs::read_to_string(&path).with_context(|| format!("read {}", path.display()))?;
    ParsedFiling::from_json(&text).with_context(|| format!("{} is not a parsed filing", path.display()))
}

pub struct ExtractArgs {
    pub keywords: Option<PathBuf>,
    pub sections: Vec<ItemId>,
}

pub fn extract(work: &WorkDir, args: &ExtractArgs) -> Result<serde_json::Value> {
    let patterns: Vec<KeywordPattern> = match &args.keywords {
        Some(path) => {
            require(path, "extract --keywords <existing file>")?;
            load_keyword_file(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?
        }
        None => default_ai_keywords(),
    };
    let keywords = compile_keywords(&patterns).map_err(|e| ConfigError(e.to_string()))?;
    let selection = if args.sections.is_empty() {
        SectionSelection::All
    } else {
        SectionSelection::items(args.sections.iter().copied())
    };
    let entries = read_parsed_index(work)?;
    let ok: Vec<&ParsedEntry> = entries.iter().filter(|e| e.status == ParseStatus::Ok).collect();
    if ok.is_empty() && !entries.is_empty() {
        bail!("no filing in {} parsed successfully", work.parsed_index().display());
    }

    let outputs: Vec<(CorpusFiling, tenkscan_core::extraction::ScanOutput)> = ok
        .par_iter()
        .map(|e| -> Result<_> {
            let parsed = load_parsed(work, &e.accession_number)?;
            let out = scan(&parsed, &keywords, &selection);
            let sections_present: BTreeSet<ItemId> = parsed.sections.iter().map(|s| s.item_id).collect();
            Ok((CorpusFiling { filing: parsed.filing, sections_present }, out))
        })
        .collect::<Result<_>>()?;

    let mut batch = RecordBatch {
        meta: Some(StoreMeta { keywords: patterns, sections: selection, seed: None }),
        ..Default::default()
    };
    let mut missing = 0;
    for (filing, out) in outputs {
        missing += out.missing_sections.len();
        batch.filings.push(filing);
        batch.matches.extend(out.matches);
        batch.sentences.extend(out.sentences);
    }
    let store_path = work.store();
    let receipt = store::persist(&store_path, &batch)?;
    Provenance::new(
        "extract",
        json!({
            "keywords": args.keywords.as_ref().map(|p| p.display().to_string()),
            "sections": args.sections.iter().map(|i| i.to_string()).collect::<Vec<_>>(),
        }),
    )
    .input(work, &work.parsed_index())?
    .output(work, &store_path)?
    .write_beside(&store_path)?;

    Ok(json!({
        "filings": batch.filings.len(),
        "matches": batch.matches.len(),
        "sentences": batch.sentences.len(),
        "missing_sections": missing,
        "store": receipt,
    }))
}
