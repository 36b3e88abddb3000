//! The demo operations as plain Rust.

use chrono::{DateTime, NaiveDate};
use serde::Serialize;
use tenkscan_core::analytics::{precision_lower_bound, BoundMethod};
use tenkscan_core::extraction::{compile_keywords, split_sentences, CaseMode, KeywordPattern, KeywordSet};
use tenkscan_core::parser::{parse_filing, SegmentOptions};
use tenkscan_core::{ContentKind, FilingRef, RawFiling};

/// A run of sentence text, with the keyword id when it is a hit.
#[derive(Debug, Serialize, PartialEq, Eq)]
pub struct Piece {
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keyword: Option<String>,
}

#[derive(Debug, Serialize)]
struct Highlighted {
    keywords: usize,
    matches: usize,
    sentences: Vec<Vec<Piece>>,
}

fn keyword_set(terms: &str) -> Result<KeywordSet, String> {
    let terms: Vec<&str> = terms.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if terms.is_empty() {
        return Ok(KeywordSet::default_ai());
    }
    let mut patterns: Vec<KeywordPattern> = Vec::new();
    for t in terms {
        if patterns.iter().any(|p| p.id == t.to_lowercase()) {
            continue;
        }
        patterns.push(KeywordPattern::new(&t.to_lowercase(), &regex::escape(t), CaseMode::Insensitive, true));
    }
    compile_keywords(&patterns).map_err(|e| e.to_string())
}

pub fn highlight(text: &str, terms: &str) -> Result<String, String> {
    let set = keyword_set(terms)?;
    let mut out = Highlighted { keywords: set.len(), matches: 0, sentences: Vec::new() };
    for span in split_sentences(text) {
        let sentence = &text[span];
        let mut hits = set.find_all(sentence);
        // Overlapping hits from different keywords: keep the leftmost, longest.
        hits.sort_by_key(|h| (h.start, std::cmp::Reverse(h.end)));
        let mut pieces = Vec::new();
        let mut at = 0;
        for h in hits {
            if h.start < at {
                continue;
            }
            if h.start > at {
                pieces.push(Piece { text: sentence[at..h.start].to_string(), keyword: None });
            }
            pieces.push(Piece { text: sentence[h.start..h.end].to_string(), keyword: Some(set.id(h.keyword).to_string()) });
            out.matches += 1;
            at = h.end;
        }
        if at < sentence.len() {
            pieces.push(Piece { text: sentence[at..].to_string(), keyword: None });
        }
        out.sentences.push(pieces);
    }
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct Section {
    item: String,
    title: String,
    chars: usize,
    preview: String,
}

const PREVIEW_CHARS: usize = 280;

pub fn segment(document: &str, html: bool, min_body_chars: usize) -> Result<String, String> {
    let filing = FilingRef {
        cik: 0,
        accession_number: "0000000000-00-000000".parse().map_err(|e| format!("{e}"))?,
        form_type: "10-K".into(),
        filing_date: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
        period_end: None,
        company_name: "Pasted document".into(),
        sic: None,
        primary_document: None,
    };
    let raw = RawFiling {
        filing,
        content: document.as_bytes().to_vec(),
        content_kind: if html { ContentKind::Html } else { ContentKind::PlainText },
        retrieved_at: DateTime::UNIX_EPOCH,
        source_url: String::new(),
    };
    let parsed = parse_filing(&raw, &SegmentOptions { min_body_chars }).map_err(|e| e.to_string())?;
    let sections: Vec<Section> = parsed
        .sections
        .iter()
        .map(|s| {
            let body = parsed.slice(s.start, s.end);
            Section {
                item: s.item_id.to_string(),
                title: s.title.clone(),
                chars: s.end - s.start,
                preview: body.chars().take(PREVIEW_CHARS).collect(),
            }
        })
        .collect();
    serde_json::to_string(&sections).map_err(|e| e.to_string())
}

pub fn precision(n: u64, errors: u64, confidence: f64, method: &str) -> Result<String, String> {
    let method = match method {
        "wald" => BoundMethod::Wald,
        "wilson" => BoundMethod::Wilson,
        other => return Err(format!("unknown method {other:?}")),
    };
    let b = precision_lower_bound(n, errors, confidence, method).map_err(|e| e.to_string())?;
    serde_json::to_string(&b).map_err(|e| e.to_string())
}
