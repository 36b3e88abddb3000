//! Detection of `Item N[letter]` headings and table-of-contents disambiguation.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use tracing::warn;

use super::{FilingSection, ParseError};
use crate::filing::ItemId;
use crate::offsets::OffsetIndex;

static HEADING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?mi)^item[ \t]+(\d{1,2})([a-d])?\b[ \t]*[.:]?[ \t]*([^\n]*)$")
        .expect("heading pattern")
});

/// Headings longer than this are never treated as table-of-contents lines.
const TOC_LINE_MAX_CHARS: usize = 150;
const TITLE_MAX_CHARS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentOptions {
    /// A candidate heading whose body is shorter than this is presumed to be
    /// a table-of-contents entry.
    pub min_body_chars: usize,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self { min_body_chars: 500 }
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    item: ItemId,
    start: usize,
    line_end: usize,
    title: String,
    toc_like: bool,
    body_chars: usize,
}

/// Split normalized text into Item sections (char offsets).
///
/// For every item the last heading with a body of at least
/// `min_body_chars` wins; headings that end in a page number are only used
/// when nothing else is available. The chosen headings must appear in
/// canonical item order: an out-of-order choice falls back to the last
/// heading of that item after the previous item, or is dropped.
pub fn segment_items(text: &str, opts: &SegmentOptions) -> Result<Vec<FilingSection>, ParseError> {
    let index = OffsetIndex::new(text);
    let total = index.len_chars();
    if total == 0 {
        return Ok(Vec::new());
    }

    let mut candidates = find_candidates(text, &index);
    if candidates.is_empty() {
        warn!("no item headings detected; using a single OTHER section");
        return Ok(vec![FilingSection {
            item_id: ItemId::Other,
            title: String::new(),
            start: 0,
            end: total,
        }]);
    }
    for i in 0..candidates.len() {
        let next = candidates.get(i + 1).map_or(total, |c| c.start);
        candidates[i].body_chars = next.saturating_sub(candidates[i].line_end);
    }

    let mut by_item: BTreeMap<ItemId, Vec<&Candidate>> = BTreeMap::new();
    for c in &candidates {
        by_item.entry(c.item).or_default().push(c);
    }

    let min = opts.min_body_chars;
    let mut chosen: Vec<&Candidate> = Vec::new();
    let mut floor: Option<usize> = None;
    for (_, cands) in by_item {
        let preferred = cands
            .iter()
            .rev()
            .find(|c| !c.toc_like && c.body_chars >= min)
            .or_else(|| cands.iter().rev().find(|c| c.body_chars >= min && !shadowed(c, &cands)))
            .or_else(|| cands.iter().rev().find(|c| !c.toc_like))
            .or_else(|| cands.last())
            .copied();
        let after_floor = |c: &&&Candidate| floor.is_none_or(|f| c.start > f);
        let pick = match preferred {
            Some(p) if floor.is_none_or(|f| p.start > f) => Some(p),
            _ => cands.iter().rev().find(after_floor).copied(),
        };
        if let Some(p) = pick {
            floor = Some(p.start);
            chosen.push(p);
        }
    }
    chosen.sort_by_key(|c| c.start);

    let mut sections = Vec::with_capacity(chosen.len());
    for (i, c) in chosen.iter().enumerate() {
        let end = chosen.get(i + 1).map_or(total, |n| n.start);
        if c.start >= end {
            return Err(ParseError::Overlap {
                item: c.item,
                start: c.start,
                end,
            });
        }
        sections.push(FilingSection {
            item_id: c.item,
            title: c.title.clone(),
            start: c.start,
            end,
        });
    }
    Ok(sections)
}

/// A page-numbered heading whose item also has a later plain heading.
fn shadowed(c: &Candidate, all: &[&Candidate]) -> bool {
    c.toc_like && all.iter().any(|o| !o.toc_like && o.start > c.start)
}

fn find_candidates(text: &str, index: &OffsetIndex) -> Vec<Candidate> {
    HEADING
        .captures_iter(text)
        .filter_map(|caps| {
            let whole = caps.get(0)?;
            let number: u32 = caps[1].parse().ok()?;
            let letter = caps.get(2).and_then(|m| m.as_str().chars().next());
            let item = ItemId::from_parts(number, letter)?;
            let line = whole.as_str();
            let printed = caps.get(3).map_or("", |m| m.as_str()).trim();
            let title = if printed.is_empty() {
                next_line_title(text, whole.end())
            } else {
                truncate_chars(printed, TITLE_MAX_CHARS)
            };
            Some(Candidate {
                item,
                start: index.char_of(whole.start()),
                line_end: index.char_of(whole.end()),
                toc_like: line.chars().count() <= TOC_LINE_MAX_CHARS && ends_with_page_number(printed),
                title,
                body_chars: 0,
            })
        })
        .collect()
}

fn ends_with_page_number(title: &str) -> bool {
    let mut words = title.split(' ').rev();
    match words.next() {
        Some(last) => {
            !last.is_empty()
                && last.len() <= 4
                && last.bytes().all(|b| b.is_ascii_digit())
                && words.next().is_some()
        }
        None => false,
    }
}

/// Headings printed as "Item 1A." followed by the title on its own line.
fn next_line_title(text: &str, line_end: usize) -> String {
    let rest = text[line_end..].strip_prefix('\n').unwrap_or("");
    let next = rest.split('\n').next().unwrap_or("").trim();
    if !next.is_empty() && next.chars().count() <= 100 && !HEADING.is_match(next) {
        next.to_string()
    } else {
        String::new()
    }
}

fn truncate_chars(s: &str, max: usize) -> String {
    s.chars().take(max).collect()
}
