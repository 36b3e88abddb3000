//! Markup stripping and whitespace normalization.
//!
//! The output is plain text where each paragraph is one line: runs of
//! whitespace become a single space and paragraph breaks a single `\n`.

use tracing::warn;

use super::ParseError;
use crate::filing::{ContentKind, RawFiling};

/// Normalized text plus the number of undecodable byte sequences replaced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub text: String,
    pub replaced: usize,
}

pub fn normalize(raw: &RawFiling) -> Result<String, ParseError> {
    normalize_bytes(&raw.content, raw.content_kind).map(|n| n.text)
}

pub fn normalize_bytes(content: &[u8], kind: ContentKind) -> Result<Normalized, ParseError> {
    if content.is_empty() {
        return Err(ParseError::Empty);
    }
    let (decoded, replaced) = decode_lossy(content);
    if replaced > 0 {
        warn!(replaced, "replaced undecodable byte sequences with U+FFFD");
    }
    let body = primary_document(&decoded);
    let flat = if kind == ContentKind::Html || looks_like_html(body) {
        html_to_flat(body)
    } else {
        plain_to_flat(body)
    };
    let text = collapse(&flat);
    if !text.chars().any(char::is_alphanumeric) {
        return Err(ParseError::NoText);
    }
    Ok(Normalized { text, replaced })
}

fn decode_lossy(content: &[u8]) -> (String, usize) {
    let mut out = String::with_capacity(content.len());
    let mut replaced = 0;
    for chunk in content.utf8_chunks() {
        out.push_str(chunk.valid());
        if !chunk.invalid().is_empty() {
            out.push('\u{FFFD}');
            replaced += 1;
        }
    }
    (out, replaced)
}

/// For full SGML submissions, the body of the first `<TEXT>` block.
fn primary_document(decoded: &str) -> &str {
    if !decoded.contains("<DOCUMENT>") {
        return decoded;
    }
    let Some(open) = decoded.find("<TEXT>") else {
        return decoded;
    };
    let body = &decoded[open + "<TEXT>".len()..];
    match body.find("</TEXT>") {
        Some(close) => &body[..close],
        None => body,
    }
}

fn looks_like_html(body: &str) -> bool {
    let head: String = body.chars().take(4000).collect::<String>().to_ascii_lowercase();
    ["<html", "<body", "<div", "<p>", "<p ", "<table", "<br"]
        .iter()
        .any(|tag| head.contains(tag))
}

const BLOCK_TAGS: &[&str] = &[
    "address", "article", "blockquote", "body", "br", "caption", "dd", "div", "dl", "dt",
    "footer", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "html", "li", "ol", "p", "pre",
    "section", "table", "tbody", "thead", "tfoot", "tr", "ul",
];
const CELL_TAGS: &[&str] = &["td", "th"];
const SKIPPED_ELEMENTS: &[&str] = &["script", "style", "head", "title", "ix:header"];

/// Strip tags; paragraph breaks become `\n`, every other whitespace a space.
fn html_to_flat(body: &str) -> String {
    let mut out = String::with_capacity(body.len() / 2);
    let mut rest = body;
    while let Some(lt) = rest.find('<') {
        push_text(&mut out, &rest[..lt]);
        rest = &rest[lt..];
        if rest.starts_with("<!--") {
            rest = match rest.find("-->") {
                Some(end) => &rest[end + 3..],
                None => "",
            };
            continue;
        }
        let Some(gt) = rest.find('>') else {
            push_text(&mut out, rest);
            rest = "";
            break;
        };
        let inner = &rest[1..gt];
        let closing = inner.starts_with('/');
        let name: String = inner
            .trim_start_matches('/')
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric() || *c == ':' || *c == '-')
            .collect::<String>()
            .to_ascii_lowercase();
        if name.is_empty() && !inner.starts_with('!') && !inner.starts_with('?') {
            // A bare '<' in text, e.g. "< 5%".
            push_text(&mut out, "<");
            rest = &rest[1..];
            continue;
        }
        rest = &rest[gt + 1..];
        if !closing && !inner.ends_with('/') && SKIPPED_ELEMENTS.contains(&name.as_str()) {
            rest = skip_element(rest, &name);
            out.push(' ');
        } else if BLOCK_TAGS.contains(&name.as_str()) {
            out.push('\n');
        } else if CELL_TAGS.contains(&name.as_str()) {
            out.push(' ');
        }
    }
    push_text(&mut out, rest);
    out
}

fn skip_element<'a>(rest: &'a str, name: &str) -> &'a str {
    let needle = format!("</{name}");
    match find_ascii_ci(rest, &needle) {
        Some(pos) => {
            let after = &rest[pos..];
            match after.find('>') {
                Some(gt) => &after[gt + 1..],
                None => "",
            }
        }
        None => "",
    }
}

fn find_ascii_ci(haystack: &str, needle: &str) -> Option<usize> {
    let n = needle.as_bytes();
    haystack
        .as_bytes()
        .windows(n.len())
        .position(|w| w.eq_ignore_ascii_case(n))
}

/// Append text content, decoding character references and flattening
/// source line breaks into spaces.
fn push_text(out: &mut String, text: &str) {
    let mut rest = text;
    while let Some(amp) = rest.find('&') {
        push_flat(out, &rest[..amp]);
        rest = &rest[amp..];
        let semi = rest
            .char_indices()
            .take(12)
            .find(|(_, c)| *c == ';')
            .map(|(i, _)| i);
        match semi.and_then(|s| decode_entity(&rest[1..s]).map(|d| (s, d))) {
            Some((s, decoded)) => {
                if let Some(c) = decoded {
                    out.push(c);
                }
                rest = &rest[s + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    push_flat(out, rest);
}

fn push_flat(out: &mut String, text: &str) {
    out.extend(text.chars().map(|c| if c == '\n' || c == '\r' { ' ' } else { c }));
}

/// `Some(None)` means a recognized entity that renders as nothing.
fn decode_entity(name: &str) -> Option<Option<char>> {
    if let Some(num) = name.strip_prefix('#') {
        let code = match num.strip_prefix(['x', 'X']) {
            Some(hex) => u32::from_str_radix(hex, 16).ok()?,
            None => num.parse().ok()?,
        };
        return Some(Some(char::from_u32(code).unwrap_or('\u{FFFD}')));
    }
    let c = match name {
        "nbsp" => '\u{a0}',
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "rsquo" => '\u{2019}',
        "lsquo" => '\u{2018}',
        "rdquo" => '\u{201d}',
        "ldquo" => '\u{201c}',
        "mdash" => '\u{2014}',
        "ndash" => '\u{2013}',
        "bull" => '\u{2022}',
        "middot" => '\u{b7}',
        "hellip" => '\u{2026}',
        "copy" => '\u{a9}',
        "reg" => '\u{ae}',
        "trade" => '\u{2122}',
        "sect" => '\u{a7}',
        "ensp" | "emsp" | "thinsp" => ' ',
        "shy" | "zwsp" | "zwnj" | "zwj" => return Some(None),
        _ => return None,
    };
    Some(Some(c))
}

/// Plain text: blank lines separate paragraphs, single newlines are wraps.
fn plain_to_flat(body: &str) -> String {
    let mut out = String::with_capacity(body.len());
    for line in body.lines() {
        if line.trim().is_empty() {
            out.push('\n');
        } else {
            out.push_str(line);
            out.push(' ');
        }
    }
    out
}

fn is_invisible(c: char) -> bool {
    matches!(c, '\u{200b}' | '\u{200c}' | '\u{200d}' | '\u{feff}' | '\u{ad}')
}

fn collapse(flat: &str) -> String {
    let mut out = String::with_capacity(flat.len());
    for line in flat.split('\n') {
        let mut words = line
            .split(|c: char| c.is_whitespace())
            .map(|w| w.trim_matches(is_invisible))
            .filter(|w| !w.is_empty())
            .peekable();
        if words.peek().is_none() {
            continue;
        }
        if !out.is_empty() {
            out.push('\n');
        }
        let mut first = true;
        for word in words {
            if !first {
                out.push(' ');
            }
            first = false;
            out.extend(word.chars().filter(|c| !is_invisible(*c)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn html(s: &str) -> String {
        normalize_bytes(s.as_bytes(), ContentKind::Html).unwrap().text
    }

    #[test]
    fn strips_markup_and_entities() {
        assert_eq!(html("<p>We&nbsp;use <b>AI</b>.</p>"), "We use AI.");
        assert_eq!(
            html("<div>A &amp; B&#8217;s <i>tools</i></div><div>Next&#x2014;para</div>"),
            "A & B\u{2019}s tools\nNext\u{2014}para"
        );
    }

    #[test]
    fn blocks_and_cells() {
        let doc = "<html><head><title>x</title><style>p{}</style></head><body>\
                   <table><tr><td>Item 1A.</td><td>Risk Factors</td><td>12</td></tr>\
                   <tr><td>Item 2.</td><td>Properties</td><td>30</td></tr></table>\
                   <p>Body\n   text\r\nwrapped</p><br/><script>var a = '<p>';</script>\
                   <!-- comment <p>hidden</p> --><p>tail &unknown; 5 < 6</p></body></html>";
        assert_eq!(
            html(doc),
            "Item 1A. Risk Factors 12\nItem 2. Properties 30\nBody text wrapped\ntail &unknown; 5 < 6"
        );
    }

    #[test]
    fn hidden_xbrl_header_is_skipped() {
        let doc = "<div style=\"display:none\"><ix:header><ix:hidden>FY false</ix:hidden></ix:header></div><p>Visible</p>";
        assert_eq!(html(doc), "Visible");
    }

    #[test]
    fn plain_text_paragraphs() {
        let doc = "ITEM 1A.  RISK FACTORS\n\nOur business is\nsubject to risks.\n\n\n  Next   paragraph.\n";
        let n = normalize_bytes(doc.as_bytes(), ContentKind::PlainText).unwrap();
        assert_eq!(
            n.text,
            "ITEM 1A. RISK FACTORS\nOur business is subject to risks.\nNext paragraph."
        );
    }

    #[test]
    fn sgml_wrapper_selects_first_text_block() {
        let doc = "<SEC-DOCUMENT>\n<DOCUMENT>\n<TYPE>10-K\n<TEXT>\n<html><body><p>Primary</p></body></html>\n</TEXT>\n</DOCUMENT>\n<DOCUMENT>\n<TYPE>EX-21\n<TEXT>\nExhibit text\n</TEXT>\n</DOCUMENT>";
        let n = normalize_bytes(doc.as_bytes(), ContentKind::PlainText).unwrap();
        assert_eq!(n.text, "Primary");
    }

    #[test]
    fn invalid_utf8_is_replaced_and_counted() {
        let mut bytes = b"<p>caf".to_vec();
        bytes.extend([0xff, 0xfe]);
        bytes.extend(b" ok</p>");
        let n = normalize_bytes(&bytes, ContentKind::Html).unwrap();
        // One replacement per maximal invalid subsequence, as in
        // `String::from_utf8_lossy`.
        assert_eq!(n.text, "caf\u{FFFD}\u{FFFD} ok");
        assert_eq!(n.replaced, 2);
    }

    #[test]
    fn empty_and_textless_content_fail() {
        assert_eq!(
            normalize_bytes(b"", ContentKind::Html),
            Err(ParseError::Empty)
        );
        assert_eq!(
            normalize_bytes(b"<div><img src=x></div>  <br>", ContentKind::Html),
            Err(ParseError::NoText)
        );
    }
}
