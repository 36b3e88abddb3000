//! Rule-based sentence splitting for normalized filing text.

use std::ops::Range;

/// Tokens that end in a period without ending a sentence.
const ABBREVIATIONS: &[&str] = &["inc.", "corp.", "u.s.", "e.g.", "i.e.", "al."];
/// Parenthetical spans shorter than this never contain a sentence break.
const SHORT_PAREN_CHARS: usize = 60;

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}')
}

/// Split text into sentence spans (byte ranges into `text`).
///
/// A sentence ends at a line break, at the end of text, or after `.`, `!`
/// or `?` (plus closing quotes/brackets) followed by whitespace and an
/// uppercase letter or digit. Known abbreviations and short parentheticals
/// suppress the break. Spans exclude surrounding whitespace.
pub fn split_sentences(text: &str) -> Vec<Range<usize>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut open_parens: Vec<usize> = Vec::new();
    let mut i = 0;

    let close = |spans: &mut Vec<Range<usize>>, from: usize, to: usize| {
        let trimmed = text[from..to].trim_end();
        if !trimmed.is_empty() {
            spans.push(from..from + trimmed.len());
        }
    };

    while i < chars.len() {
        let (pos, c) = chars[i];
        if c == '\n' {
            if let Some(s) = start.take() {
                close(&mut spans, s, pos);
            }
            open_parens.clear();
            i += 1;
            continue;
        }
        if start.is_none() {
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            start = Some(pos);
        }
        match c {
            '(' => open_parens.push(i),
            ')' => {
                open_parens.pop();
            }
            _ => {}
        }
        if !is_terminator(c) {
            i += 1;
            continue;
        }

        // Extend over repeated terminators and closing punctuation.
        let mut j = i + 1;
        while j < chars.len() && (is_terminator(chars[j].1) || is_closer(chars[j].1)) {
            j += 1;
        }
        let end_byte = chars.get(j).map_or(text.len(), |(p, _)| *p);
        let breaks = match chars.get(j) {
            None => true,
            Some((_, '\n')) => true,
            Some((_, next)) if next.is_whitespace() => {
                starts_sentence(&chars[j..])
                    && !(c == '.' && is_abbreviation(text, start.unwrap_or(0), pos))
                    && !inside_short_paren(&chars, &open_parens, i)
            }
            _ => false,
        };
        if breaks {
            if let Some(s) = start.take() {
                close(&mut spans, s, end_byte);
            }
            open_parens.clear();
        }
        i = j;
    }
    if let Some(s) = start {
        close(&mut spans, s, text.len());
    }
    spans
}

fn starts_sentence(rest: &[(usize, char)]) -> bool {
    rest.iter()
        .map(|(_, c)| *c)
        .skip_while(|c| c.is_whitespace() && *c != '\n')
        .find(|c| !is_opener(*c))
        .is_some_and(|c| c.is_uppercase() || c.is_ascii_digit())
}

/// Whether the word ending with the period at `dot` is a known abbreviation.
fn is_abbreviation(text: &str, sentence_start: usize, dot: usize) -> bool {
    let before = &text[sentence_start..=dot];
    let word = before
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(is_opener);
    if word == "No." {
        return true;
    }
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

fn inside_short_paren(chars: &[(usize, char)], open_parens: &[usize], at: usize) -> bool {
    let Some(&open) = open_parens.last() else {
        return false;
    };
    let mut depth = 0usize;
    for (k, (_, c)) in chars.iter().enumerate().skip(at + 1) {
        if k - open >= SHORT_PAREN_CHARS || *c == '\n' {
            return false;
        }
        match c {
            '(' => depth += 1,
            ')' if depth == 0 => return true,
            ')' => depth -= 1,
            _ => {}
        }
    }
    false
}

/// Lowercase and collapse whitespace; the dedup key for a sentence.
pub fn normalized_key(sentence: &str) -> String {
    sentence
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}
