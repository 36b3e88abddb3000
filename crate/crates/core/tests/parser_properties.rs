//! Segmentation invariants over generated filings.

use proptest::prelude::*;
use tenkscan_core::parser::{segment_items, SegmentOptions};
use tenkscan_core::ItemId;

const TITLES: [(ItemId, &str); 10] = [
    (ItemId::Item1, "Business"),
    (ItemId::Item1A, "Risk Factors"),
    (ItemId::Item1B, "Unresolved Staff Comments"),
    (ItemId::Item1C, "Cybersecurity"),
    (ItemId::Item2, "Properties"),
    (ItemId::Item3, "Legal Proceedings"),
    (ItemId::Item5, "Market for Registrant's Common Equity"),
    (ItemId::Item7, "Management's Discussion and Analysis"),
    (ItemId::Item8, "Financial Statements and Supplementary Data"),
    (ItemId::Item9A, "Controls and Procedures"),
];

#[derive(Debug, Clone)]
struct Layout {
    /// Indices into TITLES, ascending.
    items: Vec<usize>,
    /// 0: "Item 1. Title", 1: "ITEM 1: TITLE", 2: "Item 1 Title", 3: "Item 1." + title on next line
    style: u8,
    body_chars: Vec<usize>,
    page_numbers: Vec<u16>,
    preamble: String,
}

fn heading(id: ItemId, title: &str, style: u8) -> String {
    match style {
        0 => format!("Item {id}. {title}"),
        1 => format!("ITEM {id}: {}", title.to_uppercase()),
        2 => format!("Item {id} {title}"),
        _ => format!("Item {id}.\n{title}"),
    }
}

fn body(id: ItemId, chars: usize) -> String {
    let sentence = format!("Text of item {id} about our operations and the risks we face. ");
    let mut s = sentence.repeat(chars / sentence.len() + 1);
    s.truncate(chars);
    s.trim_end().to_string()
}

fn layout() -> impl Strategy<Value = Layout> {
    (
        prop::collection::btree_set(2usize..TITLES.len(), 0..6),
        0u8..4,
        prop::collection::vec(500usize..2500, TITLES.len()),
        prop::collection::vec(1u16..200, TITLES.len()),
        "[A-Za-z ,.]{0,300}",
    )
        .prop_map(|(rest, style, body_chars, page_numbers, preamble)| {
            let mut items = vec![0, 1];
            items.extend(rest);
            Layout { items, style, body_chars, page_numbers, preamble }
        })
}

/// Returns the document and, for each planted item, its expected text.
fn render(l: &Layout) -> (String, Vec<(ItemId, String)>) {
    let mut text = format!("ANNUAL REPORT\n{}\nPART I\n", l.preamble.trim());
    let mut expected = Vec::new();
    for &i in &l.items {
        let (id, title) = TITLES[i];
        let section = format!("{}\n{}\n", heading(id, title, l.style), body(id, l.body_chars[i]));
        text.push_str(&section);
        expected.push((id, section));
    }
    (text, expected)
}

fn toc(l: &Layout) -> String {
    let mut t = String::from("TABLE OF CONTENTS\n");
    for &i in &l.items {
        let (id, title) = TITLES[i];
        t.push_str(&format!("Item {id}. {title} {}\n", l.page_numbers[i]));
    }
    t
}

fn slice(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end - start).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sections_are_ordered_and_toc_never_changes_them(l in layout()) {
        let opts = SegmentOptions::default();
        let (doc, expected) = render(&l);
        let plain = segment_items(&doc, &opts).unwrap();
        let len = doc.chars().count();
        for w in plain.windows(2) {
            prop_assert!(w[0].end <= w[1].start);
            prop_assert!(w[0].item_id < w[1].item_id);
        }
        for s in &plain {
            prop_assert!(s.start < s.end && s.end <= len);
        }
        let got: Vec<(ItemId, String)> = plain
            .iter()
            .map(|s| (s.item_id, slice(&doc, s.start, s.end)))
            .collect();
        prop_assert_eq!(&got, &expected);

        let with_toc = format!("{}{}", toc(&l), doc);
        let shifted = segment_items(&with_toc, &opts).unwrap();
        let got_toc: Vec<(ItemId, String)> = shifted
            .iter()
            .map(|s| (s.item_id, slice(&with_toc, s.start, s.end)))
            .collect();
        prop_assert_eq!(got_toc, expected);
    }
}
