use proptest::prelude::*;
use serde_json::Value;
use tenkscan_core::extraction::split_sentences;
use tenkscan_wasm::demo::{highlight, precision, segment};

fn sentences(v: &Value) -> Vec<Vec<(String, Option<String>)>> {
    v["sentences"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            s.as_array()
                .unwrap()
                .iter()
                .map(|p| (p["text"].as_str().unwrap().to_string(), p["keyword"].as_str().map(str::to_string)))
                .collect()
        })
        .collect()
}

#[test]
fn default_list_marks_ai_terms() {
    let text = "We use machine learning in pricing. Our AI tools may fail.\nNothing here.";
    let v: Value = serde_json::from_str(&highlight(text, "").unwrap()).unwrap();
    assert_eq!(v["keywords"], 17);
    assert_eq!(v["matches"], 2);
    let s = sentences(&v);
    assert_eq!(s.len(), 3);
    let marked: Vec<_> = s.iter().flatten().filter_map(|(t, k)| k.as_ref().map(|k| (t.as_str(), k.as_str()))).collect();
    assert_eq!(marked.len(), 2);
    assert_eq!(marked[0].0, "machine learning");
    assert_eq!(marked[1].0, "AI");
    assert!(s[2].iter().all(|(_, k)| k.is_none()));
}

#[test]
fn custom_terms_are_literal_and_bounded() {
    let text = "Cloud (beta) costs rose. Cloudy skies; a cloud.";
    let v: Value = serde_json::from_str(&highlight(text, "cloud, (beta), Cloud").unwrap()).unwrap();
    assert_eq!(v["keywords"], 2);
    let marked: Vec<String> = sentences(&v).into_iter().flatten().filter(|(_, k)| k.is_some()).map(|(t, _)| t).collect();
    assert_eq!(marked, ["Cloud", "(beta)", "cloud"]);
}

#[test]
fn precision_matches_closed_form() {
    let v: Value = serde_json::from_str(&precision(385, 2, 0.95, "wald").unwrap()).unwrap();
    let p = 383.0 / 385.0;
    let z = 1.959963984540054;
    let want = p - z * (p * (1.0 - p) / 385.0_f64).sqrt();
    assert!((v["lower"].as_f64().unwrap() - want).abs() < 1e-9);
    assert!(precision(3, 4, 0.95, "wald").is_err());
    assert!(precision(3, 1, 0.95, "agresti").is_err());
}

#[test]
fn segment_finds_items() {
    let filler = "The company operates several lines of business across regions. ".repeat(12);
    let doc = format!(
        "PART I\n\nItem 1. Business\n\n{filler}\n\nItem 1A. Risk Factors\n\n{filler}\n\nItem 2. Properties\n\n{filler}\n"
    );
    let v: Value = serde_json::from_str(&segment(&doc, false, 200).unwrap()).unwrap();
    let items: Vec<&str> = v.as_array().unwrap().iter().map(|s| s["item"].as_str().unwrap()).collect();
    assert_eq!(items, ["1", "1A", "2"]);
    assert!(v[1]["preview"].as_str().unwrap().chars().count() <= 280);

    let html = format!("<html><body><p>Item 1. Business</p><p>{filler}</p><p>Item 1A. Risk Factors</p><p>{filler}</p></body></html>");
    let v: Value = serde_json::from_str(&segment(&html, true, 200).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

proptest! {
    #[test]
    fn pieces_rebuild_every_sentence(text in "[A-Za-z .,!?\n]{0,200}( AI| machine learning| neural network)?[A-Za-z .\n]{0,80}") {
        let v: Value = serde_json::from_str(&highlight(&text, "").unwrap()).unwrap();
        let rebuilt: Vec<String> = sentences(&v).into_iter().map(|s| s.into_iter().map(|(t, _)| t).collect()).collect();
        let want: Vec<&str> = split_sentences(&text).into_iter().map(|r| &text[r]).collect();
        prop_assert_eq!(rebuilt, want);
    }
}
