mod common;

use std::fs;
use std::process::Command;

use common::{run_ok, summary, tenkscan, Pipeline, BIN};
use tenkscan_core::analytics::assign_reporting_year;
use tenkscan_core::annotation::{Annotation, AnnotationStore, Label, LabelSchema, RiskCategory, SentenceKey};
use tenkscan_core::export::read_csv;
use tenkscan_core::FilingRef;

fn error_json(stderr: &[u8]) -> serde_json::Value {
    let text = String::from_utf8_lossy(stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("json error line");
    serde_json::from_str(line).unwrap()
}

#[test]
fn stage_without_input_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let w = tmp.path().to_str().unwrap();
    for (stage, hint) in [("parse", "crawl"), ("extract", "parse"), ("stats", "extract"), ("search", "extract")] {
        let out = tenkscan(&["--work-dir", w, stage]);
        assert_eq!(out.status.code(), Some(3), "{stage}");
        let err = error_json(&out.stderr);
        assert_eq!(err["kind"], "missing_input");
        assert_eq!(err["command"], stage);
        assert!(err["message"].as_str().unwrap().contains(&format!("run `tenkscan {hint}`")), "{err}");
    }
}

#[test]
fn crawl_needs_contact_and_polite_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let w = tmp.path().to_str().unwrap();
    let out = Command::new(BIN)
        .args(["--work-dir", w, "crawl", "--years", "2024"])
        .env_remove("SEC_CONTACT")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_json(&out.stderr)["kind"], "config");

    let out = tenkscan(&["--work-dir", w, "crawl", "--years", "2024", "--rate", "50"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(!tmp.path().join("manifest.jsonl").exists());
}

#[test]
fn recrawl_downloads_nothing() {
    let p = Pipeline::mirror_only();
    let first = summary(&run_ok(&p.crawl_args()));
    assert!(first["fetched"].as_u64().unwrap() > 100, "{first}");
    assert_eq!(first["failed"], 0);
    assert_eq!(first["index_warnings"], 1, "the planted truncated row");
    let manifest = fs::read(p.work.join("manifest.jsonl")).unwrap();

    let second = summary(&run_ok(&p.crawl_args()));
    assert_eq!(second["downloads"], 0, "{second}");
    assert_eq!(second["fetched"], first["fetched"]);
    assert_eq!(fs::read(p.work.join("manifest.jsonl")).unwrap(), manifest);
}

#[test]
fn empty_document_is_recorded_and_skipped() {
    let p = Pipeline::mirror_only();
    let doc = walk(&p.mirror.join("www.sec.gov/Archives/edgar/data"))
        .into_iter()
        .find(|f| f.extension().is_some_and(|e| e == "htm"))
        .unwrap();
    fs::write(&doc, b"").unwrap();
    let s = summary(&run_ok(&p.crawl_args()));
    assert_eq!(s["failed"], 1);
    let failures = fs::read_to_string(p.work.join("crawl_failures.jsonl")).unwrap();
    assert_eq!(failures.lines().count(), 1);
    assert!(failures.contains(doc.file_name().unwrap().to_str().unwrap()), "{failures}");
    let parsed = summary(&run_ok(&p.args(&["parse"])));
    assert_eq!(parsed["parsed"], s["fetched"]);
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

#[test]
fn full_pipeline_outputs() {
    let p = Pipeline::run("outputs", 2);
    let store = p.work.join("store.jsonl");
    let sidecar: serde_json::Value =
        serde_json::from_slice(&fs::read(p.work.join("store.jsonl.provenance.json")).unwrap()).unwrap();
    assert_eq!(sidecar["command"], "extract");
    assert_eq!(sidecar["outputs"][0]["path"], "store.jsonl");
    assert_eq!(sidecar["outputs"][0]["sha256"], tenkscan_edgar::cache::sha256_hex(&fs::read(&store).unwrap()));

    let stats = p.stats_files();
    for t in ["mentions_by_year.csv", "section_trend.csv", "metrics.csv", "industry.csv", "overlap.csv"] {
        assert!(stats.contains(&t.to_string()), "{stats:?}");
    }
    assert!(p.work.join("stats.provenance.json").exists());
    let mentions = fs::read_to_string(p.work.join("stats/mentions_by_year.csv")).unwrap();
    assert!(mentions.starts_with("year,filings,pct_companies,avg_unique_sentences\r\n"));
    assert_eq!(mentions.lines().count(), 6, "{mentions}");

    let rows = read_csv(fs::File::open(p.work.join("exports/risk_ai.csv")).unwrap()).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.section_item == "1A" && r.keyword_id == "ai"));
    let all = read_csv(fs::File::open(p.work.join("exports/all.csv")).unwrap()).unwrap();
    assert!(all.len() > rows.len());

    let xlsx = p.work.join("exports/all.xlsx");
    run_ok(&p.args(&["export", "--format", "xlsx", "--out", xlsx.to_str().unwrap()]));
    assert_eq!(&fs::read(&xlsx).unwrap()[..2], b"PK");

    let page = summary(&run_ok(&p.args(&["search", "--pattern", "deep\\w*", "--page-size", "3"])));
    assert!(page["total"].as_u64().unwrap() > 0);
    assert!(page["hits"].as_array().unwrap().len() <= 3);

    let bad = tenkscan(&p.args(&["search", "--page-size", "0"]));
    assert_eq!(bad.status.code(), Some(4));
    let bad = tenkscan(&p.args(&["stats", "--metric", "median"]));
    assert_eq!(bad.status.code(), Some(4));
}

#[test]
fn extract_restricted_to_sections_and_custom_keywords() {
    let mut p = Pipeline::mirror_only();
    p.workers = 3;
    run_ok(&p.crawl_args());
    run_ok(&p.args(&["parse"]));
    let kw = p.work.join("kw.csv");
    fs::write(&kw, "id,raw,case_mode,boundary\nml,machine learning,insensitive,true\nrisk_ai,AI,exact,true\n").unwrap();
    let s = summary(&run_ok(&p.args(&["extract", "--keywords", kw.to_str().unwrap(), "--sections", "1A"])));
    assert!(s["matches"].as_u64().unwrap() > 0);
    let out = p.work.join("m.csv");
    run_ok(&p.args(&["export", "--out", out.to_str().unwrap()]));
    let rows = read_csv(fs::File::open(&out).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.section_item == "1A"));
    assert!(rows.iter().all(|r| r.keyword_id == "ml" || r.keyword_id == "risk_ai"));

    let missing = tenkscan(&p.args(&["extract", "--keywords", "/nonexistent/kw.csv"]));
    assert_eq!(missing.status.code(), Some(3));
    fs::write(&kw, "id,raw,case_mode,boundary\nbad,(unclosed,exact,true\n").unwrap();
    let invalid = tenkscan(&p.args(&["extract", "--keywords", kw.to_str().unwrap()]));
    assert_eq!(invalid.status.code(), Some(4));
}

fn filings_of_year(store: &std::path::Path, year: i32) -> Vec<FilingRef> {
    fs::read_to_string(store)
        .unwrap()
        .lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .filter(|v| v["kind"] == "filing")
        .map(|v| serde_json::from_value::<FilingRef>(v["record"]["filing"].clone()).unwrap())
        .filter(|f| assign_reporting_year(f).year == year)
        .collect()
}

#[test]
fn sample_and_groups_are_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let mirror = tmp.path().join("mirror");
    let w = tmp.path().join("w");
    let w = w.to_str().unwrap();
    run_ok(&["synth", "--out", mirror.to_str().unwrap(), "--companies", "400", "--years", "2024..2024", "--seed", "3"]);
    run_ok(&["--work-dir", w, "crawl", "--years", "2024", "--mirror", mirror.to_str().unwrap(), "--rate", "5000"]);
    run_ok(&["--work-dir", w, "parse"]);
    run_ok(&["--work-dir", w, "extract"]);

    let store = tmp.path().join("w/store.jsonl");
    let names: Vec<String> = filings_of_year(&store, 2024).iter().take(10).map(|f| f.company_name.clone()).collect();
    let top = tmp.path().join("top.txt");
    fs::write(&top, names.join("\n")).unwrap();

    let draw = |seed: &str, out: &str| {
        let dir = tmp.path().join(out);
        let s = summary(&run_ok(&[
            "--work-dir", w, "sample", "--n", "25", "--seed", seed, "--out", dir.to_str().unwrap(),
            "--groups-year", "2024", "--top-tech", top.to_str().unwrap(),
        ]));
        (s, fs::read(dir.join("precision_sample.csv")).unwrap(), fs::read(dir.join("groups.json")).unwrap())
    };
    let (s, sample_a, groups_a) = draw("9", "a");
    assert_eq!(s["sampled"], 25);
    let sizes: Vec<u64> = s["groups"].as_array().unwrap().iter().map(|g| g["members"].as_u64().unwrap()).collect();
    assert_eq!(sizes, [20, 10, 20]);
    let (_, sample_b, groups_b) = draw("9", "b");
    assert_eq!(sample_a, sample_b);
    assert_eq!(groups_a, groups_b);
    let (_, sample_c, _) = draw("10", "c");
    assert_ne!(sample_a, sample_c);
    assert!(tmp.path().join("a/annotation_sheet.csv").exists());
    assert!(tmp.path().join("a/groups.json.provenance.json").exists());

    let too_many = tenkscan(&["--work-dir", w, "sample", "--n", "1000000"]);
    assert_eq!(too_many.status.code(), Some(4));
}

#[test]
fn agreement_and_precision_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let mut store = AnnotationStore::new(LabelSchema::default());
    let at = chrono::DateTime::from_timestamp(1_700_000_000, 0).unwrap();
    let pairs = [(true, true), (true, true), (true, true), (true, true), (false, false), (false, false), (false, false), (false, false), (true, false), (false, true)];
    for (i, (a, b)) in pairs.into_iter().enumerate() {
        let key = SentenceKey::new("0000000001-24-000001".parse().unwrap(), tenkscan_core::ItemId::Item1A, i);
        for (who, yes) in [("ann", a), ("bob", b)] {
            let labels = yes.then(|| Label::new(RiskCategory::Competitive));
            store.record(Annotation::new(key.clone(), who, labels, at)).unwrap();
        }
    }
    let path = tmp.path().join("labels.csv");
    store.export_csv(fs::File::create(&path).unwrap()).unwrap();
    let s = summary(&run_ok(&["agreement", "--annotations", path.to_str().unwrap()]));
    let comp = s["categories"].as_array().unwrap().iter().find(|c| c["category"] == "competitive").unwrap();
    assert!((comp["kappa"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    assert_eq!(comp["pairs"], 10);

    let s = summary(&run_ok(&["precision", "--n", "385", "--errors", "2"]));
    assert!((s["lower"].as_f64().unwrap() - 0.98762).abs() < 1e-5);
    let s = summary(&run_ok(&["precision", "--n", "385", "--errors", "2", "--method", "wilson"]));
    assert!((0.982..=0.986).contains(&s["lower"].as_f64().unwrap()));
    let bad = tenkscan(&["precision", "--n", "3", "--errors", "5"]);
    assert_eq!(bad.status.code(), Some(4));
}
