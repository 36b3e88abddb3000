//! Commands that read a finished store: stats, search, export, sample,
//! agreement and precision.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use tenkscan_core::analytics::{
    precision_lower_bound_with_tail, BoundMethod, CorpusIndex, Metric, Scope, Tail,
};
use tenkscan_core::annotation::{
    build_sample_groups, cohens_kappa, confusion_matrix, default_top_tech, AnnotationStore, LabelSchema,
    RiskCategory, SentenceKey,
};
use tenkscan_core::export::{encode, export_rows, ExportFormat};
use tenkscan_core::extraction::sample_matches;
use tenkscan_core::query::{stats_csv, SearchQuery, Snapshot, StatsQuery};
use tenkscan_core::store::{self, RecordFilter};

use crate::workdir::{require, write_file, ConfigError, Provenance, WorkDir};

pub fn load_snapshot(path: &Path) -> Result<Snapshot> {
    require(path, "extract")?;
    let batch = store::load(path, &RecordFilter::all())?;
    Ok(Snapshot::new(batch)?)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| anyhow::anyhow!("csv: {}", e.error()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Every table of the report, as (file name, csv bytes).
pub fn report_tables(index: &CorpusIndex, top_sic: usize) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let mut tables = Vec::new();

    let mut w = csv_writer();
    w.write_record(["year", "filings", "pct_companies", "avg_unique_sentences"])?;
    for r in index.mention_table() {
        w.write_record([
            r.year.to_string(),
            r.filings.to_string(),
            r.pct_companies.to_string(),
            opt(r.avg_unique_sentences),
        ])?;
    }
    tables.push(("mentions_by_year.csv", finish(w)?));

    let mut w = csv_writer();
    w.write_record(["year", "pct_business", "pct_risk"])?;
    for r in index.section_trend() {
        w.write_record([r.year.to_string(), r.pct_business.to_string(), r.pct_risk.to_string()])?;
    }
    tables.push(("section_trend.csv", finish(w)?));

    tables.push(("metrics.csv", stats_csv(&index.all_stat_rows())));

    let mut w = csv_writer();
    w.write_record(["year", "sic", "filings", "pct_all", "pct_business", "pct_risk"])?;
    for year in index.years() {
        for g in index.industry_breakdown(year, top_sic)? {
            w.write_record([
                year.to_string(),
                g.sic.clone(),
                g.filings.to_string(),
                g.pct_all.to_string(),
                g.pct_business.to_string(),
                g.pct_risk.to_string(),
            ])?;
        }
    }
    tables.push(("industry.csv", finish(w)?));

    let mut w = csv_writer();
    w.write_record(["year", "both", "risk_only", "business_only", "neither"])?;
    for year in index.years() {
        let o = index.cross_section_overlap(year)?;
        w.write_record([
            year.to_string(),
            o.both.to_string(),
            o.risk_only.to_string(),
            o.business_only.to_string(),
            o.neither.to_string(),
        ])?;
    }
    tables.push(("overlap.csv", finish(w)?));

    let mut w = csv_writer();
    w.write_record(["item", "share"])?;
    if !index.is_empty() {
        for (item, share) in index.section_share()? {
            w.write_record([item.to_string(), share.to_string()])?;
        }
    }
    tables.push(("section_share.csv", finish(w)?));

    let mut w = csv_writer();
    w.write_record(["metric", "scope", "from", "to", "multiplier"])?;
    let years = index.years();
    if let (Some(&from), Some(&to)) = (years.first(), years.last()) {
        for metric in [Metric::PctCompanies, Metric::AvgUniqueSentences] {
            for scope in [Scope::All, Scope::Business, Scope::Risk] {
                // Undefined growth (zero base) is left blank.
                let m = index.growth_multiplier(metric, scope, from, to).ok();
                w.write_record([metric.to_string(), scope.to_string(), from.to_string(), to.to_string(), opt(m)])?;
            }
        }
    }
    tables.push(("growth.csv", finish(w)?));
    Ok(tables)
}

pub struct StatsArgs {
    pub store: PathBuf,
    /// When present, a single metric is printed as CSV.
    pub params: Option<Vec<(String, String)>>,
    pub out: Option<PathBuf>,
    pub top_sic: usize,
}

pub fn stats(work: &WorkDir, args: &StatsArgs) -> Result<Option<Value>> {
    let snap = load_snapshot(&args.store)?;
    if let Some(params) = &args.params {
        let q = StatsQuery::from_params(params.iter().map(|(k, v)| (k.as_str(), v.as_str())))
            .map_err(|e| ConfigError(e.to_string()))?;
        let bytes = stats_csv(&snap.stats(&q)?);
        match &args.out {
            Some(path) => {
                write_file(path, &bytes)?;
                Provenance::new("stats", json!({ "query": q }))
                    .input(work, &args.store)?
                    .output(work, path)?
                    .write_beside(path)?;
                return Ok(Some(json!({ "rows": bytes.iter().filter(|b| **b == b'\n').count() - 1, "out": path })));
            }
            None => {
                use std::io::Write;
                std::io::stdout().write_all(&bytes)?;
                return Ok(None);
            }
        }
    }

    let dir = args.out.clone().unwrap_or_else(|| work.stats());
    fs::create_dir_all(&dir).with_context(|| format!("create {}", dir.display()))?;
    let mut prov = Provenance::new("stats", json!({ "top_sic": args.top_sic })).input(work, &args.store)?;
    let mut written = Vec::new();
    for (name, bytes) in report_tables(snap.index(), args.top_sic)? {
        let path = dir.join(name);
        write_file(&path, &bytes)?;
        prov = prov.output(work, &path)?;
        written.push(name);
    }
    prov.write_beside(&dir)?;
    Ok(Some(json!({ "dir": dir, "tables": written, "years": snap.index().years() })))
}

pub fn query_from(params: &[(String, String)]) -> Result<SearchQuery> {
    Ok(SearchQuery::from_params(params.iter().map(|(k, v)| (k.as_str(), v.as_str())))
        .map_err(|e| ConfigError(e.to_string()))?)
}

pub fn search(store: &Path, params: &[(String, String)]) -> Result<Value> {
    let snap = load_snapshot(store)?;
    let q = query_from(params)?;
    Ok(serde_json::to_value(snap.search(&q)?)?)
}

pub struct ExportArgs {
    pub store: PathBuf,
    pub params: Vec<(String, String)>,
    pub format: ExportFormat,
    pub out: Option<PathBuf>,
}

pub fn export(work: &WorkDir, args: &ExportArgs) -> Result<Value> {
    let snap = load_snapshot(&args.store)?;
    let q = query_from(&args.params)?;
    let rows = snap.export(&q)?;
    let bytes = encode(&rows, args.format)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| work.exports().join(format!("matches.{}", args.format.extension())));
    write_file(&out, &bytes)?;
    Provenance::new("export", json!({ "query": q, "format": args.format }))
        .input(work, &args.store)?
        .output(work, &out)?
        .write_beside(&out)?;
    Ok(json!({ "rows": rows.len(), "out": out }))
}

pub struct SampleArgs {
    pub store: PathBuf,
    pub n: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub groups_year: Option<i32>,
    pub top_tech: Option<PathBuf>,
}

pub fn sample(work: &WorkDir, args: &SampleArgs) -> Result<Value> {
    let snap = load_snapshot(&args.store)?;
    let dir = args.out_dir.clone().unwrap_or_else(|| work.sample());
    let matches = &snap.batch().matches;
    let drawn = sample_matches(matches, args.n, args.seed).map_err(|e| ConfigError(e.to_string()))?;
    let rows = export_rows(&drawn);
    let sample_path = dir.join("precision_sample.csv");
    write_file(&sample_path, &encode(&rows, ExportFormat::Csv)?)?;
    Provenance::new("sample", json!({ "n": args.n, "seed": args.seed, "population": matches.len() }))
        .input(work, &args.store)?
        .output(work, &sample_path)?
        .write_beside(&sample_path)?;
    let mut summary = json!({ "sampled": rows.len(), "population": matches.len(), "precision_sample": sample_path });

    if let Some(year) = args.groups_year {
        let names = match &args.top_tech {
            Some(path) => {
                require(path, "sample --top-tech <existing file>")?;
                fs::read_to_string(path)?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::to_string)
                    .collect()
            }
            None => default_top_tech(),
        };
        let groups = build_sample_groups(snap.index(), year, args.seed, &names)?;
        let groups_path = dir.join("groups.json");
        write_file(&groups_path, &serde_json::to_vec_pretty(&groups)?)?;

        // Worksheet for annotators: every keyword sentence of every member.
        let mut w = csv_writer();
        w.write_record(["sentence", "group", "company_name", "item", "sentence_text"])?;
        for g in &groups {
            for f in &g.members {
                for s in snap.index().sentences_of(f.accession_number.as_str()) {
                    w.write_record([
                        SentenceKey::of(s).to_string(),
                        g.name.to_string(),
                        f.company_name.clone(),
                        s.item_id.to_string(),
                        s.sentence_text.clone(),
                    ])?;
                }
            }
        }
        let sheet_path = dir.join("annotation_sheet.csv");
        write_file(&sheet_path, &finish(w)?)?;
        Provenance::new("sample", json!({ "groups_year": year, "seed": args.seed, "top_tech": names }))
            .input(work, &args.store)?
            .output(work, &groups_path)?
            .output(work, &sheet_path)?
            .write_beside(&groups_path)?;
        summary["groups"] = json!(groups
            .iter()
            .map(|g| json!({ "name": g.name, "members": g.members.len() }))
            .collect::<Vec<_>>());
        summary["annotation_sheet"] = json!(sheet_path);
    }
    Ok(summary)
}

pub fn agreement(annotations: &Path, schema: Option<&Path>) -> Result<Value> {
    require(annotations, "the annotation round")?;
    let schema = match schema {
        Some(p) => LabelSchema::load(p).map_err(|e| ConfigError(e.to_string()))?,
        None => LabelSchema::default(),
    };
    let file = fs::File::open(annotations)?;
    let store = AnnotationStore::import_csv(schema, file)?;
    let mut per = Vec::new();
    for category in RiskCategory::ALL {
        let table = confusion_matrix(&store, category);
        let kappa = cohens_kappa(&store, category).ok();
        per.push(json!({
            "category": category,
            "pairs": table.matrix.n(),
            "excluded": table.excluded,
            "percent_agreement": table.matrix.percent_agreement(),
            "kappa": kappa.and_then(|k| k.value),
            "p_o": kappa.map(|k| k.p_o),
            "p_e": kappa.map(|k| k.p_e),
        }));
    }
    Ok(json!({ "sentences": store.sentences().count(), "categories": per }))
}

pub fn precision(n: u64, errors: u64, confidence: f64, method: BoundMethod, tail: Option<Tail>) -> Result<Value> {
    if errors > n {
        bail!(ConfigError(format!("--errors {errors} exceeds --n {n}")));
    }
    let tail = tail.unwrap_or(method.default_tail());
    let b = precision_lower_bound_with_tail(n, errors, confidence, method, tail)
        .map_err(|e| ConfigError(e.to_string()))?;
    Ok(json!({
        "n": n,
        "errors": errors,
        "confidence": confidence,
        "method": method,
        "tail": tail,
        "point": b.point,
        "lower": b.lower,
        "z": b.z,
        "degenerate": b.degenerate,
    }))
}
