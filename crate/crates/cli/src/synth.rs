//! Deterministic synthetic archive mirror.
//!
//! Writes a directory tree laid out like the public archive hosts
//! (`www.sec.gov/...`, `data.sec.gov/...`) so that `crawl --mirror` runs the
//! real listing and download code offline. Companies file one 10-K a year
//! with Items 1, 1A, 1B, 2 and 7; keyword sentences are planted with a
//! probability that rises over time.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

const ADJECTIVES: &[&str] = &[
    "Northern", "Blue", "Granite", "Silver", "Pacific", "Summit", "Harbor", "Cedar", "Atlas", "Prairie", "Crescent",
    "Evergreen", "Liberty", "Pioneer", "Coastal", "Redwood",
];
const NOUNS: &[&str] = &[
    "Systems", "Foods", "Bancorp", "Energy", "Logistics", "Health", "Networks", "Materials", "Motors", "Retail",
    "Analytics", "Pharma",
];
const SUFFIXES: &[&str] = &["Inc", "Corp", "Co", "Holdings Inc", "Group Inc"];
/// SIC codes, "" for filers without one.
const SICS: &[&str] = &["7372", "7372", "3674", "6022", "2834", "5411", "4213", "3711", "4911", ""];

const GENERIC_BUSINESS: &[&str] = &[
    "We operate distribution centers across the U.S. and Canada.",
    "Our products are sold through retail partners and directly to consumers.",
    "We compete on the basis of price, quality and customer service.",
    "Seasonal demand peaks in the fourth quarter of each fiscal year.",
    "Our headquarters are located in a leased facility.",
    "We had approximately 4,200 full-time employees at year end.",
    "Raw materials are purchased from a limited number of suppliers.",
    "Our brand portfolio includes several regional trademarks.",
    "Customer retention improved following the launch of our loyalty program.",
    "We maintain long-term supply agreements with key vendors, e.g. freight carriers.",
];
const GENERIC_RISK: &[&str] = &[
    "Changes in interest rates could increase our borrowing costs.",
    "We depend on key personnel and may be unable to retain them.",
    "Disruptions at our facilities could harm our operations.",
    "Our indebtedness could limit our flexibility.",
    "We are subject to extensive regulation by federal and state agencies.",
    "Cybersecurity incidents could expose us to liability.",
    "Adverse weather may reduce demand for our products.",
    "Fluctuations in commodity prices could reduce our margins.",
    "Our stock price may be volatile.",
    "Competition from Thai and Brazilian producers has increased in recent years.",
];
const AI_BUSINESS: &[&str] = &[
    "We use machine learning to forecast demand at each store.",
    "Our platform applies artificial intelligence to route deliveries.",
    "We launched generative AI features for our customer service chatbot.",
    "Computer vision systems inspect products on our assembly lines.",
    "Our recommendation systems personalize offers for members.",
    "We invest in deep learning research for drug discovery.",
    "Voice assistants let customers reorder products.",
    "Natural language processing helps us triage support tickets.",
];
const AI_RISK: &[&str] = &[
    "Our use of AI may expose us to reputational harm.",
    "Regulation of artificial intelligence could increase our compliance costs.",
    "Deepfakes could be used to impersonate our executives.",
    "Flaws in our machine learning models could produce biased outcomes.",
    "Competitors may adopt generative AI faster than we do.",
    "Attackers may use A.I. tools to target our systems.",
];
const OTHER_ITEMS: &[&str] = &[
    "We own our principal manufacturing plant and lease regional offices.",
    "Net sales increased due to higher volume and favorable pricing.",
    "Operating cash flow funded capital expenditures during the year.",
    "Gross margin decreased as input costs rose.",
];

/// form, company, cik, filed, path
type IndexRow<'a> = (&'a str, &'a str, u64, NaiveDate, String);

#[derive(Debug, Clone, Copy)]
pub struct SynthOptions {
    pub companies: usize,
    pub years: (i32, i32),
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct SynthSummary {
    pub companies: usize,
    pub filings: usize,
    pub documents_with_planted_keywords: usize,
}

struct Company {
    cik: u64,
    name: String,
    ticker: String,
    sic: &'static str,
    /// Month of fiscal year end: 12 or 6.
    fy_month: u32,
    /// First reporting year with AI language.
    adoption: i32,
}

struct Filing {
    form: &'static str,
    accession: String,
    filed: NaiveDate,
    period: NaiveDate,
    document: String,
}

fn period_end(fy_month: u32, year: i32) -> NaiveDate {
    // June fiscal years ending in year y+1 report as year y.
    match fy_month {
        12 => NaiveDate::from_ymd_opt(year, 12, 31).unwrap(),
        _ => NaiveDate::from_ymd_opt(year + 1, 6, 30).unwrap(),
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool.choose(rng).copied().unwrap_or_default()
}

fn paragraph(rng: &mut ChaCha8Rng, pool: &[&str], planted: &[&str], min_chars: usize) -> String {
    let mut sentences: Vec<String> = Vec::new();
    let mut len = 0;
    while len < min_chars {
        let s = pick(rng, pool).to_string();
        len += s.len() + 1;
        sentences.push(s);
    }
    for p in planted {
        let at = rng.random_range(0..=sentences.len());
        sentences.insert(at, (*p).to_string());
    }
    sentences.join(" ")
}

fn html_document(c: &Company, f: &Filing, items: &[(&str, &str, String)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "<html><head><title>{} 10-K</title></head><body>\n<p>UNITED STATES SECURITIES AND EXCHANGE COMMISSION</p>\n\
         <p>FORM 10-K</p>\n<p>{}</p>\n<p>For the fiscal year ended {}</p>\n",
        c.ticker,
        c.name,
        f.period.format("%B %-d, %Y")
    ));
    out.push_str("<table>\n<tr><td>Part I</td></tr>\n");
    for (id, title, _) in items {
        out.push_str(&format!("<tr><td>Item {id}.</td><td>{title}</td><td>3</td></tr>\n"));
    }
    out.push_str("</table>\n");
    for (id, title, body) in items {
        out.push_str(&format!("<p><b>Item {id}. {title}</b></p>\n<p>{body}</p>\n"));
    }
    out.push_str("<p>SIGNATURES</p>\n</body></html>\n");
    out
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("create {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("write {}", path.display()))
}

fn form_index(rows: &[(&str, &str, u64, NaiveDate, String)], junk: bool) -> String {
    let mut out = String::from(
        "Description:           Master Index of EDGAR Dissemination Feed by Form Type\n\
         Last Data Received:    synthetic\n\n\n",
    );
    out.push_str(&format!(
        "{:<17}{:<62}{:<12}{:<12}{}\n",
        "Form Type", "Company Name", "CIK", "Date Filed", "File Name"
    ));
    out.push_str(&"-".repeat(140));
    out.push('\n');
    for (form, name, cik, date, acc) in rows {
        out.push_str(&format!(
            "{:<17}{:<62}{:<12}{:<12}edgar/data/{}/{}.txt\n",
            form,
            name,
            cik,
            date.to_string(),
            cik,
            acc
        ));
    }
    if junk {
        out.push_str("10-K             Truncated Row Without Date Corp\n");
    }
    out
}

/// Generate the mirror under `root`.
pub fn generate(root: &Path, opts: &SynthOptions) -> Result<SynthSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (first, last) = opts.years;
    let companies: Vec<Company> = (0..opts.companies)
        .map(|i| {
            let adj = ADJECTIVES[i % ADJECTIVES.len()];
            let noun = NOUNS[(i / ADJECTIVES.len() + i) % NOUNS.len()];
            let suffix = pick(&mut rng, SUFFIXES);
            Company {
                cik: 2_000_001 + i as u64,
                name: format!("{adj} {noun} {suffix}"),
                ticker: format!("{}{}", &adj[..2], &noun[..2]).to_ascii_lowercase(),
                sic: pick(&mut rng, SICS),
                fy_month: if rng.random_bool(0.75) { 12 } else { 6 },
                adoption: rng.random_range(first - 1..=last + 2),
            }
        })
        .collect();

    let archive = root.join("www.sec.gov/Archives/edgar");
    let mut index: BTreeMap<(i32, u32), Vec<IndexRow>> = BTreeMap::new();
    let mut planted_docs = 0;
    let mut filings_total = 0;

    for c in &companies {
        let mut seq = 0u32;
        let mut recent = Vec::new();
        for year in first..=last {
            // Occasionally a filer skips a year.
            if rng.random_bool(0.08) {
                continue;
            }
            let period = period_end(c.fy_month, year);
            let filed = period + Duration::days(rng.random_range(50..80));
            seq += 1;
            let accession = format!("{:010}-{:02}-{:06}", c.cik, filed.year() % 100, seq);
            let document = format!("{}-{}.htm", c.ticker, period.format("%Y%m%d"));

            let adopted = year >= c.adoption;
            let mut business_planted: Vec<&str> = Vec::new();
            let mut risk_planted: Vec<&str> = Vec::new();
            if adopted && rng.random_bool(0.7) {
                business_planted.push(pick(&mut rng, AI_BUSINESS));
                if rng.random_bool(0.3) {
                    business_planted.push(pick(&mut rng, AI_BUSINESS));
                }
            }
            if adopted && rng.random_bool(0.6) {
                risk_planted.push(pick(&mut rng, AI_RISK));
                // The same sentence twice counts once.
                if rng.random_bool(0.2) {
                    risk_planted.push(risk_planted[0]);
                }
            }
            if !business_planted.is_empty() || !risk_planted.is_empty() {
                planted_docs += 1;
            }
            let items = vec![
                ("1", "Business", paragraph(&mut rng, GENERIC_BUSINESS, &business_planted, 900)),
                ("1A", "Risk Factors", paragraph(&mut rng, GENERIC_RISK, &risk_planted, 1200)),
                ("1B", "Unresolved Staff Comments", "None.".to_string()),
                ("2", "Properties", paragraph(&mut rng, OTHER_ITEMS, &[], 600)),
                ("7", "Management's Discussion and Analysis", paragraph(&mut rng, OTHER_ITEMS, &[], 700)),
            ];
            let f = Filing { form: "10-K", accession, filed, period, document };
            let compact = f.accession.replace('-', "");
            write(
                &archive.join(format!("data/{}/{}/{}", c.cik, compact, f.document)),
                html_document(c, &f, &items),
            )?;
            let quarter = (filed.month() - 1) / 3 + 1;
            index.entry((filed.year(), quarter)).or_default().push((
                f.form,
                &c.name,
                c.cik,
                f.filed,
                f.accession.clone(),
            ));
            filings_total += 1;
            recent.push(f);
        }
        // A current report that 10-K listings must skip.
        if let Some(last_filing) = recent.last() {
            seq += 1;
            let filed = last_filing.filed + Duration::days(30);
            let acc = format!("{:010}-{:02}-{:06}", c.cik, filed.year() % 100, seq);
            let quarter = (filed.month() - 1) / 3 + 1;
            index.entry((filed.year(), quarter)).or_default().push(("8-K", &c.name, c.cik, filed, acc.clone()));
            recent.push(Filing {
                form: "8-K",
                accession: acc,
                filed,
                period: filed,
                document: format!("{}-8k.htm", c.ticker),
            });
        }
        write_submissions(root, c, &recent)?;
    }

    for (i, ((year, quarter), mut rows)) in index.into_iter().enumerate() {
        rows.sort_by(|a, b| (a.0, a.2, &a.4).cmp(&(b.0, b.2, &b.4)));
        write(
            &archive.join(format!("full-index/{year}/QTR{quarter}/form.idx")),
            form_index(&rows, i == 0),
        )?;
    }

    Ok(SynthSummary {
        companies: companies.len(),
        filings: filings_total,
        documents_with_planted_keywords: planted_docs,
    })
}

fn write_submissions(root: &Path, c: &Company, filings: &[Filing]) -> Result<()> {
    let recent = json!({
        "accessionNumber": filings.iter().map(|f| f.accession.as_str()).collect::<Vec<_>>(),
        "form": filings.iter().map(|f| f.form).collect::<Vec<_>>(),
        "filingDate": filings.iter().map(|f| f.filed.to_string()).collect::<Vec<_>>(),
        "reportDate": filings.iter().map(|f| f.period.to_string()).collect::<Vec<_>>(),
        "primaryDocument": filings.iter().map(|f| f.document.as_str()).collect::<Vec<_>>(),
    });
    let body = json!({
        "cik": c.cik.to_string(),
        "name": c.name,
        "sic": c.sic,
        "filings": { "recent": recent, "files": [] },
    });
    write(
        &root.join(format!("data.sec.gov/submissions/CIK{:010}.json", c.cik)),
        serde_json::to_vec_pretty(&body)?,
    )
}
