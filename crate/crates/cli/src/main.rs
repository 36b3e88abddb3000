//! `tenkscan`: crawl 10-K filings, segment them into Items, extract keyword
//! sentences and report on them.

mod pipeline;
mod reports;
mod synth;
mod workdir;

use std::io::{IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use tenkscan_core::analytics::{BoundMethod, Tail};
use tenkscan_core::export::ExportFormat;
use tenkscan_core::query::parse_year_range;
use tenkscan_core::ItemId;
use tracing_subscriber::EnvFilter;

use crate::workdir::{ConfigError, MissingInput, WorkDir};

const EXIT_FAILURE: u8 = 1;
const EXIT_MISSING_INPUT: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser)]
#[command(name = "tenkscan", version, about = "Mine 10-K filings for keyword disclosures")]
struct Cli {
    /// Directory holding the cache, manifest, parsed filings and store.
    #[arg(long, global = true, default_value = "tenkscan-work", env = "TENKSCAN_WORK_DIR")]
    work_dir: PathBuf,
    /// Worker threads for download, parse and extract. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// More logging on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic archive mirror for offline runs.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 12)]
        companies: usize,
        #[arg(long, default_value = "2020..2024", value_parser = year_range)]
        years: (i32, i32),
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// List filings for a range of reporting years and download them.
    Crawl {
        /// Reporting years, e.g. 2020..2024.
        #[arg(long, value_parser = year_range)]
        years: (i32, i32),
        /// Form type; repeat for more. Defaults to 10-K.
        #[arg(long = "form")]
        forms: Vec<String>,
        /// Restrict to these CIKs (comma separated or repeated).
        #[arg(long = "cik", value_delimiter = ',')]
        ciks: Vec<u64>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Read from a local mirror tree instead of the network.
        #[arg(long)]
        mirror: Option<PathBuf>,
        /// Requests per second.
        #[arg(long, default_value_t = 8)]
        rate: usize,
    },
    /// Segment cached filings into Items.
    Parse {
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Shortest body for a heading to count as a section start.
        #[arg(long, default_value_t = 500)]
        min_body: usize,
    },
    /// Scan parsed filings for keywords and write the record store.
    Extract {
        /// Keyword CSV (id,raw,case_mode,boundary). Defaults to the built-in AI set.
        #[arg(long)]
        keywords: Option<PathBuf>,
        /// Items to scan, e.g. 1,1A. Defaults to all.
        #[arg(long, value_delimiter = ',', value_parser = item_id)]
        sections: Vec<ItemId>,
    },
    /// Write the report tables, or print one metric as CSV with --metric.
    Stats {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        metric: Option<String>,
        #[arg(long, requires = "metric")]
        scope: Option<String>,
        #[arg(long)]
        years: Option<String>,
        /// Industry rows: number of largest SIC groups.
        #[arg(long)]
        top_sic: Option<usize>,
        /// Output directory, or output file with --metric.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print one page of matching sentences as JSON.
    Search {
        #[arg(long)]
        store: Option<PathBuf>,
        #[command(flatten)]
        filters: Filters,
        #[arg(long)]
        page: Option<usize>,
        #[arg(long)]
        page_size: Option<usize>,
    },
    /// Export matches as CSV or xlsx.
    Export {
        #[arg(long)]
        store: Option<PathBuf>,
        #[command(flatten)]
        filters: Filters,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw the precision review sample and, with --groups-year, the annotation groups.
    Sample {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, default_value_t = 385)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        groups_year: Option<i32>,
        /// Company names for the top-tech group, one per line.
        #[arg(long)]
        top_tech: Option<PathBuf>,
    },
    /// Inter-annotator agreement per risk category.
    Agreement {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Lower confidence bound on precision from a reviewed sample.
    Precision {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        errors: u64,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[arg(long, value_enum, default_value_t = Method::Wald)]
        method: Method,
        /// Override the method's default tail.
        #[arg(long, value_enum)]
        tail: Option<TailArg>,
    },
    /// Serve the read-only HTTP API over a store.
    Serve {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Allowed browser origin; repeat for more.
        #[arg(long = "cors-origin")]
        cors_origins: Vec<String>,
    },
}

#[derive(Args, Default)]
struct Filters {
    /// Keyword id; comma separated or repeated.
    #[arg(long = "keyword")]
    keywords: Vec<String>,
    /// Ad-hoc regular expression over stored sentences; repeatable.
    #[arg(long = "pattern")]
    patterns: Vec<String>,
    /// Reporting years, e.g. 2022..2024.
    #[arg(long)]
    years: Option<String>,
    /// Items, e.g. 1A; comma separated or repeated.
    #[arg(long = "section")]
    sections: Vec<String>,
    /// CIK or part of a company name; repeatable.
    #[arg(long = "company")]
    companies: Vec<String>,
    /// SIC codes; comma separated or repeated.
    #[arg(long)]
    sic: Vec<String>,
}

impl Filters {
    /// Same parameter names as the HTTP API.
    fn params(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut add = |k: &str, vs: &[String]| out.extend(vs.iter().map(|v| (k.to_string(), v.clone())));
        add("keywords", &self.keywords);
        add("pattern", &self.patterns);
        add("years", self.years.as_slice());
        add("sections", &self.sections);
        add("company", &self.companies);
        add("sic", &self.sic);
        out
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Xlsx,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Wald,
    Wilson,
}

#[derive(Clone, Copy, ValueEnum)]
enum TailArg {
    TwoSided,
    OneSided,
}

fn year_range(s: &str) -> Result<(i32, i32), String> {
    parse_year_range(s)
}

fn item_id(s: &str) -> Result<ItemId, String> {
    s.parse().map_err(|e: tenkscan_core::filing::UnknownItem| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let name = command_name(&cli.command);
    match run(cli) {
        Ok(Some(summary)) => {
            let mut line = json!({ "command": name, "status": "ok" });
            if let (Value::Object(line), Value::Object(extra)) = (&mut line, summary) {
                line.extend(extra);
            }
            println!("{line}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(err) => {
            let (kind, code) = if err.downcast_ref::<MissingInput>().is_some() {
                ("missing_input", EXIT_MISSING_INPUT)
            } else if err.downcast_ref::<ConfigError>().is_some() {
                ("config", EXIT_CONFIG)
            } else {
                ("failure", EXIT_FAILURE)
            };
            eprintln!("error: {err:#}");
            eprintln!("{}", json!({ "command": name, "status": "error", "kind": kind, "message": format!("{err:#}") }));
            ExitCode::from(code)
        }
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Synth { .. } => "synth",
        Command::Crawl { .. } => "crawl",
        Command::Parse { .. } => "parse",
        Command::Extract { .. } => "extract",
        Command::Stats { .. } => "stats",
        Command::Search { .. } => "search",
        Command::Export { .. } => "export",
        Command::Sample { .. } => "sample",
        Command::Agreement { .. } => "agreement",
        Command::Precision { .. } => "precision",
        Command::Serve { .. } => "serve",
    }
}

fn run(cli: Cli) -> Result<Option<Value>> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(ConfigError("--workers must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("start worker pool")?;
    }
    let work = WorkDir::new(&cli.work_dir);
    let store_or = |s: Option<PathBuf>| s.unwrap_or_else(|| work.store());

    let summary = match cli.command {
        Command::Synth { out, companies, years, seed } => {
            let s = synth::generate(&out, &synth::SynthOptions { companies, years, seed })?;
            let mut v = serde_json::to_value(s)?;
            v["out"] = json!(out);
            v
        }
        Command::Crawl { years, forms, ciks, cache_dir, mirror, rate } => pipeline::crawl(
            &work,
            &pipeline::CrawlArgs { years, forms, ciks, cache_dir, mirror, rate },
        )?,
        Command::Parse { cache_dir, min_body } => pipeline::parse(&work, cache_dir.as_deref(), min_body)?,
        Command::Extract { keywords, sections } => {
            pipeline::extract(&work, &pipeline::ExtractArgs { keywords, sections })?
        }
        Command::Stats { store, metric, scope, years, top_sic, out } => {
            let params = metric.map(|m| {
                let mut p = vec![("metric".to_string(), m)];
                p.extend(scope.map(|s| ("scope".to_string(), s)));
                p.extend(years.clone().map(|y| ("years".to_string(), y)));
                p.extend(top_sic.map(|n| ("top_sic".to_string(), n.to_string())));
                p
            });
            if params.is_none() && years.is_some() {
                return Err(ConfigError("--years applies to --metric output only".into()).into());
            }
            let args = reports::StatsArgs { store: store_or(store), params, out, top_sic: top_sic.unwrap_or(10) };
            match reports::stats(&work, &args)? {
                Some(v) => v,
                None => return Ok(None),
            }
        }
        Command::Search { store, filters, page, page_size } => {
            let mut params = filters.params();
            params.extend(page.map(|p| ("page".to_string(), p.to_string())));
            params.extend(page_size.map(|p| ("page_size".to_string(), p.to_string())));
            let page = reports::search(&store_or(store), &params)?;
            println!("{page}");
            return Ok(None);
        }
        Command::Export { store, filters, format, out } => {
            let format = match format {
                Format::Csv => ExportFormat::Csv,
                Format::Xlsx => ExportFormat::Xlsx,
            };
            reports::export(&work, &reports::ExportArgs { store: store_or(store), params: filters.params(), format, out })?
        }
        Command::Sample { store, n, seed, out, groups_year, top_tech } => reports::sample(
            &work,
            &reports::SampleArgs { store: store_or(store), n, seed, out_dir: out, groups_year, top_tech },
        )?,
        Command::Agreement { annotations, schema } => reports::agreement(&annotations, schema.as_deref())?,
        Command::Precision { n, errors, confidence, method, tail } => {
            let method = match method {
                Method::Wald => BoundMethod::Wald,
                Method::Wilson => BoundMethod::Wilson,
            };
            let tail = tail.map(|t| match t {
                TailArg::TwoSided => Tail::TwoSided,
                TailArg::OneSided => Tail::OneSided,
            });
            reports::precision(n, errors, confidence, method, tail)?
        }
        Command::Serve { store, host, port, cors_origins } => {
            serve(&store_or(store), &host, port, &cors_origins)?;
            return Ok(None);
        }
    };
    Ok(Some(summary))
}

fn serve(store: &std::path::Path, host: &str, port: u16, origins: &[String]) -> Result<()> {
    let state = tenkscan_service::AppState::load(store)?;
    let origins = if origins.is_empty() {
        None
    } else {
        Some(
            origins
                .iter()
                .map(|o| o.parse::<tenkscan_service::Origin>().map_err(|_| ConfigError(format!("bad --cors-origin {o:?}"))))
                .collect::<Result<Vec<_>, _>>()?,
        )
    };
    let app = tenkscan_service::router(state, origins);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .with_context(|| format!("bind {host}:{port}"))?;
        let addr = listener.local_addr()?;
        // Tests and scripts read the bound address from this line.
        let mut out = std::io::stdout();
        writeln!(out, "{}", json!({ "command": "serve", "status": "listening", "address": addr.to_string() }))?;
        out.flush()?;
        tenkscan_service::serve(listener, app).await?;
        Ok(())
    })
}
