#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use tempfile::TempDir;

pub const BIN: &str = env!("CARGO_BIN_EXE_tenkscan");
pub const CONTACT: &str = "Fixture Runner fixtures@example.org";

pub fn tenkscan(args: &[impl AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("SEC_CONTACT", CONTACT)
        .env_remove("RUST_LOG")
        .env_remove("TENKSCAN_WORK_DIR")
        .output()
        .expect("run tenkscan")
}

/// Run and return stdout, panicking with stderr on failure.
pub fn run_ok(args: &[impl AsRef<std::ffi::OsStr>]) -> Vec<u8> {
    let out = tenkscan(args);
    if !out.status.success() {
        let shown: Vec<String> = args.iter().map(|a| a.as_ref().to_string_lossy().into_owned()).collect();
        panic!("tenkscan {shown:?} failed ({}): {}", out.status, String::from_utf8_lossy(&out.stderr));
    }
    out.stdout
}

/// The last stdout line as JSON.
pub fn summary(stdout: &[u8]) -> serde_json::Value {
    let text = String::from_utf8_lossy(stdout);
    serde_json::from_str(text.lines().last().expect("summary line")).expect("summary is json")
}

/// A synthetic mirror taken through every stage in a temporary directory.
pub struct Pipeline {
    _tmp: TempDir,
    pub mirror: PathBuf,
    pub work: PathBuf,
    pub workers: usize,
}

pub const SYNTH_SEED: &str = "11";
pub const SYNTH_COMPANIES: &str = "40";

impl Pipeline {
    pub fn mirror_only() -> Self {
        let tmp = TempDir::new().unwrap();
        let mirror = tmp.path().join("mirror");
        run_ok(&[
            "synth",
            "--out",
            mirror.to_str().unwrap(),
            "--companies",
            SYNTH_COMPANIES,
            "--years",
            "2020..2024",
            "--seed",
            SYNTH_SEED,
        ]);
        let work = tmp.path().join("work");
        Pipeline { _tmp: tmp, mirror, work, workers: 1 }
    }

    pub fn base(&self) -> Vec<String> {
        vec![
            "--work-dir".into(),
            self.work.display().to_string(),
            "--workers".into(),
            self.workers.to_string(),
        ]
    }

    pub fn args(&self, rest: &[&str]) -> Vec<String> {
        let mut a = self.base();
        a.extend(rest.iter().map(|s| s.to_string()));
        a
    }

    pub fn crawl_args(&self) -> Vec<String> {
        self.args(&["crawl", "--years", "2020..2024", "--mirror", self.mirror.to_str().unwrap(), "--rate", "1000"])
    }

    pub fn run(_label: &str, workers: usize) -> Self {
        let mut p = Self::mirror_only();
        p.workers = workers;
        run_ok(&p.crawl_args());
        run_ok(&p.args(&["parse"]));
        run_ok(&p.args(&["extract"]));
        run_ok(&p.args(&["stats"]));
        let all = p.work.join("exports/all.csv");
        run_ok(&p.args(&["export", "--out", all.to_str().unwrap()]));
        let risk = p.work.join("exports/risk_ai.csv");
        run_ok(&p.args(&["export", "--section", "1A", "--keyword", "ai", "--out", risk.to_str().unwrap()]));
        p
    }

    pub fn stats_files(&self) -> Vec<String> {
        let mut names: Vec<String> = std::fs::read_dir(self.work.join("stats"))
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        names
    }

    pub fn company_names(&self) -> Vec<String> {
        let text = std::fs::read_to_string(self.work.join("store.jsonl")).unwrap();
        let mut names: Vec<String> = text
            .lines()
            .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
            .filter(|v| v["kind"] == "filing")
            .filter_map(|v| v["record"]["filing"]["company_name"].as_str().map(str::to_string))
            .collect();
        names.sort();
        names.dedup();
        names
    }

    fn filter_flags(params: &[(String, String)]) -> Vec<String> {
        let mut out = Vec::new();
        for (k, v) in params {
            let flag = match k.as_str() {
                "keywords" => "--keyword",
                "sections" => "--section",
                "years" => "--years",
                "company" => "--company",
                "sic" => "--sic",
                "pattern" => "--pattern",
                "page" => "--page",
                "page_size" => "--page-size",
                "metric" => "--metric",
                "scope" => "--scope",
                "top_sic" => "--top-sic",
                other => panic!("no flag for {other}"),
            };
            out.push(flag.to_string());
            out.push(v.clone());
        }
        out
    }

    pub fn search_args(&self, params: &[(String, String)]) -> Vec<String> {
        let mut a = self.args(&["search"]);
        a.extend(Self::filter_flags(params));
        a
    }

    pub fn export_args(&self, params: &[(String, String)], out: &Path) -> Vec<String> {
        let mut a = self.args(&["export", "--out", out.to_str().unwrap()]);
        a.extend(Self::filter_flags(params));
        a
    }

    pub fn stats_args(&self, params: &[(String, String)]) -> Vec<String> {
        let mut a = self.args(&["stats"]);
        a.extend(Self::filter_flags(params));
        a
    }
}

/// `tenkscan serve` on an ephemeral port; killed on drop.
pub struct Server {
    child: Child,
    pub address: String,
    agent: ureq::Agent,
}

impl Server {
    pub fn start(store: &Path) -> Self {
        let mut child = Command::new(BIN)
            .args(["serve", "--port", "0", "--store", store.to_str().unwrap()])
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn server");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let v: serde_json::Value = serde_json::from_str(&line).unwrap_or_else(|_| panic!("bad banner {line:?}"));
        let address = v["address"].as_str().expect("address").to_string();
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Server { child, address, agent }
    }

    pub fn url(&self, path: &str, params: &[(String, String)]) -> String {
        let query = form_urlencoded::Serializer::new(String::new()).extend_pairs(params).finish();
        format!("http://{}{path}?{query}", self.address)
    }

    pub fn get_response(&self, path: &str, params: &[(String, String)]) -> Result<(u16, Vec<u8>), String> {
        let mut resp = self.agent.get(&self.url(path, params)).call().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_vec().map_err(|e| e.to_string())?;
        Ok((status, body))
    }

    pub fn get(&self, path: &str, params: &[(String, String)]) -> Result<Vec<u8>, String> {
        match self.get_response(path, params)? {
            (200, body) => Ok(body),
            (s, body) => Err(format!("GET {path} {params:?}: {s} {}", String::from_utf8_lossy(&body))),
        }
    }

    pub fn post_export(&self, params: &[(String, String)]) -> Result<Vec<u8>, String> {
        let q = tenkscan_core::query::SearchQuery::from_params(params.iter().map(|(k, v)| (k.as_str(), v.as_str())))
            .map_err(|e| e.to_string())?;
        let mut body = serde_json::to_value(q).unwrap();
        body["format"] = "csv".into();
        let mut resp = self
            .agent
            .post(&format!("http://{}/api/export", self.address))
            .header("Content-Type", "application/json")
            .send(body.to_string())
            .map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let bytes = resp.body_mut().read_to_vec().map_err(|e| e.to_string())?;
        if status != 200 {
            return Err(format!("POST /api/export: {status} {}", String::from_utf8_lossy(&bytes)));
        }
        Ok(bytes)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Crawl one reporting year from the live archive and return
/// pct_companies(all) for it.
pub fn live_pct_companies(year: i32) -> Result<f64, String> {
    let tmp = TempDir::new().map_err(|e| e.to_string())?;
    let work = tmp.path().display().to_string();
    let years = format!("{year}..{year}");
    for stage in [vec!["crawl", "--years", years.as_str()], vec!["parse"], vec!["extract"]] {
        let mut args = vec!["--work-dir", work.as_str()];
        args.extend(stage);
        let out = Command::new(BIN).args(&args).output().map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
    }
    let out = Command::new(BIN)
        .args(["--work-dir", &work, "stats", "--metric", "pct_companies", "--scope", "all", "--years", &years])
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    let row = text.lines().nth(1).ok_or("no stats row")?;
    row.rsplit(',').next().unwrap().trim().parse().map_err(|e| format!("{row}: {e}"))
}
