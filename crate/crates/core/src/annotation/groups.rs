use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::schema::RiskCategory;
use super::store::AnnotationStore;
use super::AnnotationError;
use crate::analytics::{CorpusIndex, Scope};
use crate::extraction::sample_without_replacement;
use crate::filing::FilingRef;

const TOP_TECH: &str = include_str!("../../data/top_tech.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupName {
    Random20,
    TopTech10,
    RiskOnly20,
}

impl GroupName {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupName::Random20 => "random20",
            GroupName::TopTech10 => "top_tech10",
            GroupName::RiskOnly20 => "risk_only20",
        }
    }

    pub fn size(self) -> usize {
        match self {
            GroupName::TopTech10 => 10,
            GroupName::Random20 | GroupName::RiskOnly20 => 20,
        }
    }
}

impl fmt::Display for GroupName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleGroup {
    pub name: GroupName,
    /// Ordered by (cik, accession number).
    pub members: Vec<FilingRef>,
    pub selection_rule: String,
    pub seed: Option<u64>,
}

/// The bundled list of large technology companies, by filer name.
pub fn default_top_tech() -> Vec<String> {
    TOP_TECH
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

fn name_key(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn draw(
    name: GroupName,
    mut pool: Vec<&FilingRef>,
    seed: u64,
    rule: String,
) -> Result<SampleGroup, AnnotationError> {
    let size = name.size();
    if pool.len() < size {
        return Err(AnnotationError::PoolTooSmall { group: name, pool: pool.len(), requested: size });
    }
    pool.sort_by(|a, b| (a.cik, &a.accession_number).cmp(&(b.cik, &b.accession_number)));
    let mut members: Vec<FilingRef> = sample_without_replacement(&pool, size, seed)
        .expect("pool checked")
        .into_iter()
        .cloned()
        .collect();
    members.sort_by(|a, b| (a.cik, &a.accession_number).cmp(&(b.cik, &b.accession_number)));
    Ok(SampleGroup { name, members, selection_rule: rule, seed: Some(seed) })
}

/// Filers of `year` that mention keywords anywhere.
pub fn random_group(corpus: &CorpusIndex, year: i32, seed: u64) -> Result<SampleGroup, AnnotationError> {
    let pool = corpus
        .year_filings(year)
        .into_iter()
        .filter(|f| corpus.mentions(f.accession_number.as_str(), Scope::All))
        .collect();
    draw(
        GroupName::Random20,
        pool,
        seed,
        format!("uniform draw of 20 filers mentioning keywords in {year}"),
    )
}

/// Filers with Item 1A mentions in `year`, none in Item 1 that year, and
/// no Item 1A mentions in any earlier year of the corpus.
pub fn risk_only_group(corpus: &CorpusIndex, year: i32, seed: u64) -> Result<SampleGroup, AnnotationError> {
    let mut earlier_risk: BTreeSet<u64> = BTreeSet::new();
    for y in corpus.years().into_iter().filter(|y| *y < year) {
        for f in corpus.year_filings(y) {
            if corpus.mentions(f.accession_number.as_str(), Scope::Risk) {
                earlier_risk.insert(f.cik);
            }
        }
    }
    let pool = corpus
        .year_filings(year)
        .into_iter()
        .filter(|f| {
            let acc = f.accession_number.as_str();
            corpus.mentions(acc, Scope::Risk)
                && !corpus.mentions(acc, Scope::Business)
                && !earlier_risk.contains(&f.cik)
        })
        .collect();
    draw(
        GroupName::RiskOnly20,
        pool,
        seed,
        format!("uniform draw of 20 filers first mentioning keywords in Item 1A in {year} without Item 1 mentions"),
    )
}

/// The filings of `year` whose company names match `names`.
pub fn top_tech_group(corpus: &CorpusIndex, year: i32, names: &[String]) -> Result<SampleGroup, AnnotationError> {
    let filings = corpus.year_filings(year);
    let mut members = Vec::new();
    let mut missing = Vec::new();
    for name in names {
        let key = name_key(name);
        match filings.iter().find(|f| name_key(&f.company_name) == key) {
            Some(f) => members.push((*f).clone()),
            None => missing.push(name.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(AnnotationError::MissingCompanies(missing));
    }
    members.sort_by(|a, b| (a.cik, &a.accession_number).cmp(&(b.cik, &b.accession_number)));
    members.dedup_by(|a, b| a.cik == b.cik);
    if members.len() != GroupName::TopTech10.size() {
        return Err(AnnotationError::PoolTooSmall {
            group: GroupName::TopTech10,
            pool: members.len(),
            requested: GroupName::TopTech10.size(),
        });
    }
    Ok(SampleGroup {
        name: GroupName::TopTech10,
        members,
        selection_rule: format!("configured list of {} company names", names.len()),
        seed: None,
    })
}

/// All three groups. Each random group gets its own stream derived from
/// `seed`; the groups are drawn independently and may share members.
pub fn build_sample_groups(
    corpus: &CorpusIndex,
    year: i32,
    seed: u64,
    top_tech: &[String],
) -> Result<Vec<SampleGroup>, AnnotationError> {
    Ok(vec![
        random_group(corpus, year, seed)?,
        top_tech_group(corpus, year, top_tech)?,
        risk_only_group(corpus, year, seed.wrapping_add(1))?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub group: GroupName,
    pub category: RiskCategory,
    /// Members with at least one sentence labelled with the category.
    pub pct_companies: f64,
    /// Labelled sentences per member filing.
    pub avg_sentences: f64,
}

/// Per group and category, from final decisions only. A sentence counts once
/// per category however many labels of that category it has.
pub fn group_category_stats(
    store: &AnnotationStore,
    groups: &[SampleGroup],
) -> Result<Vec<CategoryStats>, AnnotationError> {
    // (accession, category) -> labelled sentence count
    let mut counts: BTreeMap<(&str, RiskCategory), u64> = BTreeMap::new();
    for key in store.sentences() {
        let Some(decision) = store.final_decision(key) else {
            continue;
        };
        let a = decision.annotation();
        if a.non_risk {
            continue;
        }
        let categories: BTreeSet<RiskCategory> = a.labels.iter().map(|l| l.category).collect();
        for c in categories {
            *counts.entry((key.accession().as_str(), c)).or_default() += 1;
        }
    }
    let mut out = Vec::new();
    for g in groups {
        if g.members.is_empty() {
            return Err(AnnotationError::EmptyGroup(g.name));
        }
        let n = g.members.len() as f64;
        for category in RiskCategory::ALL {
            let per: Vec<u64> = g
                .members
                .iter()
                .map(|f| counts.get(&(f.accession_number.as_str(), category)).copied().unwrap_or(0))
                .collect();
            out.push(CategoryStats {
                group: g.name,
                category,
                pct_companies: per.iter().filter(|c| **c > 0).count() as f64 / n,
                avg_sentences: per.iter().sum::<u64>() as f64 / n,
            });
        }
    }
    Ok(out)
}

/// Sentences per taxonomy node, over final societal labels. Every node of
/// the schema's taxonomy is present, including those with zero sentences.
pub fn subdomain_distribution(store: &AnnotationStore) -> BTreeMap<String, u64> {
    let mut out: BTreeMap<String, u64> = store
        .schema()
        .taxonomy()
        .iter()
        .map(|n| (n.id.clone(), 0))
        .collect();
    for key in store.sentences() {
        let Some(decision) = store.final_decision(key) else {
            continue;
        };
        let nodes: BTreeSet<&str> = decision
            .annotation()
            .labels
            .iter()
            .filter_map(|l| l.subdomain.as_deref())
            .collect();
        for node in nodes {
            *out.entry(node.to_string()).or_default() += 1;
        }
    }
    out
}
