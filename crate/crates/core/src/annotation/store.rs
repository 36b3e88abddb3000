use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use tracing::warn;

use super::schema::{Label, LabelSchema, RiskCategory};
use super::AnnotationError;
use crate::extraction::SentenceRecord;
use crate::filing::{AccessionNumber, ItemId};

/// Stable identifier of a sentence: `{accession}:{item}:{index}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SentenceKey {
    accession: AccessionNumber,
    item: ItemId,
    index: usize,
}

impl SentenceKey {
    pub fn new(accession: AccessionNumber, item: ItemId, index: usize) -> Self {
        SentenceKey { accession, item, index }
    }

    pub fn of(record: &SentenceRecord) -> Self {
        Self::new(record.filing.accession_number.clone(), record.item_id, record.sentence_index)
    }

    pub fn accession(&self) -> &AccessionNumber {
        &self.accession
    }

    pub fn item(&self) -> ItemId {
        self.item
    }

    pub fn index(&self) -> usize {
        self.index
    }
}

impl fmt::Display for SentenceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.accession, self.item, self.index)
    }
}

impl FromStr for SentenceKey {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AnnotationError::SentenceKey(s.to_string());
        let mut parts = s.splitn(3, ':');
        let (Some(acc), Some(item), Some(index)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        Ok(SentenceKey {
            accession: acc.parse().map_err(|_| bad())?,
            item: item.parse().map_err(|_| bad())?,
            index: index.parse().map_err(|_| bad())?,
        })
    }
}

impl TryFrom<String> for SentenceKey {
    type Error = AnnotationError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SentenceKey> for String {
    fn from(k: SentenceKey) -> String {
        k.to_string()
    }
}

/// Labels one reviewer gave to one sentence. `non_risk` marks headers and
/// vague mentions and implies no labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub sentence: SentenceKey,
    pub annotator: String,
    pub labels: BTreeSet<Label>,
    pub non_risk: bool,
    pub timestamp: DateTime<Utc>,
}

impl Annotation {
    pub fn new(sentence: SentenceKey, annotator: &str, labels: impl IntoIterator<Item = Label>, timestamp: DateTime<Utc>) -> Self {
        Annotation {
            sentence,
            annotator: annotator.to_string(),
            labels: labels.into_iter().collect(),
            non_risk: false,
            timestamp,
        }
    }

    pub fn non_risk(sentence: SentenceKey, annotator: &str, timestamp: DateTime<Utc>) -> Self {
        Annotation {
            sentence,
            annotator: annotator.to_string(),
            labels: BTreeSet::new(),
            non_risk: true,
            timestamp,
        }
    }

    pub fn has(&self, category: RiskCategory) -> bool {
        self.labels.iter().any(|l| l.category == category)
    }

    fn decision(&self) -> (bool, &BTreeSet<Label>) {
        (self.non_risk, &self.labels)
    }
}

/// The labels downstream statistics use for a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FinalDecision<'a> {
    /// All annotators gave the same decision.
    Consensus(&'a Annotation),
    Adjudicated(&'a Annotation),
}

impl<'a> FinalDecision<'a> {
    pub fn annotation(&self) -> &'a Annotation {
        match self {
            FinalDecision::Consensus(a) | FinalDecision::Adjudicated(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NonRiskFilter {
    pub kept: Vec<SentenceKey>,
    pub excluded: Vec<SentenceKey>,
    /// Not yet reviewed by two annotators, or in unresolved disagreement.
    pub pending: Vec<SentenceKey>,
}

/// Annotations keyed by (sentence, annotator) plus adjudicated decisions.
/// Original annotations are never overwritten by adjudication.
#[derive(Debug, Clone, Default)]
pub struct AnnotationStore {
    schema: LabelSchema,
    annotations: BTreeMap<SentenceKey, BTreeMap<String, Annotation>>,
    adjudications: BTreeMap<SentenceKey, Annotation>,
}

const CSV_HEADER: [&str; 8] = [
    "sentence_key",
    "annotator",
    "role",
    "category",
    "subcategory",
    "subdomain",
    "non_risk",
    "timestamp",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Role {
    Annotation,
    Adjudication,
}

impl Role {
    fn as_str(self) -> &'static str {
        match self {
            Role::Annotation => "annotation",
            Role::Adjudication => "adjudication",
        }
    }
}

impl AnnotationStore {
    pub fn new(schema: LabelSchema) -> Self {
        AnnotationStore { schema, ..Default::default() }
    }

    pub fn schema(&self) -> &LabelSchema {
        &self.schema
    }

    fn check(&self, a: &Annotation) -> Result<(), AnnotationError> {
        if a.annotator.trim().is_empty() {
            return Err(AnnotationError::BlankAnnotator);
        }
        if a.non_risk && !a.labels.is_empty() {
            return Err(AnnotationError::NonRiskWithLabels(a.sentence.to_string()));
        }
        for label in &a.labels {
            self.schema.validate(label)?;
        }
        Ok(())
    }

    /// Record or replace an annotator's labels for a sentence.
    pub fn record(&mut self, a: Annotation) -> Result<(), AnnotationError> {
        self.check(&a)?;
        self.annotations
            .entry(a.sentence.clone())
            .or_default()
            .insert(a.annotator.clone(), a);
        Ok(())
    }

    pub fn annotations(&self) -> impl Iterator<Item = &Annotation> {
        self.annotations.values().flat_map(|m| m.values())
    }

    pub fn annotations_for(&self, key: &SentenceKey) -> impl Iterator<Item = &Annotation> {
        self.annotations.get(key).into_iter().flat_map(|m| m.values())
    }

    pub fn adjudications(&self) -> impl Iterator<Item = &Annotation> {
        self.adjudications.values()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &SentenceKey> {
        self.annotations.keys()
    }

    /// Whether the sentence has at least two annotations that disagree.
    pub fn is_conflict(&self, key: &SentenceKey) -> bool {
        let mut decisions = self.annotations_for(key).map(Annotation::decision);
        match decisions.next() {
            Some(first) => decisions.any(|d| d != first),
            None => false,
        }
    }

    /// Resolve a disagreement with a final decision. The adjudicator id and
    /// timestamp are kept as provenance.
    pub fn adjudicate(&mut self, decision: Annotation) -> Result<&Annotation, AnnotationError> {
        self.check(&decision)?;
        let key = decision.sentence.clone();
        let reviews = self.annotations_for(&key).count();
        if reviews < 2 {
            return Err(AnnotationError::NotEnoughAnnotations { sentence: key.to_string(), found: reviews });
        }
        if !self.is_conflict(&key) {
            return Err(AnnotationError::NotAConflict(key.to_string()));
        }
        self.adjudications.insert(key.clone(), decision);
        Ok(&self.adjudications[&key])
    }

    /// Adjudicated decision if any, else the common decision of two or more
    /// agreeing annotators. Anything else is pending.
    pub fn final_decision(&self, key: &SentenceKey) -> Option<FinalDecision<'_>> {
        if let Some(a) = self.adjudications.get(key) {
            return Some(FinalDecision::Adjudicated(a));
        }
        let reviews: Vec<&Annotation> = self.annotations_for(key).collect();
        if reviews.len() >= 2 && !self.is_conflict(key) {
            return Some(FinalDecision::Consensus(reviews[0]));
        }
        None
    }

    /// Split sentences into kept (final decision is a risk statement),
    /// excluded (final decision is non-risk) and pending.
    pub fn filter_non_risk<'k>(&self, keys: impl IntoIterator<Item = &'k SentenceKey>) -> NonRiskFilter {
        let mut out = NonRiskFilter::default();
        for key in keys {
            match self.final_decision(key) {
                Some(d) if d.annotation().non_risk => out.excluded.push(key.clone()),
                Some(_) => out.kept.push(key.clone()),
                None => out.pending.push(key.clone()),
            }
        }
        out
    }

    fn rows(&self) -> Vec<(Role, &Annotation)> {
        let mut rows: Vec<(Role, &Annotation)> = self.annotations().map(|a| (Role::Annotation, a)).collect();
        rows.extend(self.adjudications().map(|a| (Role::Adjudication, a)));
        rows.sort_by(|a, b| (&a.1.sentence, a.0, &a.1.annotator).cmp(&(&b.1.sentence, b.0, &b.1.annotator)));
        rows
    }

    /// Write every annotation and adjudication, one row per label (or one
    /// row without category when there are no labels).
    pub fn export_csv<W: Write>(&self, writer: W) -> Result<(), AnnotationError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for (role, a) in self.rows() {
            let ts = a.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true);
            let key = a.sentence.to_string();
            let non_risk = if a.non_risk { "true" } else { "false" };
            if a.labels.is_empty() {
                w.write_record([key.as_str(), &a.annotator, role.as_str(), "", "", "", non_risk, &ts])?;
            }
            for l in &a.labels {
                w.write_record([
                    key.as_str(),
                    &a.annotator,
                    role.as_str(),
                    l.category.as_str(),
                    l.subcategory.as_deref().unwrap_or(""),
                    l.subdomain.as_deref().unwrap_or(""),
                    non_risk,
                    &ts,
                ])?;
            }
        }
        w.flush().map_err(|e| AnnotationError::Csv(e.to_string()))?;
        Ok(())
    }

    /// Read rows written by [`export_csv`](Self::export_csv) into a store
    /// using `schema`. Every row is validated.
    pub fn import_csv<R: Read>(schema: LabelSchema, reader: R) -> Result<Self, AnnotationError> {
        let mut r = csv::ReaderBuilder::new().from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header != CSV_HEADER {
            return Err(AnnotationError::Csv(format!("unexpected header {header:?}")));
        }
        let mut grouped: BTreeMap<(SentenceKey, Role, String), Annotation> = BTreeMap::new();
        for (line, row) in r.records().enumerate() {
            let row = row?;
            let bad = |what: &str| AnnotationError::Csv(format!("row {}: {what}", line + 2));
            let key: SentenceKey = row[0].parse()?;
            let annotator = row[1].to_string();
            let role = match &row[2] {
                "annotation" => Role::Annotation,
                "adjudication" => Role::Adjudication,
                _ => return Err(bad("role must be annotation or adjudication")),
            };
            let non_risk = match &row[6] {
                "true" => true,
                "false" => false,
                _ => return Err(bad("non_risk must be true or false")),
            };
            let timestamp = DateTime::parse_from_rfc3339(&row[7])
                .map_err(|_| bad("timestamp is not RFC 3339"))?
                .with_timezone(&Utc);
            let entry = grouped
                .entry((key.clone(), role, annotator.clone()))
                .or_insert_with(|| Annotation {
                    sentence: key,
                    annotator,
                    labels: BTreeSet::new(),
                    non_risk,
                    timestamp,
                });
            if entry.non_risk != non_risk || entry.timestamp != timestamp {
                return Err(bad("rows of one annotation disagree on non_risk or timestamp"));
            }
            if !row[3].is_empty() {
                let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
                entry.labels.insert(Label {
                    category: row[3].parse()?,
                    subcategory: opt(&row[4]),
                    subdomain: opt(&row[5]),
                });
            }
        }
        let mut store = AnnotationStore::new(schema);
        let mut adjudications = Vec::new();
        for ((_, role, _), a) in grouped {
            match role {
                Role::Annotation => store.record(a)?,
                Role::Adjudication => adjudications.push(a),
            }
        }
        for a in adjudications {
            store.adjudicate(a)?;
        }
        Ok(store)
    }

    /// Drop annotations of sentences outside `keep`, logging how many.
    pub fn retain_sentences(&mut self, keep: &BTreeSet<SentenceKey>) {
        let before = self.annotations.len();
        self.annotations.retain(|k, _| keep.contains(k));
        self.adjudications.retain(|k, _| keep.contains(k));
        let dropped = before - self.annotations.len();
        if dropped > 0 {
            warn!(dropped, "annotations of unknown sentences dropped");
        }
    }
}
