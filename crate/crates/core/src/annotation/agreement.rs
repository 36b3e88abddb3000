use serde::{Deserialize, Serialize};
use tracing::warn;

use super::schema::RiskCategory;
use super::store::AnnotationStore;
use super::AnnotationError;

/// Presence/absence of one category for two annotators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub both: u64,
    pub only_a: u64,
    pub only_b: u64,
    pub neither: u64,
}

impl ConfusionMatrix {
    pub fn n(&self) -> u64 {
        self.both + self.only_a + self.only_b + self.neither
    }

    pub fn push(&mut self, a: bool, b: bool) {
        match (a, b) {
            (true, true) => self.both += 1,
            (true, false) => self.only_a += 1,
            (false, true) => self.only_b += 1,
            (false, false) => self.neither += 1,
        }
    }

    pub fn percent_agreement(&self) -> Option<f64> {
        let n = self.n();
        (n > 0).then(|| (self.both + self.neither) as f64 / n as f64)
    }

    /// Cohen's kappa, κ = (p_o − p_e)/(1 − p_e). Evaluated as
    /// (n·agree − S)/(n² − S) with S = ya·yb + na·nb in exact integers, so
    /// hand-computed matrices give exact results.
    pub fn kappa(&self) -> Kappa {
        let n = self.n() as u128;
        if n == 0 {
            return Kappa { value: None, p_o: 0.0, p_e: 0.0 };
        }
        let agree = (self.both + self.neither) as u128;
        let ya = (self.both + self.only_a) as u128;
        let yb = (self.both + self.only_b) as u128;
        let s = ya * yb + (n - ya) * (n - yb);
        let p_o = agree as f64 / n as f64;
        let p_e = s as f64 / (n * n) as f64;
        let value = (n * n != s).then(|| {
            let num = (n * agree) as f64 - s as f64;
            num / ((n * n - s) as f64)
        });
        Kappa { value, p_o, p_e }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    /// `None` when p_e = 1: both annotators constant and identical.
    pub value: Option<f64>,
    pub p_o: f64,
    pub p_e: f64,
}

impl Kappa {
    pub fn is_degenerate(&self) -> bool {
        self.value.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgreementTable {
    pub matrix: ConfusionMatrix,
    /// Sentences with fewer than two annotations.
    pub excluded: usize,
}

/// Per-sentence presence of `category` for the first two annotators (by id).
/// Non-risk decisions count as absence.
pub fn confusion_matrix(store: &AnnotationStore, category: RiskCategory) -> AgreementTable {
    let mut matrix = ConfusionMatrix::default();
    let mut excluded = 0;
    for key in store.sentences() {
        let mut reviews = store.annotations_for(key);
        match (reviews.next(), reviews.next()) {
            (Some(a), Some(b)) => matrix.push(a.has(category), b.has(category)),
            _ => excluded += 1,
        }
    }
    if excluded > 0 {
        warn!(excluded, %category, "sentences without a second annotation left out of agreement");
    }
    AgreementTable { matrix, excluded }
}

pub fn percent_agreement(store: &AnnotationStore, category: RiskCategory) -> Result<f64, AnnotationError> {
    confusion_matrix(store, category)
        .matrix
        .percent_agreement()
        .ok_or(AnnotationError::NoPairs)
}

pub fn cohens_kappa(store: &AnnotationStore, category: RiskCategory) -> Result<Kappa, AnnotationError> {
    let table = confusion_matrix(store, category);
    if table.matrix.n() == 0 {
        return Err(AnnotationError::NoPairs);
    }
    Ok(table.matrix.kappa())
}
