//! Manual labelling of extracted sentences: the label schema, the two-annotator
//! workflow with adjudication, agreement statistics and sample groups.

mod agreement;
mod groups;
mod schema;
mod store;

use thiserror::Error;

pub use agreement::{
    cohens_kappa, confusion_matrix, percent_agreement, AgreementTable, ConfusionMatrix, Kappa,
};
pub use groups::{
    build_sample_groups, default_top_tech, group_category_stats, random_group, risk_only_group,
    subdomain_distribution, top_tech_group, CategoryStats, GroupName, SampleGroup,
};
pub use schema::{Label, LabelSchema, RiskCategory, TaxonomyNode};
pub use store::{Annotation, AnnotationStore, FinalDecision, NonRiskFilter, SentenceKey};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnnotationError {
    #[error("unknown risk category {0:?}")]
    UnknownCategory(String),
    #[error("{subcategory:?} is not a subcategory of {category}")]
    UnknownSubcategory { category: RiskCategory, subcategory: String },
    #[error("{0:?} is not a node of the loaded taxonomy")]
    UnknownSubdomain(String),
    #[error("subdomain {0:?} tagged on a non-societal label")]
    SubdomainOutsideSocietal(String),
    #[error("label schema: {0}")]
    Schema(String),
    #[error("invalid sentence key {0:?}")]
    SentenceKey(String),
    #[error("annotator id is blank")]
    BlankAnnotator,
    #[error("sentence {0} is marked non-risk but carries labels")]
    NonRiskWithLabels(String),
    #[error("sentence {sentence} has {found} annotation(s); adjudication needs two")]
    NotEnoughAnnotations { sentence: String, found: usize },
    #[error("annotations of sentence {0} agree; nothing to adjudicate")]
    NotAConflict(String),
    #[error("no sentence has two annotations")]
    NoPairs,
    #[error("{group} needs {requested} filers but the eligible pool has {pool}")]
    PoolTooSmall { group: GroupName, pool: usize, requested: usize },
    #[error("configured companies not found: {}", .0.join(", "))]
    MissingCompanies(Vec<String>),
    #[error("sample group {0} is empty")]
    EmptyGroup(GroupName),
    #[error("annotation csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for AnnotationError {
    fn from(e: csv::Error) -> Self {
        AnnotationError::Csv(e.to_string())
    }
}
