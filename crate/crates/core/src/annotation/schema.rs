use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AnnotationError;

const DEFAULT_SCHEMA: &str = include_str!("../../data/label_schema.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskCategory {
    Legal,
    Competitive,
    Reputational,
    Societal,
}

impl RiskCategory {
    pub const ALL: [RiskCategory; 4] = [
        RiskCategory::Legal,
        RiskCategory::Competitive,
        RiskCategory::Reputational,
        RiskCategory::Societal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RiskCategory::Legal => "legal",
            RiskCategory::Competitive => "competitive",
            RiskCategory::Reputational => "reputational",
            RiskCategory::Societal => "societal",
        }
    }
}

impl fmt::Display for RiskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskCategory {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "legal" => Ok(RiskCategory::Legal),
            "competitive" => Ok(RiskCategory::Competitive),
            "reputational" | "reputation" => Ok(RiskCategory::Reputational),
            "societal" => Ok(RiskCategory::Societal),
            other => Err(AnnotationError::UnknownCategory(other.to_string())),
        }
    }
}

/// One label on a sentence. Subdomain tags refer to taxonomy nodes and are
/// only meaningful on societal labels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label {
    pub category: RiskCategory,
    pub subcategory: Option<String>,
    pub subdomain: Option<String>,
}

impl Label {
    pub fn new(category: RiskCategory) -> Self {
        Label { category, subcategory: None, subdomain: None }
    }

    pub fn with_subcategory(mut self, sub: &str) -> Self {
        self.subcategory = Some(sub.to_string());
        self
    }

    pub fn with_subdomain(mut self, node: &str) -> Self {
        self.subdomain = Some(node.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyNode {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct SchemaFile {
    categories: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    taxonomy: Vec<TaxonomyNode>,
}

/// Categories, their subcategories, and the societal risk taxonomy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSchema {
    subcategories: BTreeMap<RiskCategory, BTreeSet<String>>,
    taxonomy: Vec<TaxonomyNode>,
}

impl Default for LabelSchema {
    fn default() -> Self {
        LabelSchema::from_toml(DEFAULT_SCHEMA).expect("bundled label schema is valid")
    }
}

impl LabelSchema {
    pub fn from_toml(text: &str) -> Result<Self, AnnotationError> {
        let file: SchemaFile =
            toml::from_str(text).map_err(|e| AnnotationError::Schema(e.to_string()))?;
        let mut subcategories = BTreeMap::new();
        for (name, subs) in file.categories {
            let category: RiskCategory = name.parse()?;
            let mut set = BTreeSet::new();
            for sub in subs {
                let sub = sub.trim().to_lowercase();
                if sub.is_empty() || !set.insert(sub.clone()) {
                    return Err(AnnotationError::Schema(format!(
                        "subcategory {sub:?} of {category} is blank or repeated"
                    )));
                }
            }
            if subcategories.insert(category, set).is_some() {
                return Err(AnnotationError::Schema(format!("category {category} listed twice")));
            }
        }
        let mut ids = BTreeSet::new();
        for node in &file.taxonomy {
            if !ids.insert(node.id.as_str()) {
                return Err(AnnotationError::Schema(format!("taxonomy node {} repeated", node.id)));
            }
        }
        for node in &file.taxonomy {
            if let Some(parent) = &node.parent {
                if !ids.contains(parent.as_str()) {
                    return Err(AnnotationError::Schema(format!(
                        "taxonomy node {} has unknown parent {parent}",
                        node.id
                    )));
                }
            }
        }
        Ok(LabelSchema { subcategories, taxonomy: file.taxonomy })
    }

    pub fn load(path: &Path) -> Result<Self, AnnotationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AnnotationError::Schema(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn categories(&self) -> impl Iterator<Item = RiskCategory> + '_ {
        self.subcategories.keys().copied()
    }

    pub fn subcategories(&self, category: RiskCategory) -> impl Iterator<Item = &str> {
        self.subcategories
            .get(&category)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    pub fn taxonomy(&self) -> &[TaxonomyNode] {
        &self.taxonomy
    }

    /// Rejects unknown categories, subcategories outside their category and
    /// subdomain tags that are not taxonomy nodes or sit on a non-societal
    /// label.
    pub fn validate(&self, label: &Label) -> Result<(), AnnotationError> {
        let subs = self
            .subcategories
            .get(&label.category)
            .ok_or_else(|| AnnotationError::UnknownCategory(label.category.to_string()))?;
        if let Some(sub) = &label.subcategory {
            if !subs.contains(sub) {
                return Err(AnnotationError::UnknownSubcategory {
                    category: label.category,
                    subcategory: sub.clone(),
                });
            }
        }
        if let Some(node) = &label.subdomain {
            if label.category != RiskCategory::Societal {
                return Err(AnnotationError::SubdomainOutsideSocietal(node.clone()));
            }
            if !self.taxonomy.iter().any(|n| &n.id == node) {
                return Err(AnnotationError::UnknownSubdomain(node.clone()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_schema_has_four_categories() {
        let s = LabelSchema::default();
        assert_eq!(s.categories().collect::<Vec<_>>(), RiskCategory::ALL);
        assert_eq!(s.subcategories(RiskCategory::Legal).count(), 5);
        assert_eq!(s.subcategories(RiskCategory::Competitive).count(), 3);
        assert_eq!(s.subcategories(RiskCategory::Reputational).count(), 0);
        assert_eq!(s.subcategories(RiskCategory::Societal).count(), 7);
        assert_eq!(s.taxonomy().len(), 7);
    }

    #[test]
    fn validation() {
        let s = LabelSchema::default();
        assert!(s.validate(&Label::new(RiskCategory::Legal).with_subcategory("ip concerns")).is_ok());
        assert!(matches!(
            s.validate(&Label::new(RiskCategory::Competitive).with_subcategory("ip concerns")),
            Err(AnnotationError::UnknownSubcategory { .. })
        ));
        assert!(s
            .validate(&Label::new(RiskCategory::Societal).with_subdomain("misinformation"))
            .is_ok());
        assert!(matches!(
            s.validate(&Label::new(RiskCategory::Societal).with_subdomain("weather")),
            Err(AnnotationError::UnknownSubdomain(_))
        ));
        assert!(matches!(
            s.validate(&Label::new(RiskCategory::Legal).with_subdomain("misinformation")),
            Err(AnnotationError::SubdomainOutsideSocietal(_))
        ));
    }

    #[test]
    fn rejects_bad_schema_files() {
        assert!(LabelSchema::from_toml("[categories]\nfinancial = []").is_err());
        assert!(LabelSchema::from_toml("[categories]\nlegal = [\"a\", \"a\"]").is_err());
        let orphan = "[categories]\n[[taxonomy]]\nid = \"x\"\nname = \"X\"\nparent = \"y\"\n";
        assert!(LabelSchema::from_toml(orphan).is_err());
    }
}
