//! Ontology model with enrichment provenance and review state.
//!
//! Every mutation goes through [`Ontology::apply`], bumps the version by one
//! and re-checks the class invariants. [`store::OntologyStore`] persists the
//! snapshot together with an append-only change log.

pub mod rdf;
pub mod store;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::KbEntity;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("entity {entity_id} is disjoint from class {class_id}")]
    DisjointViolation { class_id: String, entity_id: String },
    #[error("{path}: {reason}")]
    Schema { path: String, reason: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no version {0} in the change history")]
    UnknownVersion(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReviewStatus {
    #[default]
    Unreviewed,
    AutoEnriched,
    ExpertConfirmed,
    NeedsReview,
    NoMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnrichMode {
    Auto,
    Expert,
}

/// Values a matched entity added to a class, so the match can be undone.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergedValues {
    pub labels: Vec<String>,
    pub alt_labels: Vec<String>,
    pub categories: Vec<String>,
    pub description: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OntologyClass {
    pub class_id: String,
    pub name: String,
    #[serde(default)]
    pub labels: Vec<String>,
    #[serde(default)]
    pub alt_labels: Vec<String>,
    #[serde(default)]
    pub synonyms: Vec<String>,
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub matched_entity: Option<String>,
    #[serde(default)]
    pub disjoint_entities: Vec<String>,
    #[serde(default)]
    pub review_status: ReviewStatus,
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default = "default_true")]
    pub intrinsic: bool,
    #[serde(default)]
    pub merged: Option<MergedValues>,
}

fn default_true() -> bool {
    true
}

impl OntologyClass {
    pub fn new(class_id: impl Into<String>, name: impl Into<String>) -> Self {
        OntologyClass {
            class_id: class_id.into(),
            name: name.into(),
            labels: Vec::new(),
            alt_labels: Vec::new(),
            synonyms: Vec::new(),
            categories: Vec::new(),
            description: None,
            matched_entity: None,
            disjoint_entities: Vec::new(),
            review_status: ReviewStatus::Unreviewed,
            parent: None,
            intrinsic: true,
            merged: None,
        }
    }

    pub fn is_disjoint(&self, entity_id: &str) -> bool {
        self.disjoint_entities.iter().any(|e| e == entity_id)
    }

    /// Search keywords in priority order: name, labels, alternative labels,
    /// synonyms, categories. Lowercased, `_` read as a space, deduplicated.
    pub fn keywords(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        std::iter::once(&self.name)
            .chain(&self.labels)
            .chain(&self.alt_labels)
            .chain(&self.synonyms)
            .chain(&self.categories)
            .map(|k| normalize_keyword(k))
            .filter(|k| !k.is_empty() && seen.insert(k.clone()))
            .collect()
    }

    fn contains_term(&self, term: &str) -> bool {
        let t = normalize_keyword(term);
        std::iter::once(&self.name)
            .chain(&self.labels)
            .chain(&self.alt_labels)
            .any(|x| normalize_keyword(x) == t)
    }

    fn unmerge(&mut self) {
        if let Some(m) = self.merged.take() {
            self.labels.retain(|l| !m.labels.contains(l));
            self.alt_labels.retain(|l| !m.alt_labels.contains(l));
            self.categories.retain(|l| !m.categories.contains(l));
            if m.description {
                self.description = None;
            }
        }
        self.matched_entity = None;
    }

    fn merge(&mut self, entity: &KbEntity) {
        let mut m = MergedValues::default();
        if !entity.label.is_empty() && !self.contains_term(&entity.label) {
            self.labels.push(entity.label.clone());
            m.labels.push(entity.label.clone());
        }
        for alias in &entity.aliases {
            if !alias.is_empty() && !self.contains_term(alias) {
                self.alt_labels.push(alias.clone());
                m.alt_labels.push(alias.clone());
            }
        }
        for cat in &entity.category_labels {
            let norm = normalize_keyword(cat);
            if !norm.is_empty() && !self.categories.iter().any(|c| normalize_keyword(c) == norm) {
                self.categories.push(cat.clone());
                m.categories.push(cat.clone());
            }
        }
        if self.description.is_none() {
            if let Some(d) = entity.description.as_ref().filter(|d| !d.is_empty()) {
                self.description = Some(d.clone());
                m.description = true;
            }
        }
        self.matched_entity = Some(entity.entity_id.clone());
        self.merged = Some(m);
    }

    fn check(&self, at: &str) -> Result<(), OntologyError> {
        let schema = |field: &str, reason: &str| OntologyError::Schema {
            path: format!("{at}.{field}"),
            reason: reason.to_owned(),
        };
        if self.class_id.trim().is_empty() {
            return Err(schema("class_id", "empty class id"));
        }
        if self.name.trim().is_empty() {
            return Err(schema("name", "empty class name"));
        }
        if let Some(m) = &self.matched_entity {
            if self.is_disjoint(m) {
                return Err(schema("matched_entity", "matched entity is also disjoint"));
            }
        }
        if matches!(
            self.review_status,
            ReviewStatus::AutoEnriched | ReviewStatus::ExpertConfirmed
        ) && self.matched_entity.is_none()
        {
            return Err(schema("review_status", "enriched class without a matched entity"));
        }
        Ok(())
    }
}

pub fn normalize_keyword(k: &str) -> String {
    k.replace('_', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// A committed change to an ontology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Mutation {
    Enrich {
        class_id: String,
        entity: KbEntity,
        mode: EnrichMode,
    },
    Disjoint {
        class_id: String,
        entity_ids: Vec<String>,
    },
    AddSynonyms {
        class_id: String,
        terms: Vec<String>,
    },
    SetStatus {
        class_id: String,
        status: ReviewStatus,
    },
}

impl Mutation {
    pub fn class_id(&self) -> &str {
        match self {
            Mutation::Enrich { class_id, .. }
            | Mutation::Disjoint { class_id, .. }
            | Mutation::AddSynonyms { class_id, .. }
            | Mutation::SetStatus { class_id, .. } => class_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ontology {
    pub ontology_id: String,
    #[serde(default)]
    pub version: u64,
    #[serde(default)]
    pub imports: Vec<String>,
    pub classes: Vec<OntologyClass>,
}

impl Ontology {
    pub fn new(ontology_id: impl Into<String>) -> Self {
        Ontology {
            ontology_id: ontology_id.into(),
            version: 0,
            imports: Vec::new(),
            classes: Vec::new(),
        }
    }

    /// Reads and validates an ontology snapshot.
    pub fn load(path: &Path) -> Result<Ontology, OntologyError> {
        let text = fs::read_to_string(path).map_err(|source| OntologyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            OntologyError::Schema { path: p, reason } => OntologyError::Schema {
                path: format!("{}:{p}", path.display()),
                reason,
            },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Ontology, OntologyError> {
        let ontology: Ontology =
            serde_json::from_str(text).map_err(|e| OntologyError::Schema {
                path: format!("line {} column {}", e.line(), e.column()),
                reason: e.to_string(),
            })?;
        ontology.validate()?;
        Ok(ontology)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ontology serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), crate::Error> {
        crate::io::write_atomic(path, &self.to_json())
    }

    pub fn validate(&self) -> Result<(), OntologyError> {
        let mut ids = BTreeSet::new();
        for (i, c) in self.classes.iter().enumerate() {
            let at = format!("classes[{i}]");
            c.check(&at)?;
            if !ids.insert(c.class_id.as_str()) {
                return Err(OntologyError::Schema {
                    path: format!("{at}.class_id"),
                    reason: format!("duplicate class id {}", c.class_id),
                });
            }
        }
        for (i, c) in self.classes.iter().enumerate() {
            if let Some(p) = &c.parent {
                let imported = self
                    .imports
                    .iter()
                    .any(|imp| p.starts_with(&format!("{imp}:")));
                if !ids.contains(p.as_str()) && !imported {
                    return Err(OntologyError::Schema {
                        path: format!("classes[{i}].parent"),
                        reason: format!("parent {p} resolves neither locally nor to an import"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn class(&self, class_id: &str) -> Option<&OntologyClass> {
        self.classes.iter().find(|c| c.class_id == class_id)
    }

    fn class_mut(&mut self, class_id: &str) -> Result<&mut OntologyClass, OntologyError> {
        self.classes
            .iter_mut()
            .find(|c| c.class_id == class_id)
            .ok_or_else(|| OntologyError::UnknownClass(class_id.to_owned()))
    }

    pub fn intrinsic_classes(&self) -> impl Iterator<Item = &OntologyClass> {
        self.classes.iter().filter(|c| c.intrinsic)
    }

    /// Applies one mutation. On success the version grows by exactly one; on
    /// error the ontology is left untouched.
    pub fn apply(&mut self, mutation: &Mutation) -> Result<(), OntologyError> {
        let mut class = self.class_mut(mutation.class_id())?.clone();
        match mutation {
            Mutation::Enrich { entity, mode, .. } => {
                if class.is_disjoint(&entity.entity_id) {
                    return Err(OntologyError::DisjointViolation {
                        class_id: class.class_id.clone(),
                        entity_id: entity.entity_id.clone(),
                    });
                }
                class.unmerge();
                class.merge(entity);
                class.review_status = match mode {
                    EnrichMode::Auto => ReviewStatus::AutoEnriched,
                    EnrichMode::Expert => ReviewStatus::ExpertConfirmed,
                };
            }
            Mutation::Disjoint { entity_ids, .. } => {
                for id in entity_ids {
                    if !class.is_disjoint(id) {
                        class.disjoint_entities.push(id.clone());
                    }
                }
                if class
                    .matched_entity
                    .as_ref()
                    .is_some_and(|m| entity_ids.contains(m))
                {
                    class.unmerge();
                    class.review_status = ReviewStatus::NeedsReview;
                }
            }
            Mutation::AddSynonyms { terms, .. } => {
                for t in terms {
                    if !class.synonyms.contains(t) {
                        class.synonyms.push(t.clone());
                    }
                }
                if class.matched_entity.is_none() {
                    class.review_status = ReviewStatus::NoMatch;
                }
            }
            Mutation::SetStatus { status, .. } => {
                class.review_status = *status;
            }
        }
        class.check(&format!("class {}", class.class_id))?;
        *self.class_mut(mutation.class_id())? = class;
        self.version += 1;
        Ok(())
    }

    pub fn apply_enrichment(
        &mut self,
        class_id: &str,
        entity: &KbEntity,
        mode: EnrichMode,
    ) -> Result<(), OntologyError> {
        self.apply(&Mutation::Enrich {
            class_id: class_id.to_owned(),
            entity: entity.clone(),
            mode,
        })
    }

    pub fn disjoint_entity(&mut self, class_id: &str, entity_id: &str) -> Result<(), OntologyError> {
        self.apply(&Mutation::Disjoint {
            class_id: class_id.to_owned(),
            entity_ids: vec![entity_id.to_owned()],
        })
    }
}

/// Keywords of a class; see [`OntologyClass::keywords`].
pub fn keywords_of(class: &OntologyClass) -> Vec<String> {
    class.keywords()
}
