//! Knowledge-base access: entity search by class name.
//!
//! [`wikidata::WikidataClient`] talks to a Wikidata-style HTTP API with a
//! persistent per-query cache; [`FixtureKb`] serves entities from a single
//! checked-in file for hermetic runs.

pub mod wikidata;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::normalize_keyword;

pub const DEFAULT_SEARCH_LIMIT: usize = 10;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("network error: {0}")]
    Network(String),
    #[error("rate limited by {0}")]
    RateLimited(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("no cached result for {query:?} (offline mode)")]
    CacheMiss { query: String },
    #[error("network access attempted while the network guard is active: {0}")]
    NetworkBlocked(String),
    #[error("invalid search: {0}")]
    InvalidQuery(String),
    #[error("cannot access {path}: {reason}")]
    Io { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbEntity {
    pub entity_id: String,
    pub label: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub aliases: Vec<String>,
    /// Targets of instance-of / subclass-of statements.
    #[serde(default)]
    pub category_ids: Vec<String>,
    #[serde(default)]
    pub category_labels: Vec<String>,
}

impl KbEntity {
    /// Label, description, aliases and category labels joined for
    /// vectorization.
    pub fn text(&self) -> String {
        let mut parts = vec![self.label.as_str()];
        if let Some(d) = &self.description {
            parts.push(d);
        }
        parts.extend(self.aliases.iter().map(String::as_str));
        parts.extend(self.category_labels.iter().map(String::as_str));
        parts.join(" ")
    }
}

pub trait KnowledgeBase: Send + Sync {
    /// Entities whose label or alias matches `name`, at most `limit`.
    fn search_entities(&self, name: &str, limit: usize) -> Result<Vec<KbEntity>, KbError>;
}

impl<T: KnowledgeBase + ?Sized> KnowledgeBase for &T {
    fn search_entities(&self, name: &str, limit: usize) -> Result<Vec<KbEntity>, KbError> {
        (**self).search_entities(name, limit)
    }
}

impl<T: KnowledgeBase + ?Sized> KnowledgeBase for Box<T> {
    fn search_entities(&self, name: &str, limit: usize) -> Result<Vec<KbEntity>, KbError> {
        (**self).search_entities(name, limit)
    }
}

impl<T: KnowledgeBase + ?Sized> KnowledgeBase for std::sync::Arc<T> {
    fn search_entities(&self, name: &str, limit: usize) -> Result<Vec<KbEntity>, KbError> {
        (**self).search_entities(name, limit)
    }
}

pub(crate) fn check_query(name: &str, limit: usize) -> Result<(), KbError> {
    if name.trim().is_empty() {
        return Err(KbError::InvalidQuery("empty name".into()));
    }
    if limit == 0 {
        return Err(KbError::InvalidQuery("limit must be at least 1".into()));
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct FixtureFile {
    entities: Vec<KbEntity>,
}

/// Offline knowledge base backed by one JSON file of entities.
///
/// A query matches an entity when the normalized query equals its label or
/// an alias, or is a leading word sequence of one of them. Results keep file
/// order.
#[derive(Debug, Clone)]
pub struct FixtureKb {
    entities: Vec<KbEntity>,
}

impl FixtureKb {
    pub fn new(entities: Vec<KbEntity>) -> Self {
        FixtureKb { entities }
    }

    pub fn load(path: &Path) -> Result<Self, KbError> {
        let io = |reason: String| KbError::Io {
            path: path.to_owned(),
            reason,
        };
        let text = fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
        let file: FixtureFile = serde_json::from_str(&text).map_err(|e| io(e.to_string()))?;
        Ok(FixtureKb::new(file.entities))
    }

    pub fn entities(&self) -> &[KbEntity] {
        &self.entities
    }
}

fn name_matches(query: &str, candidate: &str) -> bool {
    let c = normalize_keyword(candidate);
    c == query || c.starts_with(&format!("{query} "))
}

impl KnowledgeBase for FixtureKb {
    fn search_entities(&self, name: &str, limit: usize) -> Result<Vec<KbEntity>, KbError> {
        check_query(name, limit)?;
        let q = normalize_keyword(name);
        Ok(self
            .entities
            .iter()
            .filter(|e| {
                name_matches(&q, &e.label) || e.aliases.iter().any(|a| name_matches(&q, a))
            })
            .take(limit)
            .cloned()
            .collect())
    }
}
