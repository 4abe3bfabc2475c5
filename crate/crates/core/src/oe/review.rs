//! Expert review queue: classes the matcher could not decide alone, and the
//! decisions experts record against them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CandidateMatch, Decision, EnrichmentLedger};
use crate::io::{append_line, to_pretty_json, write_atomic};
use crate::ontology::store::{now_timestamp, OntologyStore};
use crate::ontology::{EnrichMode, Mutation, OntologyError, ReviewStatus};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Review,
    NoMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub item_id: String,
    pub class_id: String,
    pub class_name: String,
    pub kind: ItemKind,
    pub candidates: Vec<CandidateMatch>,
    #[serde(default)]
    pub fallback_terms: Vec<String>,
    pub created_at: String,
    pub resolved: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<ReviewDecision>,
}

impl ReviewItem {
    pub fn best_similarity(&self) -> f64 {
        self.candidates.first().map_or(0.0, |c| c.similarity)
    }

    fn has_candidate(&self, entity_id: &str) -> bool {
        self.candidates.iter().any(|c| c.entity.entity_id == entity_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ReviewAction {
    /// The entity represents the class.
    Select { entity_id: String },
    /// None of these entities may ever represent the class.
    Disjoint { entity_ids: Vec<String> },
    NoMatch,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    #[serde(flatten)]
    pub action: ReviewAction,
    pub actor: String,
    pub timestamp: String,
    /// Ontology version once the decision was applied.
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DecisionRecord {
    item_id: String,
    class_id: String,
    #[serde(flatten)]
    decision: ReviewDecision,
}

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("unknown review item {0}")]
    NotFound(String),
    #[error("review item {0} was already resolved with a different decision")]
    AlreadyResolved(String),
    #[error("invalid decision: {0}")]
    Invalid(String),
    #[error(transparent)]
    Store(#[from] Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub item: ReviewItem,
    /// The same decision had already been applied; nothing changed.
    pub replayed: bool,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct QueueFile {
    next_seq: u64,
    items: Vec<ReviewItem>,
}

/// File-backed review queue with an append-only decision log beside it.
#[derive(Debug)]
pub struct ReviewQueue {
    path: PathBuf,
    log_path: PathBuf,
    state: QueueFile,
}

impl ReviewQueue {
    /// Opens `queue.json` in `dir`, starting empty when absent.
    pub fn open(dir: &Path) -> Result<Self, Error> {
        let path = dir.join("queue.json");
        let state = match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => QueueFile::default(),
            Err(e) => return Err(Error::io(&path, e)),
        };
        Ok(ReviewQueue {
            path,
            log_path: dir.join("decisions.jsonl"),
            state,
        })
    }

    fn save(&self) -> Result<(), Error> {
        write_atomic(&self.path, &to_pretty_json(&self.state)?)
    }

    pub fn items(&self) -> &[ReviewItem] {
        &self.state.items
    }

    pub fn item(&self, item_id: &str) -> Option<&ReviewItem> {
        self.state.items.iter().find(|i| i.item_id == item_id)
    }

    /// Unresolved items, most promising first.
    pub fn pending(&self) -> Vec<&ReviewItem> {
        let mut v: Vec<&ReviewItem> = self.state.items.iter().filter(|i| !i.resolved).collect();
        v.sort_by(|a, b| {
            b.best_similarity()
                .total_cmp(&a.best_similarity())
                .then_with(|| a.item_id.cmp(&b.item_id))
        });
        v
    }

    /// Queues the review and no-match outcomes of a sweep. Unresolved items of
    /// every class the sweep decided are superseded.
    pub fn enqueue(&mut self, ledger: &EnrichmentLedger) -> Result<Vec<String>, Error> {
        let decided: Vec<&str> = ledger.outcomes.iter().map(|o| o.class_id.as_str()).collect();
        self.state
            .items
            .retain(|i| i.resolved || !decided.contains(&i.class_id.as_str()));
        let created_at = now_timestamp();
        let mut ids = Vec::new();
        for o in &ledger.outcomes {
            let (kind, fallback_terms) = match &o.decision {
                Decision::Auto { .. } => continue,
                Decision::Review => (ItemKind::Review, Vec::new()),
                Decision::NoMatch { fallback_terms } => (ItemKind::NoMatch, fallback_terms.clone()),
            };
            self.state.next_seq += 1;
            let item_id = format!("item-{:05}", self.state.next_seq);
            ids.push(item_id.clone());
            self.state.items.push(ReviewItem {
                item_id,
                class_id: o.class_id.clone(),
                class_name: o.class_name.clone(),
                kind,
                candidates: o.candidates.clone(),
                fallback_terms,
                created_at: created_at.clone(),
                resolved: false,
                decision: None,
            });
        }
        self.save()?;
        Ok(ids)
    }

    /// Applies an expert decision to the ontology store and marks the item
    /// resolved. Each accepted decision commits exactly one mutation.
    /// Replaying the decision an item was resolved with is a no-op.
    pub fn resolve(
        &mut self,
        item_id: &str,
        action: ReviewAction,
        actor: &str,
        store: &mut OntologyStore,
    ) -> Result<Resolution, ReviewError> {
        let idx = self
            .state
            .items
            .iter()
            .position(|i| i.item_id == item_id)
            .ok_or_else(|| ReviewError::NotFound(item_id.to_owned()))?;
        let item = &self.state.items[idx];
        if item.resolved {
            return match &item.decision {
                Some(d) if d.action == action => Ok(Resolution {
                    item: item.clone(),
                    replayed: true,
                }),
                _ => Err(ReviewError::AlreadyResolved(item_id.to_owned())),
            };
        }
        let class_id = item.class_id.clone();
        let mutation = match &action {
            ReviewAction::Select { entity_id } => {
                let c = item
                    .candidates
                    .iter()
                    .find(|c| &c.entity.entity_id == entity_id)
                    .ok_or_else(|| {
                        ReviewError::Invalid(format!("{entity_id} is not a candidate of {item_id}"))
                    })?;
                Mutation::Enrich {
                    class_id: class_id.clone(),
                    entity: c.entity.clone(),
                    mode: EnrichMode::Expert,
                }
            }
            ReviewAction::Disjoint { entity_ids } => {
                if entity_ids.is_empty() {
                    return Err(ReviewError::Invalid("no entities to disjoint".into()));
                }
                if let Some(bad) = entity_ids.iter().find(|e| !item.has_candidate(e)) {
                    return Err(ReviewError::Invalid(format!(
                        "{bad} is not a candidate of {item_id}"
                    )));
                }
                Mutation::Disjoint {
                    class_id: class_id.clone(),
                    entity_ids: entity_ids.clone(),
                }
            }
            ReviewAction::NoMatch => Mutation::SetStatus {
                class_id: class_id.clone(),
                status: ReviewStatus::NoMatch,
            },
            ReviewAction::Skip => Mutation::SetStatus {
                class_id: class_id.clone(),
                status: ReviewStatus::NeedsReview,
            },
        };
        let version = store
            .commit(mutation, Some(actor))
            .map_err(|e| match e {
                Error::Ontology(OntologyError::DisjointViolation { .. }) => {
                    ReviewError::Invalid(e.to_string())
                }
                other => ReviewError::Store(other),
            })?;
        let decision = ReviewDecision {
            action,
            actor: actor.to_owned(),
            timestamp: now_timestamp(),
            version,
        };
        let record = DecisionRecord {
            item_id: item_id.to_owned(),
            class_id,
            decision: decision.clone(),
        };
        append_line(&self.log_path, &serde_json::to_string(&record).map_err(Error::from)?)?;
        let item = &mut self.state.items[idx];
        item.resolved = true;
        item.decision = Some(decision);
        let resolved = item.clone();
        self.save()?;
        Ok(Resolution {
            item: resolved,
            replayed: false,
        })
    }
}
