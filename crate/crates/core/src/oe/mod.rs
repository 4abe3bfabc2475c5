//! Ontology enrichment: match each intrinsic class against knowledge-base
//! entities in a vector space shared with the domain concepts.
//!
//! A class with exactly one candidate at or above the threshold is enriched
//! automatically. Several confident candidates, or candidates that all fall
//! below the threshold, go to expert review. A class without any candidate
//! receives lexicon synonyms as fallback search terms.

pub mod review;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize_text, BagOfWords, NoMultiwords, TermLexicon};
use crate::dke::DomainConcept;
use crate::kb::{KbEntity, KnowledgeBase, DEFAULT_SEARCH_LIMIT};
use crate::lexicon::{to_lemma, Lexicon};
use crate::ontology::{
    normalize_keyword, EnrichMode, Mutation, Ontology, OntologyClass, OntologyError, ReviewStatus,
};
use crate::Error;

pub const DEFAULT_THRESHOLD: f64 = 0.3;

/// Term weighting of the vector space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Raw count times smoothed idf, `ln((1 + N) / (1 + df)) + 1`.
    #[default]
    TfIdf,
    RawCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OeConfig {
    pub threshold: f64,
    pub weighting: Weighting,
    /// Candidates requested per class name.
    pub limit: usize,
}

impl Default for OeConfig {
    fn default() -> Self {
        OeConfig {
            threshold: DEFAULT_THRESHOLD,
            weighting: Weighting::TfIdf,
            limit: DEFAULT_SEARCH_LIMIT,
        }
    }
}

/// The domain concepts read as one document.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DomainDocument {
    pub terms: BagOfWords,
}

fn analyzer(lexicon: Option<&Lexicon>) -> &dyn TermLexicon {
    match lexicon {
        Some(l) => l,
        None => &NoMultiwords,
    }
}

fn bag(doc_id: &str, text: &str, lexicon: Option<&Lexicon>) -> BagOfWords {
    // unigrams only: candidate texts and the domain document must share a vocabulary
    tokenize_text(doc_id, text, 1, analyzer(lexicon))
}

impl DomainDocument {
    /// Topic, gloss and member lemmas of every concept.
    pub fn from_concepts(concepts: &[DomainConcept], lexicon: Option<&Lexicon>) -> Self {
        let mut text = String::new();
        for c in concepts {
            text.push_str(&c.topic.replace('_', " "));
            text.push('\n');
            text.push_str(&c.gloss);
            text.push('\n');
            for l in &c.lemmas {
                text.push_str(&l.replace('_', " "));
                text.push('\n');
            }
        }
        DomainDocument {
            terms: bag("domain", &text, lexicon),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

pub type SparseVector = BTreeMap<String, f64>;

/// Weighted vectors of the candidate texts and the domain document.
#[derive(Debug, Clone, PartialEq)]
pub struct Vsm {
    pub vocabulary: Vec<String>,
    pub candidates: Vec<SparseVector>,
    pub domain: SparseVector,
}

impl Vsm {
    pub fn cosines(&self) -> Vec<f64> {
        self.candidates.iter().map(|c| cosine(c, &self.domain)).collect()
    }
}

/// Builds the vector space over the candidates plus the domain document;
/// idf is computed over that mini-corpus.
pub fn build_vsm(
    candidate_texts: &[String],
    domain: &DomainDocument,
    weighting: Weighting,
    lexicon: Option<&Lexicon>,
) -> Vsm {
    let bags: Vec<BagOfWords> = candidate_texts
        .iter()
        .enumerate()
        .map(|(i, t)| bag(&format!("candidate-{i}"), t, lexicon))
        .collect();
    let n = bags.len() + 1;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for b in bags.iter().chain(std::iter::once(&domain.terms)) {
        for lemma in b.counts.keys() {
            *df.entry(lemma).or_default() += 1;
        }
    }
    let weigh = |b: &BagOfWords| -> SparseVector {
        b.counts
            .iter()
            .map(|(lemma, &count)| {
                let w = match weighting {
                    Weighting::RawCount => count as f64,
                    Weighting::TfIdf => {
                        let idf = ((1 + n) as f64 / (1 + df[lemma.as_str()]) as f64).ln() + 1.0;
                        count as f64 * idf
                    }
                };
                (lemma.clone(), w)
            })
            .collect()
    };
    Vsm {
        vocabulary: df.keys().map(|s| s.to_string()).collect(),
        candidates: bags.iter().map(weigh).collect(),
        domain: weigh(&domain.terms),
    }
}

/// Cosine of two non-negative sparse vectors; 0 when either is zero.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(k, x)| b.get(k).map(|y| x * y))
        .fold(0.0, |acc, v| acc + v);
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateMatch {
    pub class_id: String,
    pub entity: KbEntity,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    Auto { entity_id: String },
    Review,
    NoMatch { fallback_terms: Vec<String> },
}

impl Decision {
    pub fn label(&self) -> &'static str {
        match self {
            Decision::Auto { .. } => "auto",
            Decision::Review => "review",
            Decision::NoMatch { .. } => "no_match",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentOutcome {
    pub class_id: String,
    pub class_name: String,
    pub decision: Decision,
    /// Sorted by descending similarity, ties by entity id.
    pub candidates: Vec<CandidateMatch>,
}

impl EnrichmentOutcome {
    pub fn best_similarity(&self) -> f64 {
        self.candidates.first().map_or(0.0, |c| c.similarity)
    }
}

pub fn sort_candidates(candidates: &mut [CandidateMatch]) {
    candidates.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| a.entity.entity_id.cmp(&b.entity.entity_id))
    });
}

/// The decision rule over scored candidates. `None` means there were no
/// candidates at all.
pub fn decide(candidates: &[CandidateMatch], threshold: f64) -> Option<Decision> {
    if candidates.is_empty() {
        return None;
    }
    let mut confident = candidates.iter().filter(|c| c.similarity >= threshold);
    match (confident.next(), confident.next()) {
        (Some(only), None) => Some(Decision::Auto {
            entity_id: only.entity.entity_id.clone(),
        }),
        _ => Some(Decision::Review),
    }
}

/// Lexicon synonyms and related terms for a class name: those of the whole
/// name first, else those of its words.
pub fn fallback_terms(name: &str, lexicon: Option<&Lexicon>) -> Vec<String> {
    let Some(lex) = lexicon else {
        return Vec::new();
    };
    let own = normalize_keyword(name);
    let mut terms = lex.synonyms_and_related(&to_lemma(name));
    if terms.is_empty() {
        let mut seen = BTreeSet::new();
        for word in name.split_whitespace() {
            let lemma = to_lemma(word);
            let lemma = lex.morph(&lemma).unwrap_or(lemma);
            for t in lex.synonyms_and_related(&lemma) {
                if seen.insert(t.clone()) {
                    terms.push(t);
                }
            }
        }
    }
    terms
        .into_iter()
        .map(|t| t.replace('_', " "))
        .filter(|t| normalize_keyword(t) != own)
        .collect()
}

/// Scores the candidates of one class and applies the decision rule.
pub fn match_class(
    class: &OntologyClass,
    domain: &DomainDocument,
    kb: &dyn KnowledgeBase,
    lexicon: Option<&Lexicon>,
    config: &OeConfig,
) -> Result<EnrichmentOutcome, Error> {
    if class.name.trim().is_empty() {
        return Err(OntologyError::UnknownClass(class.class_id.clone()).into());
    }
    if !(0.0..=1.0).contains(&config.threshold) {
        return Err(Error::Config(format!(
            "threshold {} outside [0, 1]",
            config.threshold
        )));
    }
    let entities: Vec<KbEntity> = kb
        .search_entities(&class.name, config.limit)?
        .into_iter()
        .filter(|e| !class.is_disjoint(&e.entity_id))
        .collect();
    let texts: Vec<String> = entities.iter().map(KbEntity::text).collect();
    let sims = build_vsm(&texts, domain, config.weighting, lexicon).cosines();
    let mut candidates: Vec<CandidateMatch> = entities
        .into_iter()
        .zip(sims)
        .map(|(entity, similarity)| CandidateMatch {
            class_id: class.class_id.clone(),
            entity,
            similarity,
        })
        .collect();
    sort_candidates(&mut candidates);
    let decision = decide(&candidates, config.threshold).unwrap_or_else(|| Decision::NoMatch {
        fallback_terms: fallback_terms(&class.name, lexicon),
    });
    Ok(EnrichmentOutcome {
        class_id: class.class_id.clone(),
        class_name: class.name.clone(),
        decision,
        candidates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassError {
    pub class_id: String,
    pub message: String,
}

/// Everything one sweep decided, in class order. Contains no timestamps, so
/// identical inputs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentLedger {
    pub ontology_id: String,
    pub base_version: u64,
    pub threshold: f64,
    pub weighting: Weighting,
    pub outcomes: Vec<EnrichmentOutcome>,
    /// Expert-confirmed classes left untouched.
    pub skipped: Vec<String>,
    pub errors: Vec<ClassError>,
}

impl EnrichmentLedger {
    /// Counts per decision kind.
    pub fn histogram(&self) -> BTreeMap<&'static str, usize> {
        let mut h = BTreeMap::new();
        for o in &self.outcomes {
            *h.entry(o.decision.label()).or_default() += 1;
        }
        h
    }

    pub fn to_json(&self) -> Result<String, Error> {
        crate::io::to_pretty_json(self)
    }

    pub fn write(&self, path: &Path) -> Result<(), Error> {
        crate::io::write_atomic(path, &self.to_json()?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enrichment {
    pub ontology: Ontology,
    /// Mutations that turned the input ontology into `ontology`, in order.
    pub mutations: Vec<Mutation>,
    pub ledger: EnrichmentLedger,
}

fn mutations_for(class: &OntologyClass, outcome: &EnrichmentOutcome) -> Vec<Mutation> {
    let class_id = class.class_id.clone();
    match &outcome.decision {
        Decision::Auto { entity_id } => {
            let entity = outcome
                .candidates
                .iter()
                .find(|c| &c.entity.entity_id == entity_id)
                .map(|c| c.entity.clone())
                .expect("auto decision names one of its candidates");
            vec![Mutation::Enrich {
                class_id,
                entity,
                mode: EnrichMode::Auto,
            }]
        }
        Decision::Review if class.review_status != ReviewStatus::NeedsReview => {
            vec![Mutation::SetStatus {
                class_id,
                status: ReviewStatus::NeedsReview,
            }]
        }
        Decision::Review => Vec::new(),
        Decision::NoMatch { fallback_terms } => {
            let fresh: Vec<String> = fallback_terms
                .iter()
                .filter(|t| !class.synonyms.contains(t))
                .cloned()
                .collect();
            if !fresh.is_empty() {
                vec![Mutation::AddSynonyms {
                    class_id,
                    terms: fresh,
                }]
            } else if class.review_status != ReviewStatus::NoMatch {
                vec![Mutation::SetStatus {
                    class_id,
                    status: ReviewStatus::NoMatch,
                }]
            } else {
                Vec::new()
            }
        }
    }
}

/// Runs the matcher over every intrinsic class that an expert has not
/// confirmed yet. Per-class failures are recorded in the ledger; the sweep
/// fails only when every attempted class fails.
pub fn enrich_ontology(
    ontology: &Ontology,
    concepts: &[DomainConcept],
    kb: &dyn KnowledgeBase,
    lexicon: Option<&Lexicon>,
    config: &OeConfig,
) -> Result<Enrichment, Error> {
    let domain = DomainDocument::from_concepts(concepts, lexicon);
    if domain.is_empty() {
        warn!("empty domain document; every similarity will be 0");
    }
    let mut next = ontology.clone();
    let mut mutations = Vec::new();
    let mut ledger = EnrichmentLedger {
        ontology_id: ontology.ontology_id.clone(),
        base_version: ontology.version,
        threshold: config.threshold,
        weighting: config.weighting,
        outcomes: Vec::new(),
        skipped: Vec::new(),
        errors: Vec::new(),
    };
    let mut first_error = None;
    for class in ontology.intrinsic_classes() {
        if class.review_status == ReviewStatus::ExpertConfirmed {
            ledger.skipped.push(class.class_id.clone());
            continue;
        }
        match match_class(class, &domain, kb, lexicon, config) {
            Ok(outcome) => {
                for m in mutations_for(class, &outcome) {
                    next.apply(&m)?;
                    mutations.push(m);
                }
                ledger.outcomes.push(outcome);
            }
            Err(e) => {
                warn!("class {}: {e}", class.class_id);
                ledger.errors.push(ClassError {
                    class_id: class.class_id.clone(),
                    message: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    if ledger.outcomes.is_empty() {
        if let Some(e) = first_error {
            return Err(Error::SweepFailed(Box::new(e)));
        }
    }
    info!("enrichment of {}: {:?}", ontology.ontology_id, ledger.histogram());
    Ok(Enrichment {
        ontology: next,
        mutations,
        ledger,
    })
}
