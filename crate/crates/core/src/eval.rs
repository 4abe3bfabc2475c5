//! Precision, recall and F-measure against gold labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ie::{Method, PairRecord};
use crate::ontology::Ontology;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{0} is undefined: its denominator is zero")]
    UndefinedMetric(&'static str),
    #[error("beta must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("{path} line {line}: {reason}")]
    MalformedGold {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub beta: f64,
}

pub fn precision(c: EvalCounts) -> Result<f64, EvalError> {
    if c.tp + c.fp == 0 {
        return Err(EvalError::UndefinedMetric("precision"));
    }
    Ok(c.tp as f64 / (c.tp + c.fp) as f64)
}

pub fn recall(c: EvalCounts) -> Result<f64, EvalError> {
    if c.tp + c.fn_ == 0 {
        return Err(EvalError::UndefinedMetric("recall"));
    }
    Ok(c.tp as f64 / (c.tp + c.fn_) as f64)
}

/// `(β² + 1)·P·R / (P + β²·R)`.
pub fn f_measure(precision: f64, recall: f64, beta: f64) -> Result<f64, EvalError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(EvalError::InvalidBeta(beta));
    }
    let b2 = beta * beta;
    let denominator = precision + b2 * recall;
    if denominator == 0.0 {
        return Err(EvalError::UndefinedMetric("F-measure"));
    }
    Ok((b2 + 1.0) * precision * recall / denominator)
}

pub fn compute_metrics(counts: EvalCounts, beta: f64) -> Result<Metrics, EvalError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(EvalError::InvalidBeta(beta));
    }
    let precision = precision(counts)?;
    let recall = recall(counts)?;
    Ok(Metrics {
        precision,
        recall,
        f_measure: f_measure(precision, recall, beta)?,
        beta,
    })
}

/// Trimmed, lowercased, whitespace collapsed, trailing punctuation removed.
pub fn normalize_value(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
        .trim_end_matches(|c: char| c.is_ascii_punctuation() && c != '%' && c != '"' && c != '\'')
        .trim_end()
        .to_owned()
}

/// Expected values per (document, class).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Gold {
    pub entries: BTreeMap<(String, String), Vec<String>>,
}

impl Gold {
    /// Parses `doc_id<TAB>class_id<TAB>value` lines. Repeating a
    /// (document, class) key adds another expected value.
    pub fn parse(text: &str, origin: &str) -> Result<Gold, EvalError> {
        let mut gold = Gold::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = |reason: &str| EvalError::MalformedGold {
                path: origin.to_owned(),
                line: i + 1,
                reason: reason.to_owned(),
            };
            let [doc, class, value] = cols[..] else {
                return Err(bad("expected doc_id, class_id and value separated by tabs"));
            };
            if doc.trim().is_empty() || class.trim().is_empty() || value.trim().is_empty() {
                return Err(bad("empty field"));
            }
            gold.entries
                .entry((doc.trim().to_owned(), class.trim().to_owned()))
                .or_default()
                .push(value.to_owned());
        }
        Ok(gold)
    }

    pub fn load(path: &Path) -> Result<Gold, EvalError> {
        let text = fs::read_to_string(path).map_err(|e| EvalError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Gold::parse(&text, &path.display().to_string())
    }

    fn triples(&self) -> BTreeSet<(String, String, String)> {
        self.entries
            .iter()
            .flat_map(|((d, c), vs)| {
                vs.iter()
                    .map(move |v| (d.clone(), c.clone(), normalize_value(v)))
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.triples().len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Set comparison of (document, class, normalized value) triples. Pairs
/// still waiting for manual review are not scored; duplicate extractions
/// count once.
pub fn score_pairs(pairs: &[PairRecord], gold: &Gold) -> EvalCounts {
    let extracted: BTreeSet<(String, String, String)> = pairs
        .iter()
        .filter(|p| p.method != Method::ManualPending)
        .map(|p| (p.doc_id.clone(), p.class_id.clone(), normalize_value(&p.value)))
        .collect();
    let expected = gold.triples();
    let tp = extracted.intersection(&expected).count();
    EvalCounts {
        tp,
        fp: extracted.len() - tp,
        fn_: expected.len() - tp,
    }
}

/// Correct entity per class; `None` marks a class without a valid entity.
pub type EnrichmentGold = BTreeMap<String, Option<String>>;

/// Parses `class_id<TAB>entity_id` lines, with `-` for "no valid entity".
pub fn parse_enrichment_gold(text: &str, origin: &str) -> Result<EnrichmentGold, EvalError> {
    let mut gold = EnrichmentGold::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((class, entity)) = line.split_once('\t') else {
            return Err(EvalError::MalformedGold {
                path: origin.to_owned(),
                line: i + 1,
                reason: "expected class_id and entity_id separated by a tab".into(),
            });
        };
        let entity = entity.trim();
        gold.insert(
            class.trim().to_owned(),
            (entity != "-").then(|| entity.to_owned()),
        );
    }
    Ok(gold)
}

/// Matched classes are true or false positives depending on the gold
/// entity; gold classes left without their entity are false negatives.
pub fn score_enrichment(ontology: &Ontology, gold: &EnrichmentGold) -> EvalCounts {
    let mut c = EvalCounts::default();
    for class in ontology.intrinsic_classes() {
        let expected = gold.get(&class.class_id).cloned().flatten();
        match (&class.matched_entity, &expected) {
            (Some(m), Some(e)) if m == e => c.tp += 1,
            (Some(_), Some(_)) => {
                c.fp += 1;
                c.fn_ += 1;
            }
            (Some(_), None) => c.fp += 1,
            (None, Some(_)) => c.fn_ += 1,
            (None, None) => {}
        }
    }
    c
}
