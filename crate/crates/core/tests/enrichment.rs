mod common;

use std::collections::{BTreeMap, BTreeSet};

use contron::dke::{extract_domain_knowledge, DkeConfig, DomainConcept};
use contron::kb::{FixtureKb, KbEntity};
use contron::lexicon::{Pos, SynsetId};
use contron::oe::review::{ItemKind, ReviewAction, ReviewError, ReviewQueue};
use contron::oe::{
    build_vsm, enrich_ontology, match_class, Decision, DomainDocument, OeConfig, Weighting,
};
use contron::ontology::store::OntologyStore;
use contron::ontology::{Ontology, OntologyClass, ReviewStatus};

use common::*;

fn concept(topic: &str, gloss: &str, lemmas: &[&str]) -> DomainConcept {
    DomainConcept {
        topic: topic.into(),
        synset: SynsetId::new(topic, Pos::Noun, 1),
        gloss: gloss.into(),
        lemmas: lemmas.iter().map(|s| s.to_string()).collect(),
        accumulated_weight: 1.0,
    }
}

/// Dense vectors over the joint vocabulary, smoothed idf, plain cosine.
fn dense_cosines(docs: &[Vec<&str>], domain: &[&str]) -> Vec<f64> {
    let all: Vec<&Vec<&str>> = docs.iter().collect();
    let domain = domain.to_vec();
    let n = (docs.len() + 1) as f64;
    let vocab: BTreeSet<&str> = docs.iter().flatten().chain(&domain).copied().collect();
    let vector = |d: &[&str]| -> Vec<f64> {
        vocab
            .iter()
            .map(|t| {
                let tf = d.iter().filter(|w| *w == t).count() as f64;
                let df = all.iter().filter(|x| x.contains(t)).count() as f64
                    + if domain.contains(t) { 1.0 } else { 0.0 };
                tf * (((1.0 + n) / (1.0 + df)).ln() + 1.0)
            })
            .collect()
    };
    let q = vector(&domain);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    docs.iter()
        .map(|d| {
            let v = vector(d);
            let dot: f64 = v.iter().zip(&q).map(|(a, b)| a * b).sum();
            dot / (norm(&v) * norm(&q))
        })
        .collect()
}

#[test]
fn vsm_cosines_match_a_dense_oracle() {
    let texts = [
        "mass weight kilogram",
        "mass body matter matter",
        "radio antenna signal",
    ];
    let domain = DomainDocument::from_concepts(
        &[concept("mass", "mass weight body", &["mass"])],
        None,
    );
    let vsm = build_vsm(
        &texts.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        &domain,
        Weighting::TfIdf,
        None,
    );
    let got = vsm.cosines();
    let want = dense_cosines(
        &texts.iter().map(|t| t.split(' ').collect()).collect::<Vec<_>>(),
        &["mass", "mass", "weight", "body", "mass"],
    );
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-9, "{got:?} vs {want:?}");
    }
    assert_eq!(got[2], 0.0);
    assert!(got[0] > got[1]);
}

#[test]
fn physical_mass_is_matched_automatically() {
    let domain = DomainDocument::from_concepts(
        &[concept(
            "mass",
            "the property of a body that causes it to have weight in a gravitational field",
            &["mass"],
        )],
        Some(&lexicon()),
    );
    let class = OntologyClass::new("core:Mass", "Mass");
    let config = OeConfig::default();
    assert_eq!(config.threshold, 0.3);
    let out = match_class(&class, &domain, &kb(), Some(&lexicon()), &config).unwrap();
    assert_eq!(out.candidates[0].entity.entity_id, "Q90100");
    assert_eq!(
        out.decision,
        Decision::Auto {
            entity_id: "Q90100".into()
        }
    );
    assert!(out.candidates.iter().filter(|c| c.similarity >= 0.3).count() == 1);
}

#[test]
fn two_confident_candidates_go_to_review() {
    let kb = FixtureKb::new(vec![
        KbEntity {
            entity_id: "Q1".into(),
            label: "mass".into(),
            description: Some("weight of a body".into()),
            ..Default::default()
        },
        KbEntity {
            entity_id: "Q2".into(),
            label: "mass".into(),
            description: Some("body weight".into()),
            ..Default::default()
        },
    ]);
    let domain = DomainDocument::from_concepts(&[concept("mass", "weight body", &[])], None);
    let class = OntologyClass::new("x:Mass", "Mass");
    let out = match_class(&class, &domain, &kb, None, &OeConfig::default()).unwrap();
    assert_eq!(out.decision, Decision::Review);
    assert_eq!(out.candidates.len(), 2);
}

fn first_iteration() -> contron::oe::Enrichment {
    let docs = star_tracker_docs();
    let concepts =
        extract_domain_knowledge(&docs[..ITERATION_DOCS[0]], &lexicon(), &DkeConfig::default())
            .unwrap();
    let config = OeConfig {
        threshold: FIXTURE_THRESHOLD,
        ..OeConfig::default()
    };
    enrich_ontology(&ontology("core"), &concepts, &kb(), Some(&lexicon()), &config).unwrap()
}

#[test]
fn first_iteration_decisions_match_the_hand_labels() {
    let run = first_iteration();
    let hist: BTreeMap<&str, usize> = run.ledger.histogram();
    assert_eq!(
        hist,
        BTreeMap::from([("auto", 4), ("no_match", 1), ("review", 21)])
    );
    let autos: BTreeMap<&str, &str> = run
        .ledger
        .outcomes
        .iter()
        .filter_map(|o| match &o.decision {
            Decision::Auto { entity_id } => Some((o.class_name.as_str(), entity_id.as_str())),
            _ => None,
        })
        .collect();
    let gold = enrichment_gold("core");
    let right: Vec<&str> = autos
        .iter()
        .filter(|(name, id)| {
            let class_id = format!("core:{}", name.replace(' ', ""));
            gold.get(&class_id).cloned().flatten().as_deref() == Some(**id)
        })
        .map(|(n, _)| *n)
        .collect();
    assert_eq!(right, ["Magnetic Field", "Mass", "Reliability"]);
    assert!(autos.contains_key("Interface"));
}

#[test]
fn unmatched_class_records_fallback_terms() {
    let run = first_iteration();
    let out = run
        .ledger
        .outcomes
        .iter()
        .find(|o| o.class_name == "Radiation Tolerance")
        .unwrap();
    let Decision::NoMatch { fallback_terms } = &out.decision else {
        panic!("{:?}", out.decision);
    };
    assert!(!fallback_terms.is_empty());
    assert!(out.candidates.is_empty());
    let class = run.ontology.class("core:RadiationTolerance").unwrap();
    for t in fallback_terms {
        assert!(class.synonyms.contains(t), "{t}");
    }
}

#[test]
fn review_queue_applies_each_decision_once() {
    let dir = tempfile::tempdir().unwrap();
    let run = first_iteration();
    let mut store = OntologyStore::create(&dir.path().join("ontology"), ontology("core")).unwrap();
    store.commit_all(&run.mutations, Some("oe")).unwrap();
    let mut queue = ReviewQueue::open(&dir.path().join("queue")).unwrap();
    let ids = queue.enqueue(&run.ledger).unwrap();
    assert_eq!(ids.len(), 22);
    // a later sweep supersedes the open items of the classes it decided
    let again = queue.enqueue(&run.ledger).unwrap();
    assert_eq!(queue.pending().len(), 22);
    assert!(ids.iter().all(|id| queue.item(id).is_none()));
    assert!(again.iter().all(|id| queue.item(id).is_some()));

    let item = queue
        .pending()
        .into_iter()
        .find(|i| i.class_id == "core:Lifetime")
        .unwrap()
        .clone();
    assert_eq!(item.kind, ItemKind::Review);
    let before = store.current().version;
    let select = ReviewAction::Select {
        entity_id: "Q90108".into(),
    };
    let res = queue.resolve(&item.item_id, select.clone(), "alice", &mut store).unwrap();
    assert!(!res.replayed);
    assert_eq!(store.current().version, before + 1);
    let class = store.current().class("core:Lifetime").unwrap();
    assert_eq!(class.review_status, ReviewStatus::ExpertConfirmed);
    assert_eq!(class.matched_entity.as_deref(), Some("Q90108"));

    let again = queue.resolve(&item.item_id, select, "alice", &mut store).unwrap();
    assert!(again.replayed);
    assert_eq!(store.current().version, before + 1);
    assert!(matches!(
        queue.resolve(&item.item_id, ReviewAction::NoMatch, "bob", &mut store),
        Err(ReviewError::AlreadyResolved(_))
    ));

    // reopening reads the same state back
    let reopened = ReviewQueue::open(&dir.path().join("queue")).unwrap();
    assert_eq!(reopened.items(), queue.items());

    // a confirmed class is skipped by the next sweep
    let docs = star_tracker_docs();
    let concepts = extract_domain_knowledge(&docs, &lexicon(), &DkeConfig::default()).unwrap();
    let next = enrich_ontology(
        store.current(),
        &concepts,
        &kb(),
        Some(&lexicon()),
        &OeConfig::default(),
    )
    .unwrap();
    assert!(next.ledger.skipped.contains(&"core:Lifetime".to_string()));
}

#[test]
fn disjoint_entities_are_never_candidates_again() {
    let dir = tempfile::tempdir().unwrap();
    let run = first_iteration();
    let mut store = OntologyStore::create(&dir.path().join("ontology"), ontology("core")).unwrap();
    store.commit_all(&run.mutations, Some("oe")).unwrap();
    let mut queue = ReviewQueue::open(&dir.path().join("queue")).unwrap();
    queue.enqueue(&run.ledger).unwrap();
    let item = queue
        .pending()
        .into_iter()
        .find(|i| i.kind == ItemKind::Review && i.candidates.len() > 1)
        .unwrap()
        .clone();
    let banned: Vec<String> = item.candidates[..1]
        .iter()
        .map(|c| c.entity.entity_id.clone())
        .collect();
    queue
        .resolve(
            &item.item_id,
            ReviewAction::Disjoint {
                entity_ids: banned.clone(),
            },
            "alice",
            &mut store,
        )
        .unwrap();
    let class = store.current().class(&item.class_id).unwrap().clone();
    let out = match_class(
        &class,
        &DomainDocument::default(),
        &kb(),
        Some(&lexicon()),
        &OeConfig::default(),
    )
    .unwrap();
    assert!(out.candidates.iter().all(|c| !banned.contains(&c.entity.entity_id)));
}

#[test]
fn empty_ontology_enriches_to_an_empty_ledger() {
    let run = enrich_ontology(
        &Ontology::new("empty"),
        &[],
        &kb(),
        None,
        &OeConfig::default(),
    )
    .unwrap();
    assert!(run.ledger.outcomes.is_empty());
    assert!(run.mutations.is_empty());
}
