#![allow(dead_code)]

use std::path::{Path, PathBuf};

use contron::corpus::{load_corpus, Document};
use contron::dke::{extract_domain_knowledge, DkeConfig};
use contron::eval::{parse_enrichment_gold, EnrichmentGold, Gold};
use contron::ie::{ExtractOptions, Extractor, PairRecord};
use contron::kb::{FixtureKb, KnowledgeBase};
use contron::lexicon::Lexicon;
use contron::oe::review::{ItemKind, ReviewAction, ReviewQueue};
use contron::oe::{enrich_ontology, Decision, EnrichmentLedger, OeConfig};
use contron::ontology::store::OntologyStore;
use contron::ontology::{Mutation, Ontology, ReviewStatus};

/// Threshold the fixture KB was tuned against: its cosines are small because
/// the domain document is long and the candidate texts are short.
pub const FIXTURE_THRESHOLD: f64 = 0.05;

/// Documents used by each enrichment iteration; the corpus grows.
pub const ITERATION_DOCS: [usize; 3] = [2, 3, 5];

/// Fixture root. Every test that touches fixtures also turns the network
/// guard on, so nothing in the suite can reach a live service.
pub fn fixtures() -> PathBuf {
    contron::kb::wikidata::set_network_guard(true);
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn lexicon() -> Lexicon {
    Lexicon::load(&fixtures().join("lexicon")).expect("fixture lexicon loads")
}

pub fn kb() -> FixtureKb {
    FixtureKb::load(&fixtures().join("kb/entities.json")).expect("fixture kb loads")
}

pub fn ontology(name: &str) -> Ontology {
    Ontology::load(&fixtures().join(format!("ontology/{name}.json"))).expect("fixture ontology loads")
}

pub fn star_tracker_docs() -> Vec<Document> {
    load_corpus(&fixtures().join("corpus/star_tracker/manifest.tsv"), None).expect("corpus loads")
}

pub fn gold() -> Gold {
    Gold::load(&fixtures().join("corpus/star_tracker/gold.tsv")).expect("gold loads")
}

pub fn enrichment_gold(name: &str) -> EnrichmentGold {
    let path = fixtures().join(format!("ontology/{name}_enrichment_gold.tsv"));
    let text = std::fs::read_to_string(&path).expect("enrichment gold reads");
    parse_enrichment_gold(&text, &path.display().to_string()).expect("enrichment gold parses")
}

/// Classes matched to their gold entity, either confirmed by the expert or
/// enriched automatically.
pub fn correct_matches(ontology: &Ontology, gold: &EnrichmentGold) -> usize {
    ontology
        .intrinsic_classes()
        .filter(|c| {
            matches!(
                c.review_status,
                ReviewStatus::ExpertConfirmed | ReviewStatus::AutoEnriched
            ) && c.matched_entity.is_some()
                && gold.get(&c.class_id).cloned().flatten() == c.matched_entity
        })
        .count()
}

pub struct IterationReport {
    /// Correct matches right after the matcher ran, before the expert.
    pub correct: usize,
    pub ledger: EnrichmentLedger,
}

/// Enrichment iterations on a growing corpus. After each pass a simulated
/// expert who knows the gold entities disjoints wrong automatic matches,
/// selects the gold entity when it is among the candidates and marks the
/// rest as having no match.
pub fn simulate_iterations(
    dir: &Path,
    seed: Ontology,
    gold: &EnrichmentGold,
    kb: &dyn KnowledgeBase,
    threshold: f64,
) -> (Vec<IterationReport>, Ontology) {
    let lex = lexicon();
    let docs = star_tracker_docs();
    let mut store = OntologyStore::create(&dir.join("ontology"), seed).expect("store");
    let mut queue = ReviewQueue::open(&dir.join("queue")).expect("queue");
    let config = OeConfig {
        threshold,
        ..OeConfig::default()
    };
    let mut reports = Vec::new();
    for n in ITERATION_DOCS {
        let concepts =
            extract_domain_knowledge(&docs[..n], &lex, &DkeConfig::default()).expect("dke");
        let run = enrich_ontology(store.current(), &concepts, kb, Some(&lex), &config)
            .expect("enrichment");
        store.commit_all(&run.mutations, Some("oe")).expect("commit");
        reports.push(IterationReport {
            correct: correct_matches(store.current(), gold),
            ledger: run.ledger.clone(),
        });

        for outcome in &run.ledger.outcomes {
            if let Decision::Auto { entity_id } = &outcome.decision {
                let expected = gold.get(&outcome.class_id).cloned().flatten();
                if expected.as_deref() != Some(entity_id) {
                    store
                        .commit(
                            Mutation::Disjoint {
                                class_id: outcome.class_id.clone(),
                                entity_ids: vec![entity_id.clone()],
                            },
                            Some("expert"),
                        )
                        .expect("disjoint");
                }
            }
        }
        queue.enqueue(&run.ledger).expect("enqueue");
        let pending: Vec<_> = queue
            .pending()
            .into_iter()
            .map(|i| {
                (
                    i.item_id.clone(),
                    i.class_id.clone(),
                    i.kind,
                    i.candidates
                        .iter()
                        .map(|c| c.entity.entity_id.clone())
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        for (item_id, class_id, kind, candidates) in pending {
            let expected = gold.get(&class_id).cloned().flatten();
            let action = match expected {
                Some(e) if kind == ItemKind::Review && candidates.contains(&e) => {
                    ReviewAction::Select { entity_id: e }
                }
                _ => ReviewAction::NoMatch,
            };
            queue
                .resolve(&item_id, action, "expert", &mut store)
                .expect("resolve");
        }
    }
    let last = store.current().clone();
    (reports, last)
}

/// Pairs extracted from every fixture document.
pub fn extract_all(ontology: &Ontology, baseline: bool) -> Vec<PairRecord> {
    let ex = Extractor::new(ExtractOptions {
        baseline,
        ..ExtractOptions::default()
    });
    star_tracker_docs()
        .iter()
        .flat_map(|d| ex.extract_information(ontology, d).pairs)
        .map(|p| PairRecord::from(&p))
        .collect()
}
