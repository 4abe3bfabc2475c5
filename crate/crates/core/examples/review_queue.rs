//! Queue the undecided classes of an enrichment pass, accept one candidate
//! as an expert would, and show the resulting version history.

use std::path::Path;

use contron::corpus::load_corpus;
use contron::dke::{extract_domain_knowledge, DkeConfig};
use contron::kb::FixtureKb;
use contron::lexicon::Lexicon;
use contron::oe::review::{ReviewAction, ReviewQueue};
use contron::oe::{enrich_ontology, OeConfig};
use contron::ontology::store::OntologyStore;
use contron::ontology::Ontology;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let work = tempfile::tempdir()?;
    let lexicon = Lexicon::load(&fixtures.join("lexicon"))?;
    let docs = load_corpus(&fixtures.join("corpus/star_tracker/manifest.tsv"), None)?;
    let kb = FixtureKb::load(&fixtures.join("kb/entities.json"))?;

    let mut store = OntologyStore::create(
        &work.path().join("ontology"),
        Ontology::load(&fixtures.join("ontology/core.json"))?,
    )?;
    let concepts = extract_domain_knowledge(&docs, &lexicon, &DkeConfig::default())?;
    let config = OeConfig {
        threshold: 0.05,
        ..OeConfig::default()
    };
    let run = enrich_ontology(store.current(), &concepts, &kb, Some(&lexicon), &config)?;
    store.commit_all(&run.mutations, Some("oe"))?;

    let mut queue = ReviewQueue::open(&work.path().join("queue"))?;
    queue.enqueue(&run.ledger)?;
    println!("{} items pending", queue.pending().len());

    let item = queue
        .pending()
        .into_iter()
        .find(|i| !i.candidates.is_empty())
        .ok_or("nothing to review")?
        .clone();
    let pick = item.candidates[0].entity.clone();
    println!("{}: selecting {} ({})", item.class_name, pick.entity_id, pick.label);
    queue.resolve(
        &item.item_id,
        ReviewAction::Select {
            entity_id: pick.entity_id,
        },
        "expert",
        &mut store,
    )?;

    for change in store.history().iter().rev().take(3) {
        println!(
            "v{} {} {}",
            change.version,
            change.actor.as_deref().unwrap_or("-"),
            change.mutation.class_id()
        );
    }
    Ok(())
}
