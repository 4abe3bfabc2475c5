//! One enrichment pass of the core ontology against the fixture knowledge
//! base. The fixture similarities are small, so the threshold is lowered.

use std::path::Path;

use contron::corpus::load_corpus;
use contron::dke::{extract_domain_knowledge, DkeConfig};
use contron::kb::FixtureKb;
use contron::lexicon::Lexicon;
use contron::oe::{enrich_ontology, Decision, OeConfig};
use contron::ontology::Ontology;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let lexicon = Lexicon::load(&fixtures.join("lexicon"))?;
    let docs = load_corpus(&fixtures.join("corpus/star_tracker/manifest.tsv"), None)?;
    let kb = FixtureKb::load(&fixtures.join("kb/entities.json"))?;
    let ontology = Ontology::load(&fixtures.join("ontology/core.json"))?;

    let concepts = extract_domain_knowledge(&docs, &lexicon, &DkeConfig::default())?;
    let config = OeConfig {
        threshold: 0.05,
        ..OeConfig::default()
    };
    let run = enrich_ontology(&ontology, &concepts, &kb, Some(&lexicon), &config)?;

    for o in &run.ledger.outcomes {
        let detail = match &o.decision {
            Decision::Auto { entity_id } => entity_id.clone(),
            Decision::Review => format!("{} candidates", o.candidates.len()),
            Decision::NoMatch { fallback_terms } => fallback_terms.join(", "),
        };
        println!("{:<28} {:<9} {:.3}  {detail}", o.class_name, o.decision.label(), o.best_similarity());
    }
    println!("\n{:?}, {} mutations", run.ledger.histogram(), run.mutations.len());
    Ok(())
}
