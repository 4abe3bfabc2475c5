//! Domain concepts of the bundled star tracker data sheets.
//!
//! ```text
//! cargo run --example domain_knowledge
//! ```

use std::path::Path;

use contron::corpus::load_corpus;
use contron::dke::{extract_domain_knowledge, rank_topics, DkeConfig};
use contron::lexicon::Lexicon;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let lexicon = Lexicon::load(&fixtures.join("lexicon"))?;
    let docs = load_corpus(&fixtures.join("corpus/star_tracker/manifest.tsv"), None)?;
    let config = DkeConfig::default();

    println!("top topics over {} documents:", docs.len());
    for t in rank_topics(&docs, &lexicon, &config)?.iter().take(8) {
        println!("  {:<16} {:.4}", t.term.lemma, t.score);
    }

    println!("\nchosen senses:");
    for c in extract_domain_knowledge(&docs, &lexicon, &config)? {
        println!("  {:<16} {:<20} {:.3}", c.topic, c.synset.to_string(), c.accumulated_weight);
    }
    Ok(())
}
