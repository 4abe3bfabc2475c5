//! Property-value pairs and highlight annotations for one data sheet.

use std::path::Path;

use contron::corpus::load_corpus;
use contron::ie::{ExtractOptions, Extractor};
use contron::ontology::Ontology;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let ontology = Ontology::load(&fixtures.join("ontology/core.json"))?;
    let docs = load_corpus(&fixtures.join("corpus/star_tracker/manifest.tsv"), None)?;

    let out = Extractor::new(ExtractOptions::default()).extract_information(&ontology, &docs[0]);
    for p in &out.pairs {
        let unit = p.numeric.as_ref().and_then(|n| n.unit.as_deref()).unwrap_or("");
        println!("{:<26} {:<16} {:<32} {unit}", p.hit.class_id, p.method.as_str(), p.value_text);
    }
    if let Some(a) = out.annotations.first() {
        println!("\n{}", a.reason);
    }
    Ok(())
}
