//! Turtle import of an OWL/SKOS ontology excerpt.

use std::path::Path;

use contron::ontology::rdf::import_turtle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/rdf/star_tracker_excerpt.ttl");
    let report = import_turtle(&std::fs::read_to_string(&path)?, None)?;
    let o = &report.ontology;
    println!("{} imports {:?}, {} triples skipped", o.ontology_id, o.imports, report.skipped);
    for c in &o.classes {
        println!(
            "  {:<24} intrinsic={:<5} alt={:?} parent={}",
            c.name,
            c.intrinsic,
            c.alt_labels,
            c.parent.as_deref().unwrap_or("-")
        );
    }
    Ok(())
}
