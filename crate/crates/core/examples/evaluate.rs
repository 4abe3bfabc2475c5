//! Scores extraction against the fixture gold labels, once with class names
//! only and once with the keywords of an automatically enriched ontology.

use std::path::Path;

use contron::corpus::load_corpus;
use contron::dke::{extract_domain_knowledge, DkeConfig};
use contron::eval::{compute_metrics, score_pairs, Gold};
use contron::ie::{ExtractOptions, Extractor, PairRecord};
use contron::kb::FixtureKb;
use contron::lexicon::Lexicon;
use contron::oe::{enrich_ontology, OeConfig};
use contron::ontology::Ontology;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let lexicon = Lexicon::load(&fixtures.join("lexicon"))?;
    let kb = FixtureKb::load(&fixtures.join("kb/entities.json"))?;
    let docs = load_corpus(&fixtures.join("corpus/star_tracker/manifest.tsv"), None)?;
    let gold = Gold::load(&fixtures.join("corpus/star_tracker/gold.tsv"))?;

    let concepts = extract_domain_knowledge(&docs, &lexicon, &DkeConfig::default())?;
    let config = OeConfig {
        threshold: 0.05,
        ..OeConfig::default()
    };
    let seed = Ontology::load(&fixtures.join("ontology/core.json"))?;
    let enriched = enrich_ontology(&seed, &concepts, &kb, Some(&lexicon), &config)?.ontology;

    for baseline in [true, false] {
        let ex = Extractor::new(ExtractOptions {
            baseline,
            ..ExtractOptions::default()
        });
        let pairs: Vec<PairRecord> = docs
            .iter()
            .flat_map(|d| ex.extract_information(&enriched, d).pairs)
            .map(|p| PairRecord::from(&p))
            .collect();
        let counts = score_pairs(&pairs, &gold);
        let m = compute_metrics(counts, 1.0)?;
        println!(
            "{:<9} tp={:<3} fp={:<3} fn={:<3} P={:.2} R={:.2} F={:.2}",
            if baseline { "baseline" } else { "enriched" },
            counts.tp,
            counts.fp,
            counts.fn_,
            m.precision,
            m.recall,
            m.f_measure
        );
    }
    Ok(())
}
