//! Offline knowledge base lookups served from the shipped response cache.
//! A cold query fails instead of reaching the network.

use std::path::Path;

use contron::kb::wikidata::{WikidataClient, WikidataConfig};
use contron::kb::KnowledgeBase;

fn main() {
    let client = WikidataClient::new(WikidataConfig {
        cache_dir: Some(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/kb/cache")),
        offline: true,
        ..WikidataConfig::default()
    });
    for query in ["Mass", "Hardware Interface", "Not In The Cache"] {
        match client.search_entities(query, 10) {
            Ok(found) => {
                println!("{query}:");
                for e in found {
                    println!("  {} {:<24} {}", e.entity_id, e.label, e.category_labels.join(", "));
                }
            }
            Err(e) => println!("{query}: {e}"),
        }
    }
}
