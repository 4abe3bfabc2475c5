//! Wu-Palmer similarity over the bundled lexicon.

use std::path::Path;

use contron::lexicon::{Lexicon, SynsetId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lexicon = Lexicon::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/lexicon"))?;
    let pairs = [
        ("star_tracker.n.01", "camera.n.01"),
        ("satellite.n.01", "camera.n.01"),
        ("outer_space.n.01", "satellite.n.01"),
        ("mass.n.01", "lifetime.n.01"),
    ];
    for (a, b) in pairs {
        let (a, b): (SynsetId, SynsetId) = (a.parse()?, b.parse()?);
        let lcs = lexicon
            .lowest_common_subsumer(&a, &b)
            .map(|s| s.id.to_string())
            .unwrap_or_else(|| "-".into());
        println!("{a:<20} {b:<16} {:.3}  via {lcs}", lexicon.wup_similarity(&a, &b));
    }
    Ok(())
}
