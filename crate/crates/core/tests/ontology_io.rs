mod common;

use contron::ontology::rdf::import_turtle;
use contron::ontology::store::OntologyStore;
use contron::ontology::{Mutation, Ontology, ReviewStatus};

use common::*;

#[test]
fn fixture_ontologies_have_the_expected_intrinsic_classes() {
    let core = ontology("core");
    assert_eq!(core.intrinsic_classes().count(), 26);
    let st = ontology("star_tracker");
    assert_eq!(st.intrinsic_classes().count(), 29);
    assert_eq!(st.imports, vec!["core".to_string()]);
    assert!(st.classes.iter().any(|c| !c.intrinsic && c.class_id == "core:Mass"));
}

#[test]
fn fixture_ontology_survives_save_and_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("core.json");
    let core = ontology("core");
    core.save(&path).unwrap();
    let first = std::fs::read(&path).unwrap();
    let back = Ontology::load(&path).unwrap();
    assert_eq!(back, core);
    back.save(&path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);
}

#[test]
fn turtle_excerpt_imports() {
    let text = std::fs::read_to_string(fixtures().join("rdf/star_tracker_excerpt.ttl")).unwrap();
    let report = import_turtle(&text, Some("st-excerpt")).unwrap();
    let o = &report.ontology;
    assert_eq!(o.ontology_id, "st-excerpt");
    assert_eq!(o.imports, vec!["http://example.org/onto/core".to_string()]);
    let by_name = |n: &str| o.classes.iter().find(|c| c.name == n).unwrap();

    let fov = by_name("Field of View");
    assert!(fov.intrinsic);
    assert_eq!(fov.description.as_deref(), Some("Angular extent of the sky seen by the sensor."));

    let sun = by_name("Sun Exclusion Angle");
    assert_eq!(
        sun.parent.as_deref(),
        Some("http://example.org/onto/star_tracker#ExclusionAngle")
    );
    assert!(sun.labels.is_empty(), "the German label is not English");

    assert_eq!(by_name("Exclusion Angle").alt_labels, vec!["exclusion half-angle"]);
    assert!(by_name("Update Rate").intrinsic);
    assert!(!by_name("Mass").intrinsic);
    // the German label and the seeAlso link
    assert_eq!(report.skipped, 2);
}

#[test]
fn store_replays_an_enrichment_history() {
    let dir = tempfile::tempdir().unwrap();
    let kb = kb();
    let mass = kb.entities().iter().find(|e| e.label == "mass").unwrap().clone();
    let mut store = OntologyStore::create(dir.path(), ontology("core")).unwrap();
    store
        .commit(
            Mutation::Enrich {
                class_id: "core:Mass".into(),
                entity: mass.clone(),
                mode: contron::ontology::EnrichMode::Auto,
            },
            Some("oe"),
        )
        .unwrap();
    store
        .commit(
            Mutation::Disjoint {
                class_id: "core:Mass".into(),
                entity_ids: vec![mass.entity_id.clone()],
            },
            Some("expert"),
        )
        .unwrap();
    assert_eq!(store.current().version, 2);

    let reopened = OntologyStore::open(dir.path()).unwrap();
    let v1 = reopened.at_version(1).unwrap();
    let c = v1.class("core:Mass").unwrap();
    assert_eq!(c.matched_entity.as_deref(), Some(mass.entity_id.as_str()));
    assert!(c.alt_labels.contains(&"weight".to_string()));
    let now = reopened.current().class("core:Mass").unwrap();
    assert_eq!(now.matched_entity, None);
    assert!(now.alt_labels.is_empty());
    assert!(now.is_disjoint(&mass.entity_id));
    assert_ne!(now.review_status, ReviewStatus::AutoEnriched);
    assert_eq!(reopened.history().len(), 2);
}
