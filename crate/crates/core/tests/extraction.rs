mod common;

use std::collections::BTreeSet;

use contron::corpus::Document;
use contron::eval::{compute_metrics, score_pairs, Gold};
use contron::ie::{
    read_annotations, read_pairs, write_annotations, write_pairs, Extractor, ExtractOptions,
    Method, PairRecord,
};
use contron::ontology::{Ontology, OntologyClass};
use proptest::prelude::*;

use common::*;

fn record(doc: &str, class: &str, value: &str, method: Method) -> PairRecord {
    PairRecord {
        doc_id: doc.into(),
        class_id: class.into(),
        keyword: "k".into(),
        value: value.into(),
        magnitude: None,
        unit: None,
        method,
        start: 0,
        end: 1,
    }
}

/// Counts by brute force: every distinct scored extraction is checked
/// against every distinct gold row.
fn oracle_counts(pairs: &[PairRecord], gold: &[(String, String, String)]) -> (usize, usize, usize) {
    let norm = |v: &str| {
        let v = v.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        v.trim_end_matches(['.', ',', ';', ':']).to_string()
    };
    let mut extracted: Vec<(String, String, String)> = Vec::new();
    for p in pairs.iter().filter(|p| p.method != Method::ManualPending) {
        let t = (p.doc_id.clone(), p.class_id.clone(), norm(&p.value));
        if !extracted.contains(&t) {
            extracted.push(t);
        }
    }
    let mut expected: Vec<(String, String, String)> = Vec::new();
    for (d, c, v) in gold {
        let t = (d.clone(), c.clone(), norm(v));
        if !expected.contains(&t) {
            expected.push(t);
        }
    }
    let tp = extracted.iter().filter(|t| expected.contains(t)).count();
    (tp, extracted.len() - tp, expected.len() - tp)
}

const VALUES: [&str; 6] = ["5 kg", "5 KG", "5  kg.", "10 W", "10 w;", "RS-422"];

fn row() -> impl Strategy<Value = (usize, usize, usize)> {
    (0..2usize, 0..3usize, 0..VALUES.len())
}

proptest! {
    #[test]
    fn scoring_matches_brute_force(
        pairs in prop::collection::vec((row(), any::<bool>()), 0..12),
        gold in prop::collection::vec(row(), 0..8),
    ) {
        let name = |(d, c, v): (usize, usize, usize)| {
            (format!("d{d}"), format!("c{c}"), VALUES[v].to_string())
        };
        let records: Vec<PairRecord> = pairs
            .iter()
            .map(|(r, manual)| {
                let (d, c, v) = name(*r);
                let m = if *manual { Method::ManualPending } else { Method::NumericWindow };
                record(&d, &c, &v, m)
            })
            .collect();
        let rows: Vec<_> = gold.iter().map(|r| name(*r)).collect();
        let tsv: String = rows.iter().map(|(d, c, v)| format!("{d}\t{c}\t{v}\n")).collect();
        let got = score_pairs(&records, &Gold::parse(&tsv, "gen").unwrap());
        prop_assert_eq!((got.tp, got.fp, got.fn_), oracle_counts(&records, &rows));
    }
}

#[test]
fn prose_without_a_number_is_left_for_manual_review() {
    let mut o = Ontology::new("t");
    o.classes.push(OntologyClass::new("core:Lifetime", "Lifetime"));
    let doc = Document::from_text("p", "Lifetime is fifteen years in GEO.", None).unwrap();
    let ex = Extractor::new(ExtractOptions::default()).extract_information(&o, &doc);
    assert_eq!(ex.pairs.len(), 1);
    assert_eq!(ex.pairs[0].method, Method::ManualPending);
    assert!(ex.pairs[0].numeric.is_none());
    // not scored, so it is neither a true nor a false positive
    let counts = score_pairs(
        &[PairRecord::from(&ex.pairs[0])],
        &Gold::parse("p\tcore:Lifetime\tfifteen years\n", "inline").unwrap(),
    );
    assert_eq!((counts.tp, counts.fp, counts.fn_), (0, 0, 1));
}

#[test]
fn first_data_sheet_yields_its_gold_values() {
    let dir = tempfile::tempdir().unwrap();
    let (_, enriched) = simulate_iterations(
        dir.path(),
        ontology("core"),
        &enrichment_gold("core"),
        &kb(),
        FIXTURE_THRESHOLD,
    );
    let records = extract_all(&enriched, false);
    let st1: BTreeSet<(&str, &str)> = records
        .iter()
        .filter(|r| r.doc_id == "st1")
        .map(|r| (r.class_id.as_str(), r.value.as_str()))
        .collect();
    for want in [
        ("core:Lifetime", "5 Years"),
        ("core:Mass", "250 g"),
        ("core:Dimension", "50 x 50 x 90 mm"),
    ] {
        assert!(st1.contains(&want), "{want:?} missing from {st1:?}");
    }
    // the list pattern captures the whole line of the hit
    let list = records
        .iter()
        .find(|r| r.doc_id == "st1" && r.class_id == "core:HardwareInterface")
        .unwrap();
    assert_eq!(list.method, Method::ListPattern);
    assert_eq!(list.value, "Hardware interface: RS-422");
}

#[test]
fn baseline_misses_aliased_rows_that_enrichment_finds() {
    // st2 writes "Weight" for mass; only the enriched alias finds it
    let dir = tempfile::tempdir().unwrap();
    let (_, enriched) = simulate_iterations(
        dir.path(),
        ontology("core"),
        &enrichment_gold("core"),
        &kb(),
        FIXTURE_THRESHOLD,
    );
    let hit = |records: &[PairRecord]| {
        records
            .iter()
            .any(|r| r.doc_id == "st2" && r.class_id == "core:Mass" && r.keyword == "weight")
    };
    assert!(!hit(&extract_all(&enriched, true)));
    assert!(hit(&extract_all(&enriched, false)));
}

#[test]
fn whole_corpus_scores_within_unit_range() {
    let counts = score_pairs(&extract_all(&ontology("core"), true), &gold());
    let m = compute_metrics(counts, 1.0).unwrap();
    for v in [m.precision, m.recall, m.f_measure] {
        assert!((0.0..=1.0).contains(&v));
    }
    assert_eq!(counts.tp + counts.fn_, gold().len());
}

#[test]
fn pairs_and_annotations_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let records = extract_all(&ontology("core"), false);
    let path = dir.path().join("pairs.tsv");
    write_pairs(&path, &records).unwrap();
    assert_eq!(read_pairs(&path).unwrap(), records);

    let doc = &star_tracker_docs()[0];
    let ex = Extractor::new(ExtractOptions::default()).extract_information(&ontology("core"), doc);
    let path = dir.path().join("st1.json");
    write_annotations(&path, &doc.doc_id, &ex.annotations).unwrap();
    let back = read_annotations(&path).unwrap();
    assert_eq!(back, ex.annotations);
    let chars: Vec<char> = doc.text.chars().collect();
    for a in &back {
        assert_eq!(a.span.text(&chars), a.text);
        assert!(a.reason.contains(&a.class_name));
    }
}
