use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn contron(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_contron"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("CONTRON_KB_ENDPOINT")
        .env_remove("CONTRON_KB_CACHE")
        .env_remove("CONTRON_OFFLINE")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "contron {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn metric(stdout: &[u8], name: &str) -> f64 {
    String::from_utf8_lossy(stdout)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{name}\t"))?.parse().ok())
        .unwrap()
}

#[test]
fn full_pipeline_through_the_command_line() {
    let f = fixtures();
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path();
    let concepts = work.join("concepts.json");
    let enriched = work.join("enriched.json");
    let ledger = work.join("ledger.json");

    contron(&[
        "dke",
        "--corpus",
        s(&f.join("corpus/star_tracker/manifest.tsv")),
        "--lexicon",
        s(&f.join("lexicon")),
        "--out",
        s(&concepts),
    ]);
    contron(&[
        "enrich",
        "--ontology",
        s(&f.join("ontology/core.json")),
        "--concepts",
        s(&concepts),
        "--threshold",
        "0.05",
        "--lexicon",
        s(&f.join("lexicon")),
        "--kb-fixture",
        s(&f.join("kb/entities.json")),
        "--out",
        s(&enriched),
        "--ledger",
        s(&ledger),
    ]);
    let ledger_text = std::fs::read_to_string(&ledger).unwrap();
    assert!(ledger_text.contains("\"kind\": \"auto\""));

    let manifest = f.join("corpus/star_tracker/manifest.tsv");
    let mut f_scores = Vec::new();
    for baseline in [true, false] {
        let pairs = work.join(format!("pairs-{baseline}.tsv"));
        let mut args = vec![
            "extract",
            "--ontology",
            s(&enriched),
            "--corpus",
            s(&manifest),
            "--out",
            s(&pairs),
        ];
        if baseline {
            args.push("--baseline-text-search");
        }
        contron(&args);
        let out = contron(&[
            "eval",
            "--gold",
            s(&f.join("corpus/star_tracker/gold.tsv")),
            "--pairs",
            s(&pairs),
            "--beta",
            "1",
        ]);
        f_scores.push(metric(&out.stdout, "f_measure"));
    }
    assert!(f_scores.iter().all(|f| (0.0..=1.0).contains(f)));

    let out = contron(&[
        "eval",
        "--gold",
        s(&f.join("ontology/core_enrichment_gold.tsv")),
        "--ontology",
        s(&enriched),
    ]);
    assert!(metric(&out.stdout, "precision") > 0.0);
}

#[test]
fn single_document_extraction_writes_annotations() {
    let f = fixtures();
    let dir = tempfile::tempdir().unwrap();
    let out = contron(&[
        "extract",
        "--ontology",
        s(&f.join("ontology/core.json")),
        "--doc",
        s(&f.join("corpus/star_tracker/st1.txt")),
        "--annotations",
        s(dir.path()),
    ]);
    let tsv = String::from_utf8(out.stdout).unwrap();
    assert!(tsv.starts_with("doc_id\tclass_id\t"));
    assert!(tsv.contains("st1\tcore:Mass\tmass\t250 g"));
    assert!(dir.path().join("st1.json").exists());
}

#[test]
fn turtle_import_writes_a_loadable_ontology() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("st.json");
    contron(&[
        "import-rdf",
        s(&fixtures().join("rdf/star_tracker_excerpt.ttl")),
        "--out",
        s(&out),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("Sun Exclusion Angle"));
}

#[test]
fn offline_without_a_cache_is_refused() {
    let out = Command::new(env!("CARGO_BIN_EXE_contron"))
        .args(["enrich", "--ontology", "x.json", "--concepts", "c.json", "--offline"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
