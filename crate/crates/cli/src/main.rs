use std::io::Write;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use contron::corpus::{load_corpus, Document};
use contron::dke::{extract_domain_knowledge, read_concepts, write_concepts, DkeConfig};
use contron::eval::{compute_metrics, parse_enrichment_gold, score_enrichment, score_pairs, EvalCounts, Gold};
use contron::ie::{pairs_tsv, read_pairs, write_annotations, ExtractOptions, Extractor, PairRecord};
use contron::kb::wikidata::{WikidataClient, WikidataConfig, DEFAULT_ENDPOINT};
use contron::kb::{FixtureKb, KnowledgeBase};
use contron::lexicon::Lexicon;
use contron::oe::{enrich_ontology, OeConfig, DEFAULT_THRESHOLD};
use contron::ontology::rdf::import_turtle;
use contron::ontology::Ontology;
use contron_service::{AppState, KbSource, PipelineConfig, CONFIG_FILE};

#[derive(Parser)]
#[command(name = "contron", version, about = "Ontology enrichment and property-value extraction for data sheets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract domain concepts from a corpus
    Dke {
        /// Manifest TSV with doc_id, path and optional category columns
        #[arg(long)]
        corpus: PathBuf,
        /// Directory of WordNet-format data and index files
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long, default_value_t = DkeConfig::default().top_k)]
        top_k: usize,
        #[arg(long, default_value_t = 0.0)]
        min_score: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Match ontology classes against the knowledge base
    Enrich {
        #[arg(long)]
        ontology: PathBuf,
        /// Concepts written by `contron dke`
        #[arg(long)]
        concepts: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Lexicon used for fallback synonyms of unmatched classes
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[command(flatten)]
        kb: KbArgs,
        /// Enriched ontology; defaults to overwriting --ontology
        #[arg(long)]
        out: Option<PathBuf>,
        /// Outcome ledger, one record per class
        #[arg(long, default_value = "ledger.json")]
        ledger: PathBuf,
    },
    /// Extract property-value pairs from documents
    Extract {
        #[arg(long)]
        ontology: PathBuf,
        /// A plain-text data sheet; repeatable
        #[arg(long)]
        doc: Vec<PathBuf>,
        /// Manifest of a whole corpus, instead of or besides --doc
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Search class names only, ignoring enrichment-derived keywords
        #[arg(long)]
        baseline_text_search: bool,
        /// Pairs TSV; standard output when absent
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for one annotation file per document
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Score extracted pairs, or an enriched ontology, against gold labels
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, conflicts_with = "ontology", required_unless_present = "ontology")]
        pairs: Option<PathBuf>,
        /// Score class matches instead; --gold then lists class and entity
        #[arg(long)]
        ontology: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Serve the review queue and pipeline runs over HTTP
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Holds pipeline.json and the stores
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        bind_all: bool,
        /// Require `Authorization: Bearer <token>` on every request
        #[arg(long, env = "CONTRON_TOKEN", hide_env_values = true)]
        token: Option<String>,
        #[arg(long, env = "CONTRON_KB_ENDPOINT")]
        kb_endpoint: Option<String>,
        #[arg(long, env = "CONTRON_KB_CACHE")]
        kb_cache: Option<PathBuf>,
        #[arg(long, env = "CONTRON_OFFLINE")]
        offline: bool,
    },
    /// Convert a Turtle ontology into the JSON ontology format
    ImportRdf {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the declared ontology IRI
        #[arg(long)]
        ontology_id: Option<String>,
    },
}

#[derive(Args)]
struct KbArgs {
    /// Entity JSON file searched instead of a live endpoint
    #[arg(long, conflicts_with_all = ["kb_endpoint", "kb_cache"])]
    kb_fixture: Option<PathBuf>,
    #[arg(long, env = "CONTRON_KB_ENDPOINT", default_value = DEFAULT_ENDPOINT)]
    kb_endpoint: String,
    #[arg(long, env = "CONTRON_KB_CACHE")]
    kb_cache: Option<PathBuf>,
    /// Answer from the cache only
    #[arg(long, env = "CONTRON_OFFLINE")]
    offline: bool,
}

impl KbArgs {
    fn build(&self) -> Result<Box<dyn KnowledgeBase>> {
        if let Some(path) = &self.kb_fixture {
            return Ok(Box::new(FixtureKb::load(path)?));
        }
        if self.offline && self.kb_cache.is_none() {
            bail!("--offline needs --kb-cache");
        }
        Ok(Box::new(WikidataClient::new(WikidataConfig {
            endpoint: self.kb_endpoint.clone(),
            cache_dir: self.kb_cache.clone(),
            offline: self.offline,
            ..WikidataConfig::default()
        })))
    }
}

fn read_docs(docs: &[PathBuf], corpus: Option<&Path>) -> Result<Vec<Document>> {
    let mut out = match corpus {
        Some(m) => load_corpus(m, None)?,
        None => Vec::new(),
    };
    for path in docs {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let mut doc = Document::from_text(id, &text, None)?;
        doc.source_path = path.clone();
        out.push(doc);
    }
    if out.is_empty() {
        bail!("no documents given; use --doc or --corpus");
    }
    Ok(out)
}

fn print_metrics(counts: EvalCounts, beta: f64) -> Result<()> {
    let m = compute_metrics(counts, beta)?;
    println!("tp\t{}\nfp\t{}\nfn\t{}", counts.tp, counts.fp, counts.fn_);
    println!("precision\t{:.4}\nrecall\t{:.4}\nf_measure\t{:.4}", m.precision, m.recall, m.f_measure);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Dke {
            corpus,
            lexicon,
            top_k,
            min_score,
            out,
        } => {
            let lexicon = Lexicon::load(&lexicon)?;
            let docs = load_corpus(&corpus, None)?;
            let config = DkeConfig {
                top_k,
                min_score,
                ..DkeConfig::default()
            };
            let concepts = extract_domain_knowledge(&docs, &lexicon, &config)?;
            write_concepts(&out, &concepts)?;
            eprintln!("{} concepts from {} documents", concepts.len(), docs.len());
        }
        Command::Enrich {
            ontology,
            concepts,
            threshold,
            lexicon,
            kb,
            out,
            ledger,
        } => {
            let seed = Ontology::load(&ontology)?;
            let concepts = read_concepts(&concepts)?;
            let lexicon = lexicon.as_deref().map(Lexicon::load).transpose()?;
            let config = OeConfig {
                threshold,
                ..OeConfig::default()
            };
            let run = enrich_ontology(&seed, &concepts, kb.build()?.as_ref(), lexicon.as_ref(), &config)?;
            run.ontology.save(out.as_deref().unwrap_or(&ontology))?;
            run.ledger.write(&ledger)?;
            eprintln!("{:?}; ledger in {}", run.ledger.histogram(), ledger.display());
        }
        Command::Extract {
            ontology,
            doc,
            corpus,
            baseline_text_search,
            out,
            annotations,
        } => {
            let ontology = Ontology::load(&ontology)?;
            let docs = read_docs(&doc, corpus.as_deref())?;
            let ex = Extractor::new(ExtractOptions {
                baseline: baseline_text_search,
                ..ExtractOptions::default()
            });
            let mut records = Vec::new();
            for d in &docs {
                let result = ex.extract_information(&ontology, d);
                if let Some(dir) = &annotations {
                    write_annotations(&dir.join(format!("{}.json", d.doc_id)), &d.doc_id, &result.annotations)?;
                }
                records.extend(result.pairs.iter().map(PairRecord::from));
            }
            let tsv = pairs_tsv(&records)?;
            match out {
                Some(path) => {
                    contron::io::write_atomic(&path, &tsv)?;
                    eprintln!("{} pairs from {} documents", records.len(), docs.len());
                }
                None => std::io::stdout().write_all(tsv.as_bytes())?,
            }
        }
        Command::Eval {
            gold,
            pairs,
            ontology,
            beta,
        } => match (pairs, ontology) {
            (Some(pairs), _) => print_metrics(score_pairs(&read_pairs(&pairs)?, &Gold::load(&gold)?), beta)?,
            (None, Some(ontology)) => {
                let text = std::fs::read_to_string(&gold).with_context(|| format!("reading {}", gold.display()))?;
                let gold = parse_enrichment_gold(&text, &gold.display().to_string())?;
                print_metrics(score_enrichment(&Ontology::load(&ontology)?, &gold), beta)?;
            }
            (None, None) => unreachable!("clap requires --pairs or --ontology"),
        },
        Command::Serve {
            port,
            data_dir,
            bind_all,
            token,
            kb_endpoint,
            kb_cache,
            offline,
        } => {
            let mut config = PipelineConfig::read(&data_dir.join(CONFIG_FILE))?;
            if let KbSource::Wikidata {
                endpoint,
                cache_dir,
                offline: off,
            } = &mut config.kb
            {
                if let Some(e) = kb_endpoint {
                    *endpoint = e;
                }
                if kb_cache.is_some() {
                    *cache_dir = kb_cache;
                }
                *off |= offline;
            }
            let state = AppState::open(&data_dir, config.load()?, token)?;
            let ip = if bind_all { Ipv4Addr::UNSPECIFIED } else { Ipv4Addr::LOCALHOST };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(SocketAddr::from((ip, port))).await?;
                contron_service::serve(listener, state).await
            })?;
        }
        Command::ImportRdf {
            input,
            out,
            ontology_id,
        } => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let report = import_turtle(&text, ontology_id.as_deref())?;
            report.ontology.save(&out)?;
            eprintln!(
                "{} classes, {} triples skipped",
                report.ontology.classes.len(),
                report.skipped
            );
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    run(Cli::parse())
}
