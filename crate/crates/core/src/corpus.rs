//! Data-sheet ingestion, tokenization and corpus-wide term statistics.
//!
//! Documents enter as plain text. PDF files are handed to an external
//! converter command when one is configured; everything downstream works on
//! the extracted text only.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Joins the words of a multiword term, e.g. `magnetic_field`.
pub const NGRAM_SEPARATOR: char = '_';

pub const DEFAULT_MAX_ARITY: usize = 3;

static STOP_WORDS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    include_str!("../data/stopwords.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
});

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} is not valid UTF-8 text")]
    NotUnicode(PathBuf),
    #[error("document {0} is empty")]
    EmptyDocument(String),
    #[error("converter failed on {path}: {reason}")]
    Converter { path: PathBuf, reason: String },
    #[error("{0} is a PDF but no converter command is configured")]
    NoConverter(PathBuf),
    #[error("manifest {path} line {line}: {reason}")]
    Manifest {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("duplicate document id {0}")]
    DuplicateId(String),
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// One data sheet as plain text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub source_path: PathBuf,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

impl Document {
    /// Builds an in-memory document, normalizing line endings.
    pub fn from_text(
        doc_id: impl Into<String>,
        text: &str,
        category: Option<&str>,
    ) -> Result<Self, CorpusError> {
        let doc_id = doc_id.into();
        let text = normalize_line_endings(text);
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyDocument(doc_id));
        }
        Ok(Document {
            source_path: PathBuf::from(format!("{doc_id}.txt")),
            doc_id,
            text,
            category: category.map(str::to_owned),
        })
    }
}

/// External PDF-to-text command. `{input}` in the template is replaced by the
/// input path; the command's standard output is taken as the document text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Converter {
    pub template: String,
}

impl Converter {
    pub fn new(template: impl Into<String>) -> Self {
        Converter {
            template: template.into(),
        }
    }

    pub fn run(&self, input: &Path) -> Result<String, CorpusError> {
        let input_str = input.to_string_lossy();
        let mut parts = self
            .template
            .split_whitespace()
            .map(|p| p.replace("{input}", &input_str));
        let program = parts.next().ok_or_else(|| CorpusError::Converter {
            path: input.to_owned(),
            reason: "empty converter template".into(),
        })?;
        let output = Command::new(&program)
            .args(parts)
            .output()
            .map_err(|e| CorpusError::Converter {
                path: input.to_owned(),
                reason: format!("cannot start {program}: {e}"),
            })?;
        if !output.status.success() {
            return Err(CorpusError::Converter {
                path: input.to_owned(),
                reason: format!(
                    "{program} exited with {}: {}",
                    output.status,
                    String::from_utf8_lossy(&output.stderr).trim()
                ),
            });
        }
        String::from_utf8(output.stdout).map_err(|_| CorpusError::NotUnicode(input.to_owned()))
    }
}

pub fn normalize_line_endings(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Reads one data sheet. The document id is the file stem.
pub fn ingest(
    path: &Path,
    category: Option<&str>,
    converter: Option<&Converter>,
) -> Result<Document, CorpusError> {
    let doc_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    ingest_as(&doc_id, path, category, converter)
}

fn ingest_as(
    doc_id: &str,
    path: &Path,
    category: Option<&str>,
    converter: Option<&Converter>,
) -> Result<Document, CorpusError> {
    let is_pdf = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pdf"));
    let raw = if is_pdf {
        match converter {
            Some(c) => c.run(path)?,
            None => return Err(CorpusError::NoConverter(path.to_owned())),
        }
    } else {
        let bytes = fs::read(path).map_err(|source| CorpusError::Io {
            path: path.to_owned(),
            source,
        })?;
        String::from_utf8(bytes).map_err(|_| CorpusError::NotUnicode(path.to_owned()))?
    };
    let text = normalize_line_endings(&raw);
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyDocument(doc_id.to_owned()));
    }
    Ok(Document {
        doc_id: doc_id.to_owned(),
        source_path: path.to_owned(),
        text,
        category: category.map(str::to_owned),
    })
}

/// One line of a corpus manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub doc_id: String,
    pub path: PathBuf,
    pub category: Option<String>,
}

/// Parses a corpus manifest: tab-separated `doc_id`, `path`, optional
/// `category`; `#` starts a comment line. Relative paths resolve against the
/// manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut seen = BTreeSet::new();
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() < 2 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(CorpusError::Manifest {
                path: path.to_owned(),
                line: i + 1,
                reason: "expected doc_id<TAB>path[<TAB>category]".into(),
            });
        }
        if !seen.insert(fields[0].to_owned()) {
            return Err(CorpusError::DuplicateId(fields[0].to_owned()));
        }
        let doc_path = Path::new(fields[1]);
        entries.push(ManifestEntry {
            doc_id: fields[0].to_owned(),
            path: if doc_path.is_absolute() {
                doc_path.to_owned()
            } else {
                base.join(doc_path)
            },
            category: fields
                .get(2)
                .filter(|c| !c.is_empty())
                .map(|c| (*c).to_owned()),
        });
    }
    Ok(entries)
}

/// Loads every document listed in a manifest.
pub fn load_corpus(
    manifest: &Path,
    converter: Option<&Converter>,
) -> Result<Vec<Document>, CorpusError> {
    read_manifest(manifest)?
        .iter()
        .map(|e| ingest_as(&e.doc_id, &e.path, e.category.as_deref(), converter))
        .collect()
}

/// Decides which joined n-grams are real multiword terms and, optionally,
/// maps inflected words to a base form.
pub trait TermLexicon {
    fn is_multiword(&self, joined: &str) -> bool;

    fn base_form(&self, _word: &str) -> Option<String> {
        None
    }
}

/// Recognizes no multiword terms.
pub struct NoMultiwords;

impl TermLexicon for NoMultiwords {
    fn is_multiword(&self, _joined: &str) -> bool {
        false
    }
}

/// A term of the bag-of-words: `lemma` joins words with [`NGRAM_SEPARATOR`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Term {
    pub surface: String,
    pub lemma: String,
    pub arity: usize,
}

impl Term {
    pub fn from_lemma(lemma: &str) -> Self {
        Term {
            surface: lemma.replace(NGRAM_SEPARATOR, " "),
            lemma: lemma.to_owned(),
            arity: lemma.split(NGRAM_SEPARATOR).count(),
        }
    }
}

/// Term occurrence counts of one document, keyed by lemma.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BagOfWords {
    pub doc_id: String,
    pub counts: BTreeMap<String, usize>,
    /// Number of unigram tokens kept after filtering; the TF denominator.
    pub token_count: usize,
}

impl BagOfWords {
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, lemma: &str) -> usize {
        self.counts.get(lemma).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        self.counts.keys().map(|l| Term::from_lemma(l))
    }

    pub fn unigram_total(&self) -> usize {
        self.counts
            .iter()
            .filter(|(l, _)| !l.contains(NGRAM_SEPARATOR))
            .map(|(_, c)| c)
            .sum()
    }
}

pub fn is_stop_word(word: &str) -> bool {
    STOP_WORDS.contains(word)
}

/// A whitespace-delimited word with its surrounding punctuation stripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RawToken {
    pub word: String,
    /// Punctuation was stripped before or after the word, so no n-gram may
    /// cross this token's boundary on that side.
    pub leading_break: bool,
    pub trailing_break: bool,
}

pub(crate) fn raw_tokens(text: &str) -> Vec<RawToken> {
    text.split(|c: char| c.is_whitespace() || c == NGRAM_SEPARATOR)
        .filter(|piece| !piece.is_empty())
        .filter_map(|piece| {
            let trimmed = piece.trim_matches(|c: char| !c.is_alphanumeric());
            if trimmed.is_empty() {
                return None;
            }
            let start = piece.find(trimmed).unwrap_or(0);
            Some(RawToken {
                word: trimmed.to_lowercase(),
                leading_break: start > 0,
                trailing_break: start + trimmed.len() < piece.len(),
            })
        })
        .collect()
}

fn keep_unigram(word: &str) -> bool {
    word.chars().count() >= 2 && word.chars().any(char::is_alphabetic) && !is_stop_word(word)
}

/// Lowercased bag of words with stop words, purely numeric and one-character
/// tokens removed. N-grams up to `max_arity` are counted in addition to their
/// constituent unigrams when the lexicon recognizes them.
pub fn tokenize(doc: &Document, max_arity: usize, lexicon: &dyn TermLexicon) -> BagOfWords {
    tokenize_text(&doc.doc_id, &doc.text, max_arity, lexicon)
}

pub fn tokenize_text(
    doc_id: &str,
    text: &str,
    max_arity: usize,
    lexicon: &dyn TermLexicon,
) -> BagOfWords {
    let max_arity = max_arity.max(1);
    let tokens = raw_tokens(text);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut token_count = 0;

    for (i, tok) in tokens.iter().enumerate() {
        if keep_unigram(&tok.word) {
            let lemma = lexicon.base_form(&tok.word).unwrap_or_else(|| tok.word.clone());
            *counts.entry(lemma).or_default() += 1;
            token_count += 1;
        }
        let mut joined = tok.word.clone();
        for n in 2..=max_arity {
            let Some(next) = tokens.get(i + n - 1) else {
                break;
            };
            if tokens[i + n - 2].trailing_break || next.leading_break {
                break;
            }
            joined.push(NGRAM_SEPARATOR);
            joined.push_str(&next.word);
            if lexicon.is_multiword(&joined) {
                *counts.entry(joined.clone()).or_default() += 1;
            }
        }
    }
    BagOfWords {
        doc_id: doc_id.to_owned(),
        counts,
        token_count,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermStat {
    pub document_frequency: usize,
    pub total_frequency: usize,
}

/// Document and total frequencies over a corpus, in lemma order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub document_count: usize,
    pub terms: BTreeMap<String, TermStat>,
}

impl CorpusStats {
    pub fn df(&self, lemma: &str) -> usize {
        self.terms.get(lemma).map_or(0, |s| s.document_frequency)
    }
}

pub fn corpus_stats(bags: &[BagOfWords]) -> Result<CorpusStats, CorpusError> {
    if bags.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut terms: BTreeMap<String, TermStat> = BTreeMap::new();
    for bag in bags {
        for (lemma, &count) in &bag.counts {
            let stat = terms.entry(lemma.clone()).or_insert(TermStat {
                document_frequency: 0,
                total_frequency: 0,
            });
            stat.document_frequency += 1;
            stat.total_frequency += count;
        }
    }
    Ok(CorpusStats {
        document_count: bags.len(),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Multi(&'static [&'static str]);

    impl TermLexicon for Multi {
        fn is_multiword(&self, joined: &str) -> bool {
            self.0.contains(&joined)
        }
    }

    fn doc(text: &str) -> Document {
        Document::from_text("d", text, None).unwrap()
    }

    #[test]
    fn multiword_counted_alongside_unigrams() {
        let bag = tokenize(
            &doc("the magnetic field sensor"),
            3,
            &Multi(&["magnetic_field"]),
        );
        let expected: BTreeMap<String, usize> = [
            ("field", 1),
            ("magnetic", 1),
            ("magnetic_field", 1),
            ("sensor", 1),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect();
        assert_eq!(bag.counts, expected);
        assert_eq!(bag.token_count, 3);
    }

    #[test]
    fn stop_words_only_gives_empty_bag() {
        let bag = tokenize(&doc("the of and"), 3, &NoMultiwords);
        assert!(bag.is_empty());
    }

    #[test]
    fn numbers_and_short_tokens_dropped() {
        let bag = tokenize(&doc("Mass: 250 g, 3.5 W x"), 1, &NoMultiwords);
        assert_eq!(bag.counts.keys().collect::<Vec<_>>(), vec!["mass"]);
    }

    #[test]
    fn ngrams_do_not_cross_punctuation() {
        let bag = tokenize(&doc("magnetic. field"), 2, &Multi(&["magnetic_field"]));
        assert_eq!(bag.count("magnetic_field"), 0);
        let bag = tokenize(&doc("magnetic-field"), 2, &Multi(&["magnetic_field"]));
        assert_eq!(bag.count("magnetic_field"), 0);
    }

    #[test]
    fn multiword_with_stop_word_survives() {
        let bag = tokenize(&doc("period of time"), 3, &Multi(&["period_of_time"]));
        assert_eq!(bag.count("period_of_time"), 1);
        assert_eq!(bag.count("of"), 0);
    }

    #[test]
    fn empty_text_is_rejected() {
        assert!(matches!(
            Document::from_text("e", " \n\t", None),
            Err(CorpusError::EmptyDocument(_))
        ));
    }

    #[test]
    fn df_counts_documents() {
        let a = tokenize_text("a", "power supply", 1, &NoMultiwords);
        let b = tokenize_text("b", "power power budget", 1, &NoMultiwords);
        let stats = corpus_stats(&[a, b]).unwrap();
        assert_eq!(stats.df("power"), 2);
        assert_eq!(stats.terms["power"].total_frequency, 3);
        assert_eq!(stats.df("budget"), 1);
        assert!(matches!(corpus_stats(&[]), Err(CorpusError::EmptyCorpus)));
    }

    #[test]
    fn disjoint_bags_have_unit_df() {
        let a = tokenize_text("a", "alpha beta", 1, &NoMultiwords);
        let b = tokenize_text("b", "gamma delta", 1, &NoMultiwords);
        let stats = corpus_stats(&[a, b]).unwrap();
        assert!(stats.terms.values().all(|s| s.document_frequency == 1));
    }

    fn words() -> impl Strategy<Value = String> {
        prop::collection::vec(
            prop::sample::select(vec![
                "the", "magnetic", "field", "Sensor.", "of", "42", "star", "tracker", "a",
                "Mass:", "power", "5V", "-", "x",
            ]),
            0..30,
        )
        .prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn unigram_total_bounded_by_whitespace_tokens(text in words()) {
            let lex = Multi(&["magnetic_field", "star_tracker"]);
            let bag = tokenize_text("p", &text, 3, &lex);
            prop_assert!(bag.unigram_total() <= text.split_whitespace().count());
            prop_assert!(bag.counts.values().all(|&c| c >= 1));
        }

        #[test]
        fn tokenizing_own_vocabulary_is_idempotent(text in words()) {
            let lex = Multi(&["magnetic_field", "star_tracker"]);
            let bag = tokenize_text("p", &text, 3, &lex);
            let unigrams: Vec<&String> =
                bag.counts.keys().filter(|l| !l.contains(NGRAM_SEPARATOR)).collect();
            let rejoined = unigrams.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ");
            let again = tokenize_text("p", &rejoined, 1, &lex);
            let again_set: Vec<&String> = again.counts.keys().collect();
            prop_assert_eq!(unigrams, again_set);
        }

        #[test]
        fn stats_permutation_invariant(a in words(), b in words(), c in words()) {
            let bags: Vec<BagOfWords> = [&a, &b, &c]
                .iter()
                .enumerate()
                .map(|(i, t)| tokenize_text(&i.to_string(), t, 2, &NoMultiwords))
                .collect();
            let mut rev = bags.clone();
            rev.reverse();
            prop_assert_eq!(corpus_stats(&bags).unwrap(), corpus_stats(&rev).unwrap());
        }
    }
}
