//! Information extraction: keyword hits, adjacent values and highlight
//! annotations for each ontology class in a document.
//!
//! Spans are half-open ranges of `char` indices into the document text.

pub mod numeric;
pub mod patterns;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::io::{to_pretty_json, write_atomic};
use crate::ontology::{normalize_keyword, Ontology};
use crate::Error;

pub use numeric::{parse_number_prefix, UnitInfo, UnitLexicon};
pub use patterns::CoarseTag;

use numeric::{scan_value, tokenize, Token};
use patterns::{list_pattern, sentence_pattern, tag_span};

pub const DEFAULT_WINDOW_AFTER: usize = 10;
pub const DEFAULT_WINDOW_BEFORE: usize = 5;
/// Shorter keywords are ignored.
pub const MIN_KEYWORD_CHARS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn union(&self, other: &Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }

    pub fn text(&self, chars: &[char]) -> String {
        chars[self.start..self.end].iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordHit {
    pub doc_id: String,
    pub class_id: String,
    pub keyword: String,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    NumericWindow,
    SentencePattern,
    ListPattern,
    ManualPending,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::NumericWindow => "numeric_window",
            Method::SentencePattern => "sentence_pattern",
            Method::ListPattern => "list_pattern",
            Method::ManualPending => "manual_pending",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "numeric_window" => Method::NumericWindow,
            "sentence_pattern" => Method::SentencePattern,
            "list_pattern" => Method::ListPattern,
            "manual_pending" => Method::ManualPending,
            other => return Err(format!("unknown extraction method {other:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericValue {
    pub magnitude: f64,
    /// Unit as written in the document.
    pub unit: Option<String>,
    pub canonical_unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedPair {
    pub hit: KeywordHit,
    pub value_text: String,
    pub value_span: Option<Span>,
    pub numeric: Option<NumericValue>,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ExtractedPair {
    /// Keyword and value together.
    pub fn span(&self) -> Span {
        match self.value_span {
            Some(v) => self.hit.span.union(&v),
            None => self.hit.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub doc_id: String,
    pub class_id: String,
    pub class_name: String,
    pub span: Span,
    pub text: String,
    pub reason: String,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractOptions {
    pub window_after: usize,
    pub window_before: usize,
    /// Search class names only, ignoring enrichment-derived keywords.
    pub baseline: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            window_after: DEFAULT_WINDOW_AFTER,
            window_before: DEFAULT_WINDOW_BEFORE,
            baseline: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Extraction {
    pub pairs: Vec<ExtractedPair>,
    pub annotations: Vec<Annotation>,
}

/// Search keywords per class, in ontology order.
pub fn keywords_by_class(ontology: &Ontology, baseline: bool) -> Vec<(String, Vec<String>)> {
    ontology
        .classes
        .iter()
        .map(|c| {
            let kws = if baseline {
                vec![normalize_keyword(&c.name)]
            } else {
                c.keywords()
            };
            (c.class_id.clone(), kws)
        })
        .collect()
}

fn fold(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

/// End of a match of `kw` at `pos`; a space in the keyword matches any run
/// of whitespace.
fn match_at(chars: &[char], pos: usize, kw: &[char]) -> Option<usize> {
    let mut i = pos;
    for &k in kw {
        if k == ' ' {
            if i >= chars.len() || !chars[i].is_whitespace() {
                return None;
            }
            while i < chars.len() && chars[i].is_whitespace() {
                i += 1;
            }
        } else {
            if i >= chars.len() || fold(chars[i]) != k {
                return None;
            }
            i += 1;
        }
    }
    Some(i)
}

fn hits_in(chars: &[char], doc_id: &str, class_id: &str, keywords: &[String]) -> Vec<KeywordHit> {
    let mut found = Vec::new();
    for kw in keywords {
        let folded: Vec<char> = normalize_keyword(kw).chars().map(fold).collect();
        if folded.len() < MIN_KEYWORD_CHARS {
            continue;
        }
        for pos in 0..chars.len() {
            if pos > 0 && chars[pos - 1].is_alphanumeric() {
                continue;
            }
            let Some(end) = match_at(chars, pos, &folded) else {
                continue;
            };
            if end < chars.len() && chars[end].is_alphanumeric() {
                continue;
            }
            found.push(KeywordHit {
                doc_id: doc_id.to_owned(),
                class_id: class_id.to_owned(),
                keyword: folded.iter().collect(),
                span: Span::new(pos, end),
            });
        }
    }
    // longest keyword wins among overlapping hits of one class
    found.sort_by(|a, b| {
        b.span
            .len()
            .cmp(&a.span.len())
            .then(a.span.start.cmp(&b.span.start))
            .then_with(|| a.keyword.cmp(&b.keyword))
    });
    let mut kept: Vec<KeywordHit> = Vec::new();
    for h in found {
        if !kept.iter().any(|k| k.span.overlaps(&h.span)) {
            kept.push(h);
        }
    }
    kept
}

fn sort_hits(hits: &mut [KeywordHit]) {
    hits.sort_by(|a, b| {
        a.span
            .start
            .cmp(&b.span.start)
            .then_with(|| a.class_id.cmp(&b.class_id))
            .then(a.span.end.cmp(&b.span.end))
    });
}

/// Case-insensitive whole-word keyword matches, sorted by position.
pub fn find_hits(doc_id: &str, text: &str, keywords: &[(String, Vec<String>)]) -> Vec<KeywordHit> {
    let chars: Vec<char> = text.chars().collect();
    let mut hits: Vec<KeywordHit> = keywords
        .iter()
        .flat_map(|(class_id, kws)| hits_in(&chars, doc_id, class_id, kws))
        .collect();
    sort_hits(&mut hits);
    hits
}

/// Value extraction over one document.
pub struct Extractor<'u> {
    pub options: ExtractOptions,
    pub units: &'u UnitLexicon,
}

impl Default for Extractor<'static> {
    fn default() -> Self {
        Extractor::new(ExtractOptions::default())
    }
}

impl Extractor<'static> {
    pub fn new(options: ExtractOptions) -> Self {
        Extractor {
            options,
            units: UnitLexicon::bundled(),
        }
    }
}

struct Prepared<'a> {
    chars: &'a [char],
    tokens: Vec<Token>,
}

impl Prepared<'_> {
    /// Index of the first token starting at or after `pos`.
    fn token_at_or_after(&self, pos: usize) -> usize {
        self.tokens.partition_point(|t| t.start < pos)
    }
}

impl<'u> Extractor<'u> {
    pub fn with_units(options: ExtractOptions, units: &'u UnitLexicon) -> Self {
        Extractor { options, units }
    }

    /// Nearest numeral after the keyword, then before it.
    fn numeric_window(&self, doc: &Prepared, hit: &KeywordHit) -> Option<ExtractedPair> {
        let tokens = &doc.tokens;
        let first_after = doc.token_at_or_after(hit.span.end);
        // the token holding the keyword's last char may close the sentence
        let hit_last = doc.tokens.partition_point(|t| t.start < hit.span.end).checked_sub(1);
        let open_after = hit_last.is_none_or(|h| h + 1 != first_after || numeric::joined(tokens, h));
        let mut after = Vec::new();
        if open_after {
            for j in first_after..tokens.len().min(first_after + self.options.window_after) {
                after.push(j);
                if !numeric::joined(tokens, j) {
                    break;
                }
            }
        }
        let first_hit_token = doc.token_at_or_after(hit.span.start);
        let mut before = Vec::new();
        let mut j = first_hit_token;
        while j > 0 && before.len() < self.options.window_before {
            if !numeric::joined(tokens, j - 1) {
                break;
            }
            j -= 1;
            before.push(j);
        }
        after.into_iter().chain(before).find_map(|j| {
            let v = scan_value(tokens, j, self.units)?;
            let span = Span::new(v.start, v.end);
            let canonical_unit = v
                .unit
                .as_deref()
                .and_then(|u| self.units.lookup(u))
                .map(|u| u.canonical.clone());
            Some(ExtractedPair {
                hit: hit.clone(),
                value_text: span.text(doc.chars),
                value_span: Some(span),
                numeric: Some(NumericValue {
                    magnitude: v.magnitude,
                    unit: v.unit,
                    canonical_unit,
                }),
                method: Method::NumericWindow,
                note: None,
            })
        })
    }

    fn fallback(&self, doc: &Prepared, hit: &KeywordHit) -> ExtractedPair {
        let captured = sentence_pattern(doc.chars, hit.span.start, hit.span.end)
            .map(|s| (Method::SentencePattern, s))
            .or_else(|| list_pattern(doc.chars, hit.span.start).map(|s| (Method::ListPattern, s)));
        let Some((method, (start, end))) = captured else {
            return ExtractedPair {
                hit: hit.clone(),
                value_text: String::new(),
                value_span: None,
                numeric: None,
                method: Method::ManualPending,
                note: Some("no numeral in the window and no sentence or list boundary".into()),
            };
        };
        let span = Span::new(start, end);
        let has_numeral = tag_span(&doc.tokens, start, end, self.units)
            .contains(&CoarseTag::Numeral)
            || span.text(doc.chars).chars().any(|c| c.is_ascii_digit());
        ExtractedPair {
            hit: hit.clone(),
            value_text: span.text(doc.chars),
            value_span: Some(span),
            numeric: None,
            method: if has_numeral { method } else { Method::ManualPending },
            note: (!has_numeral).then(|| format!("{} capture without a numeral", method.as_str())),
        }
    }

    /// Numeric window first, then the sentence and list patterns.
    pub fn extract_value(&self, text: &str, hit: &KeywordHit) -> ExtractedPair {
        let chars: Vec<char> = text.chars().collect();
        let doc = Prepared {
            tokens: tokenize(&chars),
            chars: &chars,
        };
        self.numeric_window(&doc, hit)
            .unwrap_or_else(|| self.fallback(&doc, hit))
    }

    pub fn pattern_fallback(&self, text: &str, hit: &KeywordHit) -> ExtractedPair {
        let chars: Vec<char> = text.chars().collect();
        let doc = Prepared {
            tokens: tokenize(&chars),
            chars: &chars,
        };
        self.fallback(&doc, hit)
    }

    /// One pair and one annotation per keyword hit of every class.
    pub fn extract_information(&self, ontology: &Ontology, doc: &Document) -> Extraction {
        let chars: Vec<char> = doc.text.chars().collect();
        let prepared = Prepared {
            tokens: tokenize(&chars),
            chars: &chars,
        };
        let mut hits: Vec<KeywordHit> = keywords_by_class(ontology, self.options.baseline)
            .iter()
            .flat_map(|(class_id, kws)| hits_in(&chars, &doc.doc_id, class_id, kws))
            .collect();
        sort_hits(&mut hits);
        let mut out = Extraction::default();
        for hit in hits {
            let pair = self
                .numeric_window(&prepared, &hit)
                .unwrap_or_else(|| self.fallback(&prepared, &hit));
            let class_name = ontology
                .class(&hit.class_id)
                .map(|c| c.name.clone())
                .unwrap_or_else(|| hit.class_id.clone());
            out.annotations.push(annotate(&pair, &class_name, &chars));
            out.pairs.push(pair);
        }
        out
    }
}

/// `find_hits` with the keywords of `ontology`, then value extraction with
/// default options.
pub fn extract_information(ontology: &Ontology, doc: &Document) -> Extraction {
    Extractor::default().extract_information(ontology, doc)
}

pub fn reason(fragment: &str, class_name: &str) -> String {
    let fragment = fragment.split_whitespace().collect::<Vec<_>>().join(" ");
    format!("The highlighted text ({fragment}) is corresponding to the {class_name} property")
}

pub fn annotate(pair: &ExtractedPair, class_name: &str, chars: &[char]) -> Annotation {
    let span = pair.span();
    let text = span.text(chars);
    Annotation {
        doc_id: pair.hit.doc_id.clone(),
        class_id: pair.hit.class_id.clone(),
        class_name: class_name.to_owned(),
        span,
        reason: reason(&text, class_name),
        text,
        method: pair.method,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationFile {
    format: String,
    version: u32,
    doc_id: String,
    annotations: Vec<Annotation>,
}

const ANNOTATION_FORMAT: &str = "contron-annotations";

pub fn annotations_json(doc_id: &str, annotations: &[Annotation]) -> Result<String, Error> {
    to_pretty_json(&AnnotationFile {
        format: ANNOTATION_FORMAT.into(),
        version: 1,
        doc_id: doc_id.to_owned(),
        annotations: annotations.to_vec(),
    })
}

pub fn write_annotations(path: &Path, doc_id: &str, annotations: &[Annotation]) -> Result<(), Error> {
    write_atomic(path, &annotations_json(doc_id, annotations)?)
}

pub fn read_annotations(path: &Path) -> Result<Vec<Annotation>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: AnnotationFile =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    if file.format != ANNOTATION_FORMAT {
        return Err(Error::format(path, format!("not a {ANNOTATION_FORMAT} file")));
    }
    Ok(file.annotations)
}

/// One row of the pairs export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub doc_id: String,
    pub class_id: String,
    pub keyword: String,
    pub value: String,
    pub magnitude: Option<f64>,
    pub unit: Option<String>,
    pub method: Method,
    pub start: usize,
    pub end: usize,
}

impl From<&ExtractedPair> for PairRecord {
    fn from(p: &ExtractedPair) -> Self {
        let span = p.span();
        PairRecord {
            doc_id: p.hit.doc_id.clone(),
            class_id: p.hit.class_id.clone(),
            keyword: p.hit.keyword.clone(),
            value: p.value_text.clone(),
            magnitude: p.numeric.as_ref().map(|n| n.magnitude),
            unit: p.numeric.as_ref().and_then(|n| n.unit.clone()),
            method: p.method,
            start: span.start,
            end: span.end,
        }
    }
}

fn tsv_writer<W: std::io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().delimiter(b'\t').from_writer(w)
}

/// Tab-separated export with a header row.
pub fn pairs_tsv(records: &[PairRecord]) -> Result<String, Error> {
    let mut w = tsv_writer(Vec::new());
    for r in records {
        w.serialize(r)
            .map_err(|e| Error::Config(format!("pairs export: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("pairs export: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv writes utf-8"))
}

pub fn write_pairs(path: &Path, records: &[PairRecord]) -> Result<(), Error> {
    write_atomic(path, &pairs_tsv(records)?)
}

pub fn read_pairs(path: &Path) -> Result<Vec<PairRecord>, Error> {
    let mut r = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::format(path, e.to_string())))
        .collect()
}
