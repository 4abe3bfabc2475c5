//! Import of class declarations and their label annotations from Turtle or
//! N-Triples files.
//!
//! Only the constructs the pipeline consumes are read: `owl:Class` /
//! `rdfs:Class` declarations, `rdfs:label`, `skos:prefLabel`,
//! `skos:altLabel`, `rdfs:comment`, `skos:definition`, named
//! `rdfs:subClassOf` parents, the `owl:Ontology` IRI and `owl:imports`.
//! Everything else is counted and skipped.

use std::collections::{BTreeMap, HashMap};

use log::debug;

use super::{Ontology, OntologyClass, OntologyError};

const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
const OWL: &str = "http://www.w3.org/2002/07/owl#";
const SKOS: &str = "http://www.w3.org/2004/02/skos/core#";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Iri(String),
    Blank(String),
    Literal { value: String, lang: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub subject: Node,
    pub predicate: String,
    pub object: Node,
}

#[derive(Debug)]
pub struct ImportReport {
    pub ontology: Ontology,
    /// Triples that carried no information the importer understands.
    pub skipped: usize,
}

fn syntax(line: usize, reason: impl Into<String>) -> OntologyError {
    OntologyError::Schema {
        path: format!("line {line}"),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Iri(String),
    PName(String, String),
    Blank(String),
    Str(String),
    LangTag(String),
    DataType,
    Word(String),
    Punct(char),
    Prefix,
    Base,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
}

impl<'a> Lexer<'a> {
    fn new(s: &'a str) -> Self {
        Lexer {
            chars: s.chars().peekable(),
            line: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next();
        if c == Some('\n') {
            self.line += 1;
        }
        c
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>, OntologyError> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let line = self.line;
            match c {
                c if c.is_whitespace() => {
                    self.bump();
                }
                '#' => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                '<' => {
                    self.bump();
                    let mut iri = String::new();
                    loop {
                        match self.bump() {
                            Some('>') => break,
                            Some(c) => iri.push(c),
                            None => return Err(syntax(line, "unterminated IRI")),
                        }
                    }
                    out.push((Tok::Iri(iri), line));
                }
                '"' | '\'' => {
                    let s = self.string(c, line)?;
                    out.push((Tok::Str(s), line));
                }
                '@' => {
                    self.bump();
                    let w = self.word();
                    let tok = match w.as_str() {
                        "prefix" => Tok::Prefix,
                        "base" => Tok::Base,
                        _ => Tok::LangTag(w),
                    };
                    out.push((tok, line));
                }
                '^' => {
                    self.bump();
                    if self.bump() != Some('^') {
                        return Err(syntax(line, "expected ^^"));
                    }
                    out.push((Tok::DataType, line));
                }
                '.' | ';' | ',' | '[' | ']' | '(' | ')' => {
                    self.bump();
                    out.push((Tok::Punct(c), line));
                }
                _ => {
                    let w = self.word();
                    if w.is_empty() {
                        return Err(syntax(line, format!("unexpected character {c:?}")));
                    }
                    let tok = if let Some(label) = w.strip_prefix("_:") {
                        Tok::Blank(label.to_owned())
                    } else if w.eq_ignore_ascii_case("prefix") {
                        Tok::Prefix
                    } else if w.eq_ignore_ascii_case("base") {
                        Tok::Base
                    } else if let Some((p, l)) = w.split_once(':') {
                        Tok::PName(p.to_owned(), l.to_owned())
                    } else {
                        Tok::Word(w)
                    };
                    out.push((tok, line));
                }
            }
        }
        Ok(out)
    }

    fn word(&mut self) -> String {
        let mut w = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '+') {
                w.push(c);
                self.bump();
            } else if c == '.' {
                // a dot inside a name, not the statement terminator
                let mut look = self.chars.clone();
                look.next();
                if look.peek().is_some_and(|n| n.is_alphanumeric() || *n == '_') {
                    w.push(c);
                    self.bump();
                } else {
                    break;
                }
            } else {
                break;
            }
        }
        w
    }

    fn string(&mut self, quote: char, line: usize) -> Result<String, OntologyError> {
        self.bump();
        let mut long = false;
        let mut look = self.chars.clone();
        if look.next() == Some(quote) && look.next() == Some(quote) {
            self.bump();
            self.bump();
            long = true;
        } else if self.chars.peek() == Some(&quote) {
            self.bump();
            return Ok(String::new());
        }
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(syntax(line, "unterminated string")),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('r') => s.push('\r'),
                    Some('u') => s.push(self.unicode_escape(4, line)?),
                    Some('U') => s.push(self.unicode_escape(8, line)?),
                    Some(c) => s.push(c),
                    None => return Err(syntax(line, "dangling escape")),
                },
                Some(c) if c == quote => {
                    if !long {
                        break;
                    }
                    let mut look = self.chars.clone();
                    if look.next() == Some(quote) && look.next() == Some(quote) {
                        self.bump();
                        self.bump();
                        break;
                    }
                    s.push(c);
                }
                Some(c) => s.push(c),
            }
        }
        Ok(s)
    }

    fn unicode_escape(&mut self, n: usize, line: usize) -> Result<char, OntologyError> {
        let hex: String = (0..n).filter_map(|_| self.bump()).collect();
        u32::from_str_radix(&hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| syntax(line, "bad unicode escape"))
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    prefixes: HashMap<String, String>,
    base: String,
    blank_seq: usize,
    triples: Vec<Triple>,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or(self.toks.last())
            .map_or(0, |t| t.1)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Result<Tok, OntologyError> {
        let t = self
            .toks
            .get(self.pos)
            .map(|t| t.0.clone())
            .ok_or_else(|| syntax(self.line(), "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, c: char) -> Result<(), OntologyError> {
        match self.next()? {
            Tok::Punct(p) if p == c => Ok(()),
            other => Err(syntax(self.line(), format!("expected '{c}', found {other:?}"))),
        }
    }

    fn resolve(&self, iri: &str) -> String {
        if iri.contains(':') || self.base.is_empty() {
            iri.to_owned()
        } else {
            format!("{}{iri}", self.base)
        }
    }

    fn expand(&self, prefix: &str, local: &str) -> Result<String, OntologyError> {
        self.prefixes
            .get(prefix)
            .map(|ns| format!("{ns}{local}"))
            .ok_or_else(|| syntax(self.line(), format!("undeclared prefix {prefix}:")))
    }

    fn fresh_blank(&mut self) -> Node {
        self.blank_seq += 1;
        Node::Blank(format!("anon{}", self.blank_seq))
    }

    fn run(mut self) -> Result<Vec<Triple>, OntologyError> {
        while let Some(tok) = self.peek().cloned() {
            match tok {
                Tok::Prefix => {
                    self.pos += 1;
                    let name = match self.next()? {
                        Tok::PName(p, l) if l.is_empty() => p,
                        other => return Err(syntax(self.line(), format!("bad prefix name {other:?}"))),
                    };
                    let iri = match self.next()? {
                        Tok::Iri(i) => self.resolve(&i),
                        other => return Err(syntax(self.line(), format!("bad prefix IRI {other:?}"))),
                    };
                    self.prefixes.insert(name, iri);
                    if self.peek() == Some(&Tok::Punct('.')) {
                        self.pos += 1;
                    }
                }
                Tok::Base => {
                    self.pos += 1;
                    match self.next()? {
                        Tok::Iri(i) => self.base = i,
                        other => return Err(syntax(self.line(), format!("bad base {other:?}"))),
                    }
                    if self.peek() == Some(&Tok::Punct('.')) {
                        self.pos += 1;
                    }
                }
                _ => {
                    let subject = self.subject()?;
                    if self.peek() != Some(&Tok::Punct('.')) {
                        self.predicate_objects(&subject)?;
                    }
                    self.expect('.')?;
                }
            }
        }
        Ok(self.triples)
    }

    fn subject(&mut self) -> Result<Node, OntologyError> {
        match self.next()? {
            Tok::Iri(i) => Ok(Node::Iri(self.resolve(&i))),
            Tok::PName(p, l) => Ok(Node::Iri(self.expand(&p, &l)?)),
            Tok::Blank(b) => Ok(Node::Blank(b)),
            Tok::Punct('[') => self.blank_property_list(),
            Tok::Punct('(') => self.collection(),
            other => Err(syntax(self.line(), format!("bad subject {other:?}"))),
        }
    }

    fn blank_property_list(&mut self) -> Result<Node, OntologyError> {
        let node = self.fresh_blank();
        if self.peek() != Some(&Tok::Punct(']')) {
            self.predicate_objects(&node)?;
        }
        self.expect(']')?;
        Ok(node)
    }

    fn collection(&mut self) -> Result<Node, OntologyError> {
        let node = self.fresh_blank();
        while self.peek() != Some(&Tok::Punct(')')) {
            self.object()?;
        }
        self.expect(')')?;
        Ok(node)
    }

    fn predicate(&mut self) -> Result<String, OntologyError> {
        match self.next()? {
            Tok::Iri(i) => Ok(self.resolve(&i)),
            Tok::PName(p, l) => self.expand(&p, &l),
            Tok::Word(w) if w == "a" => Ok(RDF_TYPE.to_owned()),
            other => Err(syntax(self.line(), format!("bad predicate {other:?}"))),
        }
    }

    fn object(&mut self) -> Result<Node, OntologyError> {
        match self.next()? {
            Tok::Iri(i) => Ok(Node::Iri(self.resolve(&i))),
            Tok::PName(p, l) => Ok(Node::Iri(self.expand(&p, &l)?)),
            Tok::Blank(b) => Ok(Node::Blank(b)),
            Tok::Punct('[') => self.blank_property_list(),
            Tok::Punct('(') => self.collection(),
            Tok::Str(value) => {
                let mut lang = None;
                match self.peek() {
                    Some(Tok::LangTag(_)) => {
                        if let Tok::LangTag(l) = self.next()? {
                            lang = Some(l.to_lowercase());
                        }
                    }
                    Some(Tok::DataType) => {
                        self.pos += 1;
                        self.next()?;
                    }
                    _ => {}
                }
                Ok(Node::Literal { value, lang })
            }
            Tok::Word(w) => Ok(Node::Literal {
                value: w,
                lang: None,
            }),
            other => Err(syntax(self.line(), format!("bad object {other:?}"))),
        }
    }

    fn predicate_objects(&mut self, subject: &Node) -> Result<(), OntologyError> {
        loop {
            let predicate = self.predicate()?;
            loop {
                let object = self.object()?;
                self.triples.push(Triple {
                    subject: subject.clone(),
                    predicate: predicate.clone(),
                    object,
                });
                if self.peek() == Some(&Tok::Punct(',')) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if self.peek() == Some(&Tok::Punct(';')) {
                while self.peek() == Some(&Tok::Punct(';')) {
                    self.pos += 1;
                }
                if matches!(self.peek(), Some(Tok::Punct('.')) | Some(Tok::Punct(']')) | None) {
                    return Ok(());
                }
            } else {
                return Ok(());
            }
        }
    }
}

/// Parses Turtle (and therefore N-Triples) into triples.
pub fn parse_turtle(text: &str) -> Result<Vec<Triple>, OntologyError> {
    let toks = Lexer::new(text).tokens()?;
    Parser {
        toks,
        pos: 0,
        prefixes: HashMap::new(),
        base: String::new(),
        blank_seq: 0,
        triples: Vec::new(),
    }
    .run()
}

fn local_name(iri: &str) -> &str {
    iri.rsplit(['#', '/']).next().unwrap_or(iri)
}

/// `SingleStarAccuracy` -> `Single Star Accuracy`, `SNR` stays `SNR`.
fn humanize(local: &str) -> String {
    let chars: Vec<char> = local.chars().collect();
    let mut out = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c == '_' || c == '-' {
            out.push(' ');
            continue;
        }
        if i > 0 && c.is_uppercase() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if prev.is_lowercase() || (prev.is_uppercase() && next_lower) {
                out.push(' ');
            }
        }
        out.push(c);
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn english(lang: &Option<String>) -> bool {
    lang.as_deref().is_none_or(|l| l == "en" || l.starts_with("en-"))
}

/// Builds an ontology from the class declarations of a Turtle document.
///
/// Classes whose IRI lies under the declared ontology IRI are intrinsic;
/// without an `owl:Ontology` declaration every class is.
pub fn import_turtle(text: &str, ontology_id: Option<&str>) -> Result<ImportReport, OntologyError> {
    let triples = parse_turtle(text)?;
    let class_types = [format!("{OWL}Class"), format!("{RDFS}Class")];
    let mut ontology_iri = None;
    let mut imports = Vec::new();
    let mut classes: BTreeMap<String, OntologyClass> = BTreeMap::new();

    for t in &triples {
        if let (Node::Iri(s), Node::Iri(o)) = (&t.subject, &t.object) {
            if t.predicate == RDF_TYPE {
                if class_types.contains(o) {
                    classes
                        .entry(s.clone())
                        .or_insert_with(|| OntologyClass::new(s.clone(), humanize(local_name(s))));
                } else if o == &format!("{OWL}Ontology") {
                    ontology_iri = Some(s.clone());
                }
            } else if t.predicate == format!("{OWL}imports") {
                imports.push(o.clone());
            }
        }
    }

    let mut skipped = 0;
    let mut named = BTreeMap::new();
    for t in &triples {
        let Node::Iri(s) = &t.subject else {
            skipped += 1;
            continue;
        };
        if t.predicate == RDF_TYPE || t.predicate == format!("{OWL}imports") {
            continue;
        }
        let Some(class) = classes.get_mut(s) else {
            debug!("skipping triple about non-class {s}");
            skipped += 1;
            continue;
        };
        let p = t.predicate.as_str();
        match (&t.object, p) {
            (Node::Literal { value, lang }, _) if !english(lang) => {
                debug!("skipping {lang:?} literal {value:?}");
                skipped += 1;
            }
            (Node::Literal { value, .. }, p) if p == format!("{RDFS}label") || p == format!("{SKOS}prefLabel") => {
                if named.insert(s.clone(), ()).is_none() {
                    class.name = value.clone();
                } else if !class.labels.contains(value) {
                    class.labels.push(value.clone());
                }
            }
            (Node::Literal { value, .. }, p) if p == format!("{SKOS}altLabel") => {
                class.alt_labels.push(value.clone());
            }
            (Node::Literal { value, .. }, p)
                if p == format!("{RDFS}comment") || p == format!("{SKOS}definition") =>
            {
                class.description.get_or_insert_with(|| value.clone());
            }
            (Node::Iri(parent), p) if p == format!("{RDFS}subClassOf") => {
                if class.parent.is_none() {
                    class.parent = Some(parent.clone());
                }
            }
            _ => {
                debug!("skipping unsupported predicate {p} on {s}");
                skipped += 1;
            }
        }
    }

    let namespace = ontology_iri.clone();
    let mut ontology = Ontology::new(
        ontology_id
            .map(str::to_owned)
            .or(ontology_iri)
            .unwrap_or_else(|| "imported".to_owned()),
    );
    ontology.imports = imports;
    let known: Vec<String> = classes.keys().cloned().collect();
    for (iri, mut class) in classes {
        class.intrinsic = namespace.as_deref().is_none_or(|ns| {
            iri.strip_prefix(ns.trim_end_matches(['#', '/']))
                .is_some_and(|rest| rest.starts_with(['#', '/']))
        });
        if let Some(p) = &class.parent {
            let resolvable = known.contains(p)
                || ontology.imports.iter().any(|imp| p.starts_with(&format!("{imp}:")));
            if !resolvable {
                debug!("dropping unresolved parent {p} of {iri}");
                class.parent = None;
            }
        }
        ontology.classes.push(class);
    }
    ontology.validate()?;
    Ok(ImportReport { ontology, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
@prefix owl: <http://www.w3.org/2002/07/owl#> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
@prefix skos: <http://www.w3.org/2004/02/skos/core#> .
@prefix st: <http://example.org/startracker#> .

<http://example.org/startracker> a owl:Ontology ;
    owl:imports <http://example.org/core> .

st:SingleStarAccuracyNoise a owl:Class ;
    rdfs:subClassOf st:SingleStarAccuracy ;
    rdfs:comment "Noise component of the single star accuracy."@en .

st:SingleStarAccuracy a owl:Class ;
    rdfs:label "Single Star Accuracy"@en, "Einzelsterngenauigkeit"@de ;
    skos:altLabel "star accuracy" ;
    rdfs:subClassOf [ a owl:Restriction ; owl:onProperty st:hasValue ; owl:someValuesFrom st:Value ] .

<http://example.org/core#Mass> a owl:Class ; rdfs:label "Mass" .
st:SNR a owl:Class .
"#;

    #[test]
    fn imports_classes_and_labels() {
        let report = import_turtle(SAMPLE, Some("st")).unwrap();
        let o = &report.ontology;
        assert_eq!(o.ontology_id, "st");
        assert_eq!(o.imports, ["http://example.org/core"]);
        assert_eq!(o.classes.len(), 4);
        let ssa = o.class("http://example.org/startracker#SingleStarAccuracy").unwrap();
        assert_eq!(ssa.name, "Single Star Accuracy");
        assert_eq!(ssa.alt_labels, ["star accuracy"]);
        assert_eq!(ssa.parent, None, "anonymous restriction is not a parent");
        let noise = o
            .class("http://example.org/startracker#SingleStarAccuracyNoise")
            .unwrap();
        assert_eq!(noise.name, "Single Star Accuracy Noise");
        assert_eq!(
            noise.parent.as_deref(),
            Some("http://example.org/startracker#SingleStarAccuracy")
        );
        assert!(noise.description.is_some());
        assert_eq!(o.class("http://example.org/startracker#SNR").unwrap().name, "SNR");
        assert!(!o.class("http://example.org/core#Mass").unwrap().intrinsic);
        assert_eq!(o.intrinsic_classes().count(), 3);
        assert!(report.skipped > 0);
    }

    #[test]
    fn ntriples_are_turtle() {
        let nt = "<http://x.org/o#A> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .\n\
                  <http://x.org/o#A> <http://www.w3.org/2000/01/rdf-schema#label> \"Radiation \\\"Tolerance\\\"\" .\n";
        let o = import_turtle(nt, None).unwrap().ontology;
        assert_eq!(o.classes[0].name, "Radiation \"Tolerance\"");
        assert!(o.classes[0].intrinsic);
    }

    #[test]
    fn syntax_errors_report_line() {
        let err = parse_turtle("@prefix x: <http://x#> .\nx:a x:b \"open").unwrap_err();
        assert!(matches!(err, OntologyError::Schema { path, .. } if path == "line 2"));
        assert!(parse_turtle("y:a y:b y:c .").is_err());
    }

    #[test]
    fn humanizes_local_names() {
        assert_eq!(humanize("SingleStarAccuracyBias"), "Single Star Accuracy Bias");
        assert_eq!(humanize("SNR"), "SNR");
        assert_eq!(humanize("field_of_view"), "field of view");
        assert_eq!(humanize("HTTPServer"), "HTTP Server");
    }
}
