//! WordNet-style lexical database: synset lookup, hypernym taxonomy and
//! Wu-Palmer similarity.

mod wndb;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{TermLexicon, NGRAM_SEPARATOR};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("no lexical database files found in {0}")]
    MissingDatabase(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {reason}")]
    Corrupt {
        file: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("invalid synset id {0:?}")]
    BadSynsetId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    AdjectiveSatellite,
    Adverb,
}

impl Pos {
    pub fn as_char(self) -> char {
        match self {
            Pos::Noun => 'n',
            Pos::Verb => 'v',
            Pos::Adjective => 'a',
            Pos::AdjectiveSatellite => 's',
            Pos::Adverb => 'r',
        }
    }

    pub fn from_char(c: char) -> Option<Pos> {
        Some(match c {
            'n' => Pos::Noun,
            'v' => Pos::Verb,
            'a' => Pos::Adjective,
            's' => Pos::AdjectiveSatellite,
            'r' => Pos::Adverb,
            _ => return None,
        })
    }

    /// Satellites share the adjective files.
    fn file_pos(self) -> Pos {
        match self {
            Pos::AdjectiveSatellite => Pos::Adjective,
            p => p,
        }
    }
}

/// `lemma.pos.nn`, e.g. `outer_space.n.01`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SynsetId {
    pub lemma: String,
    pub pos: Pos,
    pub sense: u32,
}

impl SynsetId {
    pub fn new(lemma: impl Into<String>, pos: Pos, sense: u32) -> Self {
        SynsetId {
            lemma: lemma.into(),
            pos,
            sense,
        }
    }
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{:02}", self.lemma, self.pos.as_char(), self.sense)
    }
}

impl FromStr for SynsetId {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LexiconError::BadSynsetId(s.to_owned());
        let mut parts = s.rsplitn(3, '.');
        let sense = parts.next().ok_or_else(bad)?;
        let pos = parts.next().ok_or_else(bad)?;
        let lemma = parts.next().filter(|l| !l.is_empty()).ok_or_else(bad)?;
        let mut pos_chars = pos.chars();
        let pos = match (pos_chars.next(), pos_chars.next()) {
            (Some(c), None) => Pos::from_char(c).ok_or_else(bad)?,
            _ => return Err(bad()),
        };
        let sense: u32 = sense.parse().map_err(|_| bad())?;
        if sense == 0 {
            return Err(bad());
        }
        Ok(SynsetId::new(lemma, pos, sense))
    }
}

impl Serialize for SynsetId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SynsetId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synset {
    pub id: SynsetId,
    pub gloss: String,
    pub lemmas: Vec<String>,
    pub hypernyms: Vec<SynsetId>,
    /// Minimum number of nodes on a path to a taxonomy root; roots have depth 1.
    pub depth: u32,
}

/// An immutable, loaded lexical database.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    synsets: Vec<Synset>,
    hypernym_idx: Vec<Vec<usize>>,
    by_id: HashMap<SynsetId, usize>,
    by_lemma: HashMap<String, Vec<usize>>,
    exceptions: HashMap<String, String>,
}

impl Lexicon {
    /// Loads `index.<pos>` / `data.<pos>` files from a database directory.
    pub fn load(dir: &Path) -> Result<Lexicon, LexiconError> {
        wndb::load(dir)
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn synsets(&self) -> &[Synset] {
        &self.synsets
    }

    pub fn get(&self, id: &SynsetId) -> Option<&Synset> {
        self.by_id.get(id).map(|&i| &self.synsets[i])
    }

    pub fn contains_lemma(&self, lemma: &str) -> bool {
        self.by_lemma.contains_key(lemma)
    }

    /// Synsets of a normalized lemma in database sense order, nouns first.
    pub fn synsets_of(&self, lemma: &str, pos: Option<Pos>) -> Vec<&Synset> {
        self.by_lemma
            .get(lemma)
            .into_iter()
            .flatten()
            .map(|&i| &self.synsets[i])
            .filter(|s| pos.is_none_or(|p| s.id.pos.file_pos() == p.file_pos()))
            .collect()
    }

    fn ancestors(&self, start: usize) -> HashSet<usize> {
        let mut seen = HashSet::from([start]);
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for &h in &self.hypernym_idx[i] {
                if seen.insert(h) {
                    stack.push(h);
                }
            }
        }
        seen
    }

    /// Deepest common ancestor (self included); ties go to the smallest id.
    pub fn lowest_common_subsumer(&self, a: &SynsetId, b: &SynsetId) -> Option<&Synset> {
        let (&ia, &ib) = (self.by_id.get(a)?, self.by_id.get(b)?);
        let left = self.ancestors(ia);
        self.ancestors(ib)
            .into_iter()
            .filter(|i| left.contains(i))
            .map(|i| &self.synsets[i])
            .max_by(|x, y| x.depth.cmp(&y.depth).then_with(|| y.id.cmp(&x.id)))
    }

    /// Wu-Palmer similarity `2·depth(lcs) / (depth(a) + depth(b))`.
    ///
    /// Pairs without a common subsumer, or ids unknown to the database,
    /// score 0.
    pub fn wup_similarity(&self, a: &SynsetId, b: &SynsetId) -> f64 {
        let (Some(sa), Some(sb)) = (self.get(a), self.get(b)) else {
            return 0.0;
        };
        match self.lowest_common_subsumer(a, b) {
            Some(lcs) => {
                let score = 2.0 * f64::from(lcs.depth) / f64::from(sa.depth + sb.depth);
                // With multiple inheritance the deepest subsumer can sit below
                // a node's shortest root path.
                score.min(1.0)
            }
            None => 0.0,
        }
    }

    /// Member lemmas of every sense of `lemma` plus the lemmas of their
    /// direct hypernyms, without `lemma` itself.
    pub fn synonyms_and_related(&self, lemma: &str) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut push = |w: &String| {
            if w != lemma && seen.insert(w.clone()) {
                out.push(w.clone());
            }
        };
        for s in self.synsets_of(lemma, None) {
            s.lemmas.iter().for_each(&mut push);
            for h in &s.hypernyms {
                if let Some(hs) = self.get(h) {
                    hs.lemmas.iter().for_each(&mut push);
                }
            }
        }
        out
    }

    /// Noun base form by the usual detachment rules, when the word itself is
    /// not a known lemma.
    pub fn morph(&self, word: &str) -> Option<String> {
        if self.by_lemma.contains_key(word) {
            return None;
        }
        if let Some(base) = self.exceptions.get(word) {
            return Some(base.clone());
        }
        const RULES: [(&str, &str); 8] = [
            ("ses", "s"),
            ("xes", "x"),
            ("zes", "z"),
            ("ches", "ch"),
            ("shes", "sh"),
            ("men", "man"),
            ("ies", "y"),
            ("s", ""),
        ];
        RULES.iter().find_map(|(suffix, repl)| {
            let stem = word.strip_suffix(suffix)?;
            let candidate = format!("{stem}{repl}");
            (!stem.is_empty() && self.by_lemma.contains_key(&candidate)).then_some(candidate)
        })
    }
}

impl TermLexicon for Lexicon {
    fn is_multiword(&self, joined: &str) -> bool {
        joined.contains(NGRAM_SEPARATOR) && self.by_lemma.contains_key(joined)
    }

    fn base_form(&self, word: &str) -> Option<String> {
        self.morph(word)
    }
}

/// Normalizes free text to lemma form: lowercase, words joined by `_`.
pub fn to_lemma(text: &str) -> String {
    text.split(|c: char| c.is_whitespace() || c == NGRAM_SEPARATOR)
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> Lexicon {
        Lexicon::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/lexicon")).unwrap()
    }

    fn id(s: &str) -> SynsetId {
        s.parse().unwrap()
    }

    #[test]
    fn synset_id_round_trips() {
        let sid = id("outer_space.n.01");
        assert_eq!(sid.lemma, "outer_space");
        assert_eq!(sid.pos, Pos::Noun);
        assert_eq!(sid.sense, 1);
        assert_eq!(sid.to_string(), "outer_space.n.01");
        for bad in ["space", "space.x.01", "space.n.00", ".n.01", "space.n.one"] {
            assert!(bad.parse::<SynsetId>().is_err(), "{bad}");
        }
    }

    #[test]
    fn loads_fixture() {
        let lex = fixture();
        assert_eq!(lex.len(), 50);
        let space: Vec<String> = lex
            .synsets_of("space", None)
            .iter()
            .map(|s| s.id.to_string())
            .collect();
        assert!(space.len() >= 2);
        assert!(space.contains(&"space.n.01".to_owned()));
        assert!(space.contains(&"outer_space.n.01".to_owned()));
        let sat: Vec<String> = lex
            .synsets_of("satellite", None)
            .iter()
            .map(|s| s.id.to_string())
            .collect();
        assert_eq!(sat, ["satellite.n.01", "satellite.n.02"]);
        assert!(lex.synsets_of("zzzz-notaword", None).is_empty());
        assert_eq!(lex.get(&id("entity.n.01")).unwrap().depth, 1);
        assert_eq!(lex.get(&id("star_tracker.n.01")).unwrap().depth, 9);
    }

    #[test]
    fn pos_filter() {
        let lex = fixture();
        let verbs = lex.synsets_of("space", Some(Pos::Verb));
        assert_eq!(verbs.len(), 1);
        assert_eq!(verbs[0].id.to_string(), "space.v.01");
    }

    #[test]
    fn missing_database() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            Lexicon::load(dir.path()),
            Err(LexiconError::MissingDatabase(_))
        ));
    }

    #[test]
    fn loading_is_deterministic() {
        assert_eq!(fixture(), fixture());
    }

    #[test]
    fn wup_basics() {
        let lex = fixture();
        let st = id("star_tracker.n.01");
        assert_eq!(lex.wup_similarity(&st, &st), 1.0);
        // star_tracker (9) and antenna (8) meet at device (7).
        let ant = id("antenna.n.01");
        assert!((lex.wup_similarity(&st, &ant) - 14.0 / 17.0).abs() < 1e-12);
        // noun vs verb share no root
        assert_eq!(lex.wup_similarity(&st, &id("space.v.01")), 0.0);
        assert_eq!(lex.wup_similarity(&st, &id("nothing.n.01")), 0.0);
    }

    #[test]
    fn synonyms_of_satellite() {
        let lex = fixture();
        assert_eq!(
            lex.synonyms_and_related("satellite"),
            [
                "artificial_satellite",
                "orbiter",
                "equipment",
                "celestial_body",
                "heavenly_body"
            ]
        );
        assert!(lex.synonyms_and_related("unknownword").is_empty());
        assert!(!lex.synonyms_and_related("space").contains(&"space".to_owned()));
    }

    #[test]
    fn morphology() {
        let lex = fixture();
        assert_eq!(lex.morph("satellites").as_deref(), Some("satellite"));
        assert_eq!(lex.morph("batteries"), None);
        assert_eq!(lex.morph("satellite"), None);
        assert!(lex.is_multiword("magnetic_field"));
        assert!(!lex.is_multiword("magnetic"));
    }

    #[test]
    fn lemma_normalization() {
        assert_eq!(to_lemma("Radiation  Tolerance"), "radiation_tolerance");
        assert_eq!(to_lemma("mass"), "mass");
    }
}
