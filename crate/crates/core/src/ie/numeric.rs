//! Numbers with optional units, read from whitespace tokens.

use std::collections::HashMap;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::Error;

const BUNDLED_UNITS: &str = include_str!("../../data/units.tsv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitInfo {
    pub canonical: String,
    pub dimension: String,
}

/// Unit strings mapped to a canonical unit and a dimension. Lookup tries the
/// exact surface first, then a lowercase match.
#[derive(Debug, Clone, Default)]
pub struct UnitLexicon {
    exact: HashMap<String, UnitInfo>,
    folded: HashMap<String, UnitInfo>,
}

static BUNDLED: LazyLock<UnitLexicon> =
    LazyLock::new(|| UnitLexicon::parse(BUNDLED_UNITS).expect("bundled unit table parses"));

impl UnitLexicon {
    pub fn bundled() -> &'static UnitLexicon {
        &BUNDLED
    }

    /// Parses `unit<TAB>canonical<TAB>dimension` lines; `#` starts a comment
    /// line. Earlier rows win on duplicates.
    pub fn parse(text: &str) -> Result<UnitLexicon, String> {
        let mut lex = UnitLexicon::default();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [unit, canonical, dimension] = cols[..] else {
                return Err(format!("line {}: expected 3 tab-separated columns", n + 1));
            };
            let info = UnitInfo {
                canonical: canonical.to_owned(),
                dimension: dimension.to_owned(),
            };
            lex.exact.entry(unit.to_owned()).or_insert_with(|| info.clone());
            lex.folded.entry(unit.to_lowercase()).or_insert(info);
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<UnitLexicon, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        UnitLexicon::parse(&text).map_err(|r| Error::format(path, r))
    }

    pub fn lookup(&self, unit: &str) -> Option<&UnitInfo> {
        self.exact
            .get(unit)
            .or_else(|| self.folded.get(&unit.to_lowercase()))
    }
}

static NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^[+\-−]?(?:\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?|\.\d+)(?:[eE][+\-−]?\d+)?",
    )
    .unwrap()
});

/// Parses a decimal at the start of `s`: optional sign, thousands
/// separators, fraction and exponent. Returns the value and the number of
/// chars consumed.
pub fn parse_number_prefix(s: &str) -> Option<(f64, usize)> {
    let m = NUMBER.find(s)?;
    let digits: String = m
        .as_str()
        .chars()
        .filter(|&c| c != ',')
        .map(|c| if c == '−' { '-' } else { c })
        .collect();
    let value: f64 = digits.parse().ok()?;
    value.is_finite().then(|| (value, m.as_str().chars().count()))
}

/// A whitespace-delimited token with char offsets into the document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub line: usize,
    /// The token closes a sentence.
    pub sentence_end: bool,
}

pub(crate) fn tokenize(chars: &[char]) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut line = 0;
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            if chars[i] == '\n' {
                line += 1;
            }
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let text: String = chars[start..i].iter().collect();
        let tail = text.trim_end_matches(['"', '\'', ')', ']']);
        tokens.push(Token {
            start,
            end: i,
            sentence_end: tail.ends_with(['.', '!', '?']),
            text,
            line,
        });
    }
    tokens
}

/// Token `j` and its successor belong to the same line and sentence.
pub(crate) fn joined(tokens: &[Token], j: usize) -> bool {
    j + 1 < tokens.len() && !tokens[j].sentence_end && tokens[j].line == tokens[j + 1].line
}

const LEADING: &[char] = &['(', '[', '{', ':', '=', '<', '>', '≤', '≥', '≈', '~'];
const TRAILING: &[char] = &[',', ';', ':', ')', ']', '}', '.'];

/// Char offset and text of a token without wrapping punctuation.
fn core(tok: &Token) -> (usize, &str) {
    let s = tok.text.trim_start_matches(LEADING);
    let offset = tok.text.chars().count() - s.chars().count();
    (tok.start + offset, s.trim_end_matches(TRAILING))
}

fn unit_token(tok: &Token, units: &UnitLexicon) -> Option<(String, usize)> {
    let (start, s) = core(tok);
    units
        .lookup(s)
        .map(|_| (s.to_owned(), start + s.chars().count()))
}

fn is_range_connector(s: &str) -> bool {
    matches!(s, "to" | "-" | "–" | "—" | "..." | "~" | "±" | "+/-" | "x" | "×")
}

/// A numeric value found in the token stream.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct NumericSpan {
    pub start: usize,
    pub end: usize,
    pub magnitude: f64,
    pub unit: Option<String>,
}

/// Reads a number starting at token `i`, extended by a range or tolerance
/// and followed by an optional unit, never crossing a sentence or line.
pub(crate) fn scan_value(tokens: &[Token], i: usize, units: &UnitLexicon) -> Option<NumericSpan> {
    let (start, text) = core(&tokens[i]);
    let plus_minus = text.starts_with('±');
    let body = text.trim_start_matches('±');
    let (magnitude, len) = parse_number_prefix(body)?;
    let lead = usize::from(plus_minus);
    let mut end = start + lead + len;
    let rest: String = body.chars().skip(len).collect();
    let mut unit = None;
    let mut last = i;

    if !rest.is_empty() {
        if units.lookup(&rest).is_some() {
            end += rest.chars().count();
            unit = Some(rest);
        } else if let Some(tail) = glued_range(&rest) {
            end += rest.chars().count() - tail.chars().count();
            if !tail.is_empty() && units.lookup(&tail).is_some() {
                end += tail.chars().count();
                unit = Some(tail);
            }
        } else if has_word(&rest) {
            // a compound such as "3-axis" is not a value
            return None;
        } else {
            end = start + text.chars().count();
        }
    } else if joined(tokens, i) && is_range_connector(&tokens[i + 1].text) && joined(tokens, i + 1) {
        // "a to b", or "a x b x c" for sizes
        while unit.is_none()
            && joined(tokens, last)
            && is_range_connector(&tokens[last + 1].text)
            && joined(tokens, last + 1)
        {
            let (s2, t2) = core(&tokens[last + 2]);
            let Some((_, l2)) = parse_number_prefix(t2.trim_start_matches('±')) else {
                break;
            };
            let lead2 = t2.chars().count() - t2.trim_start_matches('±').chars().count();
            let tail: String = t2.chars().skip(lead2 + l2).collect();
            if !tail.is_empty() && units.lookup(&tail).is_none() {
                break;
            }
            last += 2;
            end = s2 + lead2 + l2;
            if !tail.is_empty() {
                end += tail.chars().count();
                unit = Some(tail);
            }
            if !matches!(tokens[last - 1].text.as_str(), "x" | "×") {
                break;
            }
        }
    } else if joined(tokens, i) && tokens[i + 1].text.starts_with('±') {
        let (s2, t2) = core(&tokens[i + 1]);
        if let Some((_, l2)) = parse_number_prefix(t2.trim_start_matches('±')) {
            last = i + 1;
            end = s2 + 1 + l2;
            let tail: String = t2.chars().skip(1 + l2).collect();
            if !tail.is_empty() && units.lookup(&tail).is_some() {
                end += tail.chars().count();
                unit = Some(tail);
            }
        }
    }

    if unit.is_none() && joined(tokens, last) {
        if joined(tokens, last + 1) {
            let (_, a) = core(&tokens[last + 1]);
            let (_, b) = core(&tokens[last + 2]);
            let pair = format!("{a} {b}");
            if units.lookup(&pair).is_some() {
                end = core(&tokens[last + 2]).0 + b.chars().count();
                unit = Some(pair);
            }
        }
        if unit.is_none() {
            if let Some((u, u_end)) = unit_token(&tokens[last + 1], units) {
                end = u_end;
                unit = Some(u);
            }
        }
    }
    Some(NumericSpan {
        start,
        end,
        magnitude,
        unit,
    })
}

fn has_word(s: &str) -> bool {
    let mut run = 0;
    for c in s.chars() {
        run = if c.is_alphabetic() { run + 1 } else { 0 };
        if run >= 2 {
            return true;
        }
    }
    false
}

/// What follows the second number of a glued range such as `-60°C`.
fn glued_range(rest: &str) -> Option<String> {
    let after = ["...", "-", "–", "—", "~", "/"]
        .iter()
        .find_map(|p| rest.strip_prefix(p))?;
    let (_, len) = parse_number_prefix(after)?;
    Some(after.chars().skip(len).collect())
}
