//! Sentence and list patterns for values the numeric window misses.

use serde::{Deserialize, Serialize};

use super::numeric::{Token, UnitLexicon};

/// Coarse word class: enough to tell numerals and capitalized words apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseTag {
    Numeral,
    Unit,
    Capitalized,
    Other,
}

pub(crate) fn tag(token: &str, units: &UnitLexicon) -> CoarseTag {
    let t = token.trim_matches(|c: char| !c.is_alphanumeric() && c != '°' && c != '%');
    if t.chars().any(|c| c.is_ascii_digit()) {
        CoarseTag::Numeral
    } else if !t.is_empty() && units.lookup(t).is_some() {
        CoarseTag::Unit
    } else if t.chars().next().is_some_and(char::is_uppercase) {
        CoarseTag::Capitalized
    } else {
        CoarseTag::Other
    }
}

/// Tags every token inside `[start, end)`.
pub(crate) fn tag_span(
    tokens: &[Token],
    start: usize,
    end: usize,
    units: &UnitLexicon,
) -> Vec<CoarseTag> {
    tokens
        .iter()
        .filter(|t| t.start >= start && t.end <= end)
        .map(|t| tag(&t.text, units))
        .collect()
}

/// Char range of the line containing `pos`, without its newline.
pub(crate) fn line_bounds(chars: &[char], pos: usize) -> (usize, usize) {
    let start = chars[..pos.min(chars.len())]
        .iter()
        .rposition(|&c| c == '\n')
        .map_or(0, |i| i + 1);
    let end = chars[start..]
        .iter()
        .position(|&c| c == '\n')
        .map_or(chars.len(), |i| start + i);
    (start, end)
}

fn first_visible(chars: &[char], start: usize, end: usize) -> Option<char> {
    chars[start..end].iter().copied().find(|c| !c.is_whitespace())
}

/// From the keyword to the first full stop followed by a space and a
/// capital letter, or by the end of a line. A sentence may wrap onto lines
/// that start in lowercase.
pub(crate) fn sentence_pattern(chars: &[char], hit_start: usize, hit_end: usize) -> Option<(usize, usize)> {
    let (_, mut region_end) = line_bounds(chars, hit_start);
    while region_end < chars.len() {
        let (next_start, next_end) = line_bounds(chars, region_end + 1);
        if first_visible(chars, next_start, next_end).is_some_and(char::is_lowercase) {
            region_end = next_end;
        } else {
            break;
        }
    }
    let region_end = region_end.max(hit_end);
    (hit_end..region_end).find_map(|k| {
        if chars[k] != '.' {
            return None;
        }
        let at_eol = k + 1 >= chars.len() || chars[k + 1] == '\n';
        let before_capital =
            k + 2 < chars.len() && chars[k + 1] == ' ' && chars[k + 2].is_uppercase();
        (at_eol || before_capital).then_some((hit_start, k + 1))
    })
}

/// The keyword's line, when it and the following line both start with a
/// capital letter.
pub(crate) fn list_pattern(chars: &[char], hit_start: usize) -> Option<(usize, usize)> {
    let (start, end) = line_bounds(chars, hit_start);
    if end >= chars.len() {
        return None;
    }
    let (next_start, next_end) = line_bounds(chars, end + 1);
    let capital = |s, e| first_visible(chars, s, e).is_some_and(char::is_uppercase);
    if !(capital(start, end) && capital(next_start, next_end)) {
        return None;
    }
    let lead = chars[start..end].iter().take_while(|c| c.is_whitespace()).count();
    let trail = chars[start..end].iter().rev().take_while(|c| c.is_whitespace()).count();
    Some((start + lead, end - trail))
}
