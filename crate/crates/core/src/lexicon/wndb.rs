//! Reader for the plain-text WordNet distribution layout:
//! `index.<pos>` maps lemmas to synset offsets in sense order, `data.<pos>`
//! holds one synset per line keyed by byte offset, `<pos>.exc` lists
//! irregular inflections.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{Lexicon, LexiconError, Pos, Synset, SynsetId};

const FILES: [(Pos, &str); 4] = [
    (Pos::Noun, "noun"),
    (Pos::Verb, "verb"),
    (Pos::Adjective, "adj"),
    (Pos::Adverb, "adv"),
];

struct RawSynset {
    pos: Pos,
    offset: u64,
    words: Vec<String>,
    hypernyms: Vec<(Pos, u64)>,
    gloss: String,
}

fn read(path: &Path) -> Result<Option<String>, LexiconError> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(LexiconError::Io {
            path: path.to_owned(),
            source,
        }),
    }
}

fn is_license_line(line: &str) -> bool {
    line.starts_with(' ') || line.trim().is_empty()
}

fn strip_marker(word: &str) -> &str {
    // adjective position markers: (a), (p), (ip)
    match word.find('(') {
        Some(i) if word.ends_with(')') => &word[..i],
        _ => word,
    }
}

fn parse_data_line(file_pos: Pos, line: &str) -> Result<RawSynset, String> {
    let (head, gloss) = match line.split_once('|') {
        Some((h, g)) => (h, g.trim()),
        None => (line, ""),
    };
    let mut f = head.split_whitespace();
    let mut next = |what: &str| f.next().ok_or_else(|| format!("missing {what}"));
    let offset: u64 = next("offset")?.parse().map_err(|_| "bad offset")?;
    next("lex_filenum")?;
    let ss_type = next("ss_type")?;
    let pos = ss_type
        .chars()
        .next()
        .and_then(Pos::from_char)
        .ok_or_else(|| format!("bad ss_type {ss_type}"))?;
    if pos.file_pos() != file_pos {
        return Err(format!("ss_type {ss_type} in wrong data file"));
    }
    let w_cnt = usize::from_str_radix(next("w_cnt")?, 16).map_err(|_| "bad w_cnt")?;
    let mut words = Vec::with_capacity(w_cnt);
    for _ in 0..w_cnt {
        words.push(strip_marker(next("word")?).to_lowercase());
        next("lex_id")?;
    }
    let p_cnt: usize = next("p_cnt")?.parse().map_err(|_| "bad p_cnt")?;
    let mut hypernyms = Vec::new();
    for _ in 0..p_cnt {
        let symbol = next("pointer symbol")?;
        let target: u64 = next("pointer offset")?
            .parse()
            .map_err(|_| "bad pointer offset")?;
        let tpos = next("pointer pos")?
            .chars()
            .next()
            .and_then(Pos::from_char)
            .ok_or("bad pointer pos")?;
        next("source/target")?;
        if symbol == "@" || symbol == "@i" {
            hypernyms.push((tpos.file_pos(), target));
        }
    }
    if words.is_empty() {
        return Err("synset without words".into());
    }
    Ok(RawSynset {
        pos,
        offset,
        words,
        hypernyms,
        gloss: gloss.to_owned(),
    })
}

/// lemma -> offsets in sense order
fn parse_index(
    file: &Path,
    text: &str,
) -> Result<Vec<(String, Vec<u64>)>, LexiconError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if is_license_line(line) {
            continue;
        }
        let corrupt = |reason: &str| LexiconError::Corrupt {
            file: file.to_owned(),
            line: i + 1,
            reason: reason.to_owned(),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(corrupt("short index line"));
        }
        let synset_cnt: usize = fields[2].parse().map_err(|_| corrupt("bad synset_cnt"))?;
        let p_cnt: usize = fields[3].parse().map_err(|_| corrupt("bad p_cnt"))?;
        let first_offset = 4 + p_cnt + 2;
        if fields.len() < first_offset + synset_cnt {
            return Err(corrupt("index line lists fewer offsets than synset_cnt"));
        }
        let offsets = fields[first_offset..first_offset + synset_cnt]
            .iter()
            .map(|o| o.parse::<u64>().map_err(|_| corrupt("bad offset")))
            .collect::<Result<Vec<_>, _>>()?;
        out.push((fields[0].to_lowercase(), offsets));
    }
    Ok(out)
}

pub(super) fn load(dir: &Path) -> Result<Lexicon, LexiconError> {
    let mut raws: Vec<RawSynset> = Vec::new();
    let mut index: Vec<(Pos, String, Vec<u64>)> = Vec::new();
    let mut exceptions = HashMap::new();
    let mut found_any = false;

    for (pos, name) in FILES {
        let data_path = dir.join(format!("data.{name}"));
        let index_path = dir.join(format!("index.{name}"));
        let Some(data) = read(&data_path)? else {
            continue;
        };
        found_any = true;
        for (i, line) in data.lines().enumerate() {
            if is_license_line(line) {
                continue;
            }
            let raw = parse_data_line(pos, line).map_err(|reason| LexiconError::Corrupt {
                file: data_path.clone(),
                line: i + 1,
                reason,
            })?;
            raws.push(raw);
        }
        let index_text = read(&index_path)?.ok_or_else(|| LexiconError::Corrupt {
            file: index_path.clone(),
            line: 0,
            reason: "data file present but index file missing".into(),
        })?;
        for (lemma, offsets) in parse_index(&index_path, &index_text)? {
            index.push((pos, lemma, offsets));
        }
        if let Some(exc) = read(&dir.join(format!("{name}.exc")))? {
            if pos == Pos::Noun {
                for line in exc.lines() {
                    let mut f = line.split_whitespace();
                    if let (Some(inflected), Some(base)) = (f.next(), f.next()) {
                        exceptions.insert(inflected.to_owned(), base.to_owned());
                    }
                }
            }
        }
    }
    if !found_any {
        return Err(LexiconError::MissingDatabase(dir.to_owned()));
    }

    let position: HashMap<(Pos, u64), usize> = raws
        .iter()
        .enumerate()
        .map(|(i, r)| ((r.pos.file_pos(), r.offset), i))
        .collect();
    let sense_rank: HashMap<(Pos, &str), &Vec<u64>> = index
        .iter()
        .map(|(p, l, o)| ((*p, l.as_str()), o))
        .collect();

    let mut ids = Vec::with_capacity(raws.len());
    for r in &raws {
        let name = &r.words[0];
        let sense = sense_rank
            .get(&(r.pos.file_pos(), name.as_str()))
            .and_then(|offs| offs.iter().position(|&o| o == r.offset))
            .ok_or_else(|| LexiconError::Corrupt {
                file: dir.join("index"),
                line: 0,
                reason: format!("synset {:08} not listed under its head word {name}", r.offset),
            })?;
        ids.push(SynsetId::new(name.clone(), r.pos, sense as u32 + 1));
    }

    let mut hypernym_idx = Vec::with_capacity(raws.len());
    for r in &raws {
        let targets = r
            .hypernyms
            .iter()
            .map(|key| {
                position.get(key).copied().ok_or_else(|| LexiconError::Corrupt {
                    file: dir.to_owned(),
                    line: 0,
                    reason: format!("dangling hypernym pointer {:08}", key.1),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        hypernym_idx.push(targets);
    }

    let depths = compute_depths(&hypernym_idx).ok_or_else(|| LexiconError::Corrupt {
        file: dir.to_owned(),
        line: 0,
        reason: "hypernym cycle".into(),
    })?;

    let synsets: Vec<Synset> = raws
        .into_iter()
        .enumerate()
        .map(|(i, r)| Synset {
            id: ids[i].clone(),
            gloss: r.gloss,
            lemmas: r.words,
            hypernyms: hypernym_idx[i].iter().map(|&h| ids[h].clone()).collect(),
            depth: depths[i],
        })
        .collect();

    let by_id = synsets
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.clone(), i))
        .collect();
    let mut by_lemma: HashMap<String, Vec<usize>> = HashMap::new();
    for (pos, lemma, offsets) in &index {
        let entry = by_lemma.entry(lemma.clone()).or_default();
        for o in offsets {
            if let Some(&i) = position.get(&(*pos, *o)) {
                entry.push(i);
            }
        }
    }

    Ok(Lexicon {
        synsets,
        hypernym_idx,
        by_id,
        by_lemma,
        exceptions,
    })
}

/// Minimum root-path node count per synset; `None` on a cycle.
fn compute_depths(hypernyms: &[Vec<usize>]) -> Option<Vec<u32>> {
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        New,
        Active,
        Done(u32),
    }
    let mut state = vec![State::New; hypernyms.len()];
    for start in 0..hypernyms.len() {
        if state[start] != State::New {
            continue;
        }
        // iterative post-order DFS
        let mut stack = vec![(start, 0usize)];
        state[start] = State::Active;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(&h) = hypernyms[node].get(*next) {
                *next += 1;
                match state[h] {
                    State::New => {
                        state[h] = State::Active;
                        stack.push((h, 0));
                    }
                    State::Active => return None,
                    State::Done(_) => {}
                }
            } else {
                let depth = hypernyms[node]
                    .iter()
                    .map(|&h| match state[h] {
                        State::Done(d) => d,
                        _ => unreachable!("parents finish before children"),
                    })
                    .min()
                    .map_or(1, |d| d + 1);
                state[node] = State::Done(depth);
                stack.pop();
            }
        }
    }
    Some(
        state
            .into_iter()
            .map(|s| match s {
                State::Done(d) => d,
                _ => unreachable!(),
            })
            .collect(),
    )
}
