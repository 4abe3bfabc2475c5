//! Domain knowledge extraction: TF-IDF topic selection followed by
//! graph-based word-sense disambiguation of the topics.
//!
//! Every candidate sense of every topic becomes a vertex; vertices of
//! different topics are joined by edges weighted with their semantic
//! similarity. For each topic the sense with the largest sum of adjacent edge
//! weights wins.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{corpus_stats, tokenize, BagOfWords, CorpusStats, Document, Term};
use crate::lexicon::{Lexicon, Pos, SynsetId};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DkeConfig {
    pub max_arity: usize,
    pub top_k: usize,
    pub min_score: f64,
    pub senses_per_topic: usize,
}

impl Default for DkeConfig {
    fn default() -> Self {
        DkeConfig {
            max_arity: crate::corpus::DEFAULT_MAX_ARITY,
            top_k: 1000,
            min_score: 0.0,
            senses_per_topic: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCandidate {
    pub term: Term,
    pub score: f64,
}

/// A topic bound to its disambiguated sense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainConcept {
    pub topic: String,
    pub synset: SynsetId,
    pub gloss: String,
    /// Member lemmas of the chosen synset.
    pub lemmas: Vec<String>,
    pub accumulated_weight: f64,
}

/// Similarity between two senses, in `[0, 1]`.
pub trait SynsetSimilarity {
    fn similarity(&self, a: &SynsetId, b: &SynsetId) -> f64;
}

impl SynsetSimilarity for Lexicon {
    fn similarity(&self, a: &SynsetId, b: &SynsetId) -> f64 {
        self.wup_similarity(a, b)
    }
}

/// Mean TF-IDF over the documents containing each term, with
/// `tf = count / kept tokens` and `idf = ln(N / df)`. Sorted by descending
/// score, ties by lemma.
pub fn compute_tfidf(stats: &CorpusStats, bags: &[BagOfWords]) -> Vec<TopicCandidate> {
    let n = stats.document_count as f64;
    let mut out: Vec<TopicCandidate> = stats
        .terms
        .iter()
        .map(|(lemma, stat)| {
            let idf = (n / stat.document_frequency as f64).ln();
            let tf_sum: f64 = bags
                .iter()
                .filter(|b| b.token_count > 0)
                .map(|b| b.count(lemma) as f64 / b.token_count as f64)
                .sum();
            TopicCandidate {
                term: Term::from_lemma(lemma),
                score: tf_sum * idf / stat.document_frequency as f64,
            }
        })
        .collect();
    out.sort_by(rank_order);
    out
}

fn rank_order(a: &TopicCandidate, b: &TopicCandidate) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.term.lemma.cmp(&b.term.lemma))
}

/// Top `k` candidates scoring above `min_score` that have at least one sense
/// in the lexicon.
pub fn select_topics(
    candidates: &[TopicCandidate],
    k: usize,
    min_score: f64,
    lexicon: &Lexicon,
) -> Vec<TopicCandidate> {
    let mut ranked: Vec<&TopicCandidate> = candidates
        .iter()
        .filter(|c| c.score > min_score && lexicon.contains_lemma(&c.term.lemma))
        .collect();
    ranked.sort_by(|a, b| rank_order(a, b));
    ranked.into_iter().take(k).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseVertex {
    pub synset: SynsetId,
    pub gloss: String,
    pub lemmas: Vec<String>,
}

impl SenseVertex {
    pub fn bare(synset: SynsetId) -> Self {
        SenseVertex {
            synset,
            gloss: String::new(),
            lemmas: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSenses {
    pub topic: String,
    pub senses: Vec<SenseVertex>,
}

/// Index of a vertex: (topic group, sense within the group).
pub type VertexRef = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: VertexRef,
    pub b: VertexRef,
    pub weight: f64,
}

/// Complete multipartite graph over the senses of the topics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisambiguationGraph {
    pub groups: Vec<TopicSenses>,
    pub edges: Vec<Edge>,
    /// Cross-topic pairs evaluated, including those pruned at weight 0.
    pub candidate_pairs: usize,
}

impl DisambiguationGraph {
    pub fn vertex(&self, v: VertexRef) -> &SenseVertex {
        &self.groups[v.0].senses[v.1]
    }

    /// Sum of adjacent edge weights per vertex, shaped like `groups`.
    pub fn accumulated_weights(&self) -> Vec<Vec<f64>> {
        let mut acc: Vec<Vec<f64>> = self
            .groups
            .iter()
            .map(|g| vec![0.0; g.senses.len()])
            .collect();
        for e in &self.edges {
            acc[e.a.0][e.a.1] += e.weight;
            acc[e.b.0][e.b.1] += e.weight;
        }
        acc
    }
}

/// Up to `cap` senses per topic in database order. Nouns are preferred; a
/// topic without noun senses falls back to every part of speech.
pub fn candidate_senses(
    topics: &[TopicCandidate],
    lexicon: &Lexicon,
    cap: usize,
) -> Vec<TopicSenses> {
    topics
        .iter()
        .filter_map(|t| {
            let mut senses = lexicon.synsets_of(&t.term.lemma, Some(Pos::Noun));
            if senses.is_empty() {
                senses = lexicon.synsets_of(&t.term.lemma, None);
            }
            if senses.is_empty() {
                return None;
            }
            Some(TopicSenses {
                topic: t.term.lemma.clone(),
                senses: senses
                    .into_iter()
                    .take(cap.max(1))
                    .map(|s| SenseVertex {
                        synset: s.id.clone(),
                        gloss: s.gloss.clone(),
                        lemmas: s.lemmas.clone(),
                    })
                    .collect(),
            })
        })
        .collect()
}

/// Weighs every pair of senses belonging to different topics. Weights are
/// clamped to `[0, 1]` and zero-weight edges are dropped.
pub fn build_graph_with(
    groups: Vec<TopicSenses>,
    similarity: &dyn SynsetSimilarity,
) -> DisambiguationGraph {
    let mut edges = Vec::new();
    let mut candidate_pairs = 0;
    for (ga, group_a) in groups.iter().enumerate() {
        for (gb, group_b) in groups.iter().enumerate().skip(ga + 1) {
            for (sa, va) in group_a.senses.iter().enumerate() {
                for (sb, vb) in group_b.senses.iter().enumerate() {
                    candidate_pairs += 1;
                    let w = similarity.similarity(&va.synset, &vb.synset);
                    let w = if w.is_finite() { w.clamp(0.0, 1.0) } else { 0.0 };
                    if w > 0.0 {
                        edges.push(Edge {
                            a: (ga, sa),
                            b: (gb, sb),
                            weight: w,
                        });
                    }
                }
            }
        }
    }
    DisambiguationGraph {
        groups,
        edges,
        candidate_pairs,
    }
}

pub fn build_graph(
    topics: &[TopicCandidate],
    lexicon: &Lexicon,
    senses_per_topic: usize,
) -> DisambiguationGraph {
    build_graph_with(candidate_senses(topics, lexicon, senses_per_topic), lexicon)
}

/// Picks, per topic, the sense with the highest accumulated weight. Ties go
/// to the lowest sense number, then the smallest synset id.
pub fn disambiguate(graph: &DisambiguationGraph) -> Vec<DomainConcept> {
    let acc = graph.accumulated_weights();
    graph
        .groups
        .iter()
        .zip(&acc)
        .filter(|(g, _)| !g.senses.is_empty())
        .map(|(group, weights)| {
            let mut order: Vec<usize> = (0..group.senses.len()).collect();
            order.sort_by(|&i, &j| {
                let (a, b) = (&group.senses[i].synset, &group.senses[j].synset);
                a.sense.cmp(&b.sense).then_with(|| a.cmp(b))
            });
            let best = order
                .iter()
                .copied()
                .fold(None::<usize>, |best, i| match best {
                    Some(b) if weights[b] >= weights[i] => Some(b),
                    _ => Some(i),
                })
                .expect("non-empty group");
            let v = &group.senses[best];
            DomainConcept {
                topic: group.topic.clone(),
                synset: v.synset.clone(),
                gloss: v.gloss.clone(),
                lemmas: v.lemmas.clone(),
                accumulated_weight: weights[best],
            }
        })
        .collect()
}

/// Ranked topics of a corpus.
pub fn rank_topics(
    docs: &[Document],
    lexicon: &Lexicon,
    config: &DkeConfig,
) -> Result<Vec<TopicCandidate>, Error> {
    let bags: Vec<BagOfWords> = docs
        .iter()
        .map(|d| tokenize(d, config.max_arity, lexicon))
        .collect();
    let stats = corpus_stats(&bags)?;
    let scored = compute_tfidf(&stats, &bags);
    Ok(select_topics(
        &scored,
        config.top_k,
        config.min_score,
        lexicon,
    ))
}

/// Tokenize, score, select topics, build the sense graph and disambiguate.
pub fn extract_domain_knowledge(
    docs: &[Document],
    lexicon: &Lexicon,
    config: &DkeConfig,
) -> Result<Vec<DomainConcept>, Error> {
    let topics = rank_topics(docs, lexicon, config)?;
    let graph = build_graph(&topics, lexicon, config.senses_per_topic);
    Ok(disambiguate(&graph))
}

#[derive(Debug, Serialize, Deserialize)]
struct ConceptsFile {
    format: String,
    version: u32,
    concepts: Vec<DomainConcept>,
}

const CONCEPTS_FORMAT: &str = "contron-concepts";

/// Writes concepts as a JSON document tagged with its format name.
pub fn write_concepts(path: &Path, concepts: &[DomainConcept]) -> Result<(), Error> {
    let file = ConceptsFile {
        format: CONCEPTS_FORMAT.into(),
        version: 1,
        concepts: concepts.to_vec(),
    };
    crate::io::write_atomic(path, &crate::io::to_pretty_json(&file)?)
}

pub fn read_concepts(path: &Path) -> Result<Vec<DomainConcept>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ConceptsFile =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    if file.format != CONCEPTS_FORMAT {
        return Err(Error::format(
            path,
            format!("expected format {CONCEPTS_FORMAT}, found {}", file.format),
        ));
    }
    Ok(file.concepts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    struct Table(HashMap<(String, String), f64>);

    impl Table {
        fn new(entries: &[(&str, &str, f64)]) -> Self {
            let mut m = HashMap::new();
            for &(a, b, w) in entries {
                m.insert((a.to_owned(), b.to_owned()), w);
                m.insert((b.to_owned(), a.to_owned()), w);
            }
            Table(m)
        }
    }

    impl SynsetSimilarity for Table {
        fn similarity(&self, a: &SynsetId, b: &SynsetId) -> f64 {
            self.0
                .get(&(a.to_string(), b.to_string()))
                .copied()
                .unwrap_or(0.0)
        }
    }

    fn group(topic: &str, ids: &[&str]) -> TopicSenses {
        TopicSenses {
            topic: topic.into(),
            senses: ids
                .iter()
                .map(|s| SenseVertex::bare(s.parse().unwrap()))
                .collect(),
        }
    }

    #[test]
    fn single_topic_has_no_edges_and_first_sense_wins() {
        let g = build_graph_with(
            vec![group("space", &["space.n.02", "space.n.01"])],
            &Table::new(&[]),
        );
        assert!(g.edges.is_empty());
        let c = disambiguate(&g);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].synset.to_string(), "space.n.01");
        assert_eq!(c[0].accumulated_weight, 0.0);
    }

    #[test]
    fn two_by_three_gives_six_candidate_pairs() {
        struct Half;
        impl SynsetSimilarity for Half {
            fn similarity(&self, _: &SynsetId, _: &SynsetId) -> f64 {
                0.5
            }
        }
        let g = build_graph_with(
            vec![
                group("a", &["a.n.01", "a.n.02"]),
                group("b", &["b.n.01", "b.n.02", "b.n.03"]),
            ],
            &Half,
        );
        assert_eq!(g.candidate_pairs, 6);
        assert_eq!(g.edges.len(), 6);
        assert!(g.edges.iter().all(|e| e.a.0 != e.b.0));
    }

    #[test]
    fn zero_weight_edges_are_pruned() {
        let t = Table::new(&[("a.n.01", "b.n.01", 0.4)]);
        let g = build_graph_with(
            vec![group("a", &["a.n.01", "a.n.02"]), group("b", &["b.n.01"])],
            &t,
        );
        assert_eq!(g.candidate_pairs, 2);
        assert_eq!(g.edges.len(), 1);
    }

    #[test]
    fn tie_prefers_lowest_sense_number() {
        let t = Table::new(&[("a.n.02", "b.n.01", 0.5), ("a.n.01", "b.n.01", 0.5)]);
        let g = build_graph_with(
            vec![group("a", &["a.n.02", "a.n.01"]), group("b", &["b.n.01"])],
            &t,
        );
        assert_eq!(disambiguate(&g)[0].synset.to_string(), "a.n.01");
    }

    #[test]
    fn ubiquitous_term_scores_zero() {
        use crate::corpus::{tokenize_text, NoMultiwords};
        let bags = vec![
            tokenize_text("a", "power sensor", 1, &NoMultiwords),
            tokenize_text("b", "power antenna", 1, &NoMultiwords),
        ];
        let stats = corpus_stats(&bags).unwrap();
        let scores = compute_tfidf(&stats, &bags);
        let power = scores.iter().find(|c| c.term.lemma == "power").unwrap();
        assert_eq!(power.score, 0.0);
        let sensor = scores.iter().find(|c| c.term.lemma == "sensor").unwrap();
        assert!((sensor.score - 0.5 * 2f64.ln()).abs() < 1e-12);

        let single = vec![tokenize_text("a", "power sensor", 1, &NoMultiwords)];
        let stats = corpus_stats(&single).unwrap();
        assert!(compute_tfidf(&stats, &single).iter().all(|c| c.score == 0.0));
    }
}
