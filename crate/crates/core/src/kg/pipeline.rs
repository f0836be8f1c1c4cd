use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{distinct_entities, Triple};
use crate::exec::Execution;
use crate::stemming::{all_stems, VqaCorpus};

/// Relations occurring more often than this are "frequent".
pub const DEFAULT_FREQUENT_THRESHOLD: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationStats {
    counts: BTreeMap<String, u64>,
    pub frequent_threshold: u64,
}

impl RelationStats {
    pub fn count(&self, relation: &str) -> u64 {
        self.counts.get(relation).copied().unwrap_or(0)
    }

    /// Strictly more occurrences than the threshold.
    pub fn is_frequent(&self, relation: &str) -> bool {
        self.count(relation) > self.frequent_threshold
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn frequent_relations(&self) -> Vec<&str> {
        self.counts
            .iter()
            .filter(|(_, &n)| n > self.frequent_threshold)
            .map(|(r, _)| r.as_str())
            .collect()
    }
}

pub fn compute_relation_frequencies(triples: &[Triple], threshold: u64) -> RelationStats {
    let mut counts = BTreeMap::new();
    for t in triples {
        *counts.entry(t.relation.clone()).or_insert(0) += 1;
    }
    RelationStats {
        counts,
        frequent_threshold: threshold,
    }
}

fn mentions_corpus_stem(text: &str, corpus: &VqaCorpus) -> bool {
    all_stems(text).iter().any(|s| corpus.contains(s))
}

/// Keeps triples whose head and tail each contain at least one corpus stem.
pub fn filter_by_corpus(triples: &[Triple], corpus: &VqaCorpus, exec: Execution) -> Vec<Triple> {
    let keep = exec.map(triples, |t| {
        mentions_corpus_stem(&t.head, corpus) && mentions_corpus_stem(&t.tail, corpus)
    });
    triples
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(t, _)| t.clone())
        .collect()
}

/// Within each (head, tail) group of two or more triples, removes the
/// frequent-relation triples when a non-frequent one is present. A group made
/// only of frequent relations keeps a single triple: the one with the least
/// frequent relation (lexicographically smallest on ties, first in input
/// order among equals). Survivors keep their input order.
pub fn dedup_frequent_relations(triples: &[Triple], stats: &RelationStats) -> Vec<Triple> {
    let mut groups: HashMap<(String, String), Vec<usize>> = HashMap::new();
    for (i, t) in triples.iter().enumerate() {
        groups.entry((t.head_key(), t.tail_key())).or_default().push(i);
    }

    let mut drop = vec![false; triples.len()];
    for members in groups.values().filter(|m| m.len() >= 2) {
        let any_rare = members
            .iter()
            .any(|&i| !stats.is_frequent(&triples[i].relation));
        if any_rare {
            for &i in members {
                if stats.is_frequent(&triples[i].relation) {
                    drop[i] = true;
                }
            }
        } else {
            let survivor = *members
                .iter()
                .min_by(|&&a, &&b| {
                    let (ra, rb) = (&triples[a].relation, &triples[b].relation);
                    stats
                        .count(ra)
                        .cmp(&stats.count(rb))
                        .then_with(|| ra.cmp(rb))
                        .then_with(|| a.cmp(&b))
                })
                .expect("non-empty group");
            for &i in members {
                drop[i] = i != survivor;
            }
        }
    }

    triples
        .iter()
        .zip(drop)
        .filter(|(_, d)| !d)
        .map(|(t, _)| t.clone())
        .collect()
}

/// A finished triple list with its counts.
#[derive(Debug, Clone, PartialEq)]
pub struct KgSnapshot {
    pub triples: Vec<Triple>,
    pub entity_count: usize,
    pub relation_count: usize,
    pub triple_count: usize,
}

impl KgSnapshot {
    pub fn new(triples: Vec<Triple>) -> Self {
        kg_stats(triples)
    }

    /// Recounts from the triple list and compares against the stored counts.
    pub fn counts_consistent(&self) -> bool {
        let fresh = kg_stats(self.triples.clone());
        (fresh.entity_count, fresh.relation_count, fresh.triple_count)
            == (self.entity_count, self.relation_count, self.triple_count)
    }

    /// `triples=N entities=E relations=R`
    pub fn stats_line(&self) -> String {
        format!(
            "triples={} entities={} relations={}",
            self.triple_count, self.entity_count, self.relation_count
        )
    }

    /// Runs corpus filtering, relation counting on the survivors, and
    /// frequent-relation deduplication over already-ingested triples.
    pub fn construct(
        ingested: Vec<Triple>,
        corpus: &VqaCorpus,
        frequent_threshold: u64,
        exec: Execution,
    ) -> Self {
        let filtered = filter_by_corpus(&ingested, corpus, exec);
        let stats = compute_relation_frequencies(&filtered, frequent_threshold);
        Self::new(dedup_frequent_relations(&filtered, &stats))
    }
}

pub fn kg_stats(triples: Vec<Triple>) -> KgSnapshot {
    let relations: BTreeSet<&str> = triples.iter().map(|t| t.relation.as_str()).collect();
    let relation_count = relations.len();
    KgSnapshot {
        entity_count: distinct_entities(&triples).len(),
        relation_count,
        triple_count: triples.len(),
        triples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stemming::Stem;

    fn t(h: &str, r: &str, tl: &str) -> Triple {
        Triple::new(h, r, tl)
    }

    fn corpus(words: &[&str]) -> VqaCorpus {
        VqaCorpus::from_counts(words.iter().map(|w| (Stem::from_raw(*w), 1)).collect())
    }

    #[test]
    fn frequency_is_strict() {
        let s = compute_relation_frequencies(&[t("a", "r", "b"), t("c", "r", "d")], 1);
        assert_eq!(s.count("r"), 2);
        assert!(s.is_frequent("r"));
        let s = compute_relation_frequencies(&[t("a", "r", "b")], 1);
        assert!(!s.is_frequent("r"));
    }

    #[test]
    fn ten_thousand_and_one_is_frequent() {
        let triples = vec![t("a", "related_to", "b"); 10_001];
        let s = compute_relation_frequencies(&triples, DEFAULT_FREQUENT_THRESHOLD);
        assert!(s.is_frequent("related_to"));
        let s = compute_relation_frequencies(&triples[..10_000], DEFAULT_FREQUENT_THRESHOLD);
        assert!(!s.is_frequent("related_to"));
    }

    #[test]
    fn corpus_filter_needs_both_ends() {
        let kg = [t("dog", "has_part", "whiskers")];
        assert_eq!(filter_by_corpus(&kg, &corpus(&["dog", "whisker"]), Execution::Sequential).len(), 1);
        assert!(filter_by_corpus(&kg, &corpus(&["dog"]), Execution::Sequential).is_empty());
        assert!(filter_by_corpus(&kg, &corpus(&[]), Execution::Sequential).is_empty());
    }

    #[test]
    fn corpus_filter_ignores_relation() {
        let kg = [t("dog", "whisker", "cat")];
        assert!(filter_by_corpus(&kg, &corpus(&["whisker", "dog"]), Execution::Sequential).is_empty());
    }

    #[test]
    fn mixed_group_drops_frequent_relation() {
        let mut kg = vec![t("person", "related_to", "hand"), t("person", "has_part", "hand")];
        kg.extend((0..5).map(|i| t(&format!("x{i}"), "related_to", "y")));
        let stats = compute_relation_frequencies(&kg, 3);
        let out = dedup_frequent_relations(&kg, &stats);
        assert_eq!(out.len(), 6);
        assert_eq!(out[0], t("person", "has_part", "hand"));
    }

    #[test]
    fn singleton_group_untouched() {
        let kg = vec![t("a", "r", "b"), t("c", "r", "d")];
        let stats = compute_relation_frequencies(&kg, 0);
        assert_eq!(dedup_frequent_relations(&kg, &stats), kg);
    }

    #[test]
    fn all_frequent_group_keeps_least_frequent() {
        let mut counts = BTreeMap::new();
        counts.insert("r20k".to_owned(), 20_000);
        counts.insert("r15k".to_owned(), 15_000);
        let stats = RelationStats { counts, frequent_threshold: 10_000 };
        let kg = vec![t("a", "r20k", "b"), t("A", "r15k", "b")];
        assert_eq!(dedup_frequent_relations(&kg, &stats), vec![t("A", "r15k", "b")]);
    }

    #[test]
    fn all_frequent_tie_takes_smallest_relation() {
        let mut counts = BTreeMap::new();
        counts.insert("zeta".to_owned(), 50);
        counts.insert("alpha".to_owned(), 50);
        let stats = RelationStats { counts, frequent_threshold: 10 };
        let kg = vec![t("a", "zeta", "b"), t("a", "alpha", "b"), t("a", "alpha", "b")];
        assert_eq!(dedup_frequent_relations(&kg, &stats), vec![t("a", "alpha", "b")]);
    }

    #[test]
    fn stats_counts() {
        let s = kg_stats(vec![t("a", "r", "b"), t("b", "r", "a")]);
        assert_eq!((s.triple_count, s.entity_count, s.relation_count), (2, 2, 1));
        let s = kg_stats(vec![]);
        assert_eq!((s.triple_count, s.entity_count, s.relation_count), (0, 0, 0));
        let s = kg_stats(vec![
            t("cat", "is_a", "animal"),
            t("dog", "is_a", "animal"),
            t("dog", "related_to", "cat"),
            t("Cat", "related_to", "animal"),
            t("animal", "is_a", "dog"),
        ]);
        assert_eq!((s.triple_count, s.entity_count, s.relation_count), (5, 3, 2));
        assert!(s.counts_consistent());
        assert_eq!(s.stats_line(), "triples=5 entities=3 relations=2");
    }
}
