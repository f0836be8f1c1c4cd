use std::collections::{BTreeMap, BTreeSet};

use kgvqa_core::evaluation::{em_match, inc_match, normalize_answer, stem_match};
use kgvqa_core::kg::{
    compute_relation_frequencies, dedup_frequent_relations, entity_key, filter_by_corpus, kg_stats, Triple,
};
use kgvqa_core::query::{assemble_contexts, attention_pair_count, image_text, AttentionMode};
use kgvqa_core::retrieval::{decode_index as decode, encode_index as encode, Bm25Index, Bm25Params};
use kgvqa_core::signal::{
    aggregate_attention, kl_loss, retriever_distribution, target_distribution, AttentionRecord, FactSpan,
    LayerScope, SignalConfig, TokenAgg,
};
use kgvqa_core::stemming::{all_stems, build_vqa_corpus, Stem, StopWordPolicy, VqaCorpus};
use kgvqa_core::verbalizer::{segment_relation, Dictionary, DEFAULT_DICTIONARY};
use kgvqa_core::verbalizer::{FactId, FactSentence};
use kgvqa_core::query::VqaExample;
use kgvqa_core::evaluation::AnswerSet;
use kgvqa_core::Execution;
use proptest::prelude::*;

const WORDS: &[&str] = &[
    "cat", "cats", "dog", "bone", "oven", "pizza", "red", "apple", "tree", "running", "runner", "hand",
    "person", "fruit", "banana", "the", "in", "of",
];

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(WORDS).prop_map(str::to_owned)
}

fn phrase() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 1..4).prop_map(|w| w.join(" "))
}

fn triple() -> impl Strategy<Value = Triple> {
    (phrase(), prop::sample::select(&["related_to", "is_a", "has_part", "at_location"][..]), phrase())
        .prop_map(|(h, r, t)| Triple::new(&h, r, &t))
}

fn corpus() -> impl Strategy<Value = VqaCorpus> {
    prop::collection::btree_set(word(), 0..8).prop_map(|ws| {
        VqaCorpus::from_counts(ws.iter().map(|w| (Stem::of(w), 1)).collect())
    })
}

proptest! {
    #[test]
    fn corpus_filter_is_idempotent_and_sound(ts in prop::collection::vec(triple(), 0..40), c in corpus()) {
        let once = filter_by_corpus(&ts, &c, Execution::Parallel);
        prop_assert_eq!(&filter_by_corpus(&once, &c, Execution::Sequential), &once);
        for t in &once {
            prop_assert!(all_stems(&t.head).iter().any(|s| c.contains(s)));
            prop_assert!(all_stems(&t.tail).iter().any(|s| c.contains(s)));
        }
        prop_assert_eq!(once.len(), ts.iter().filter(|t| {
            all_stems(&t.head).iter().any(|s| c.contains(s)) && all_stems(&t.tail).iter().any(|s| c.contains(s))
        }).count());
    }

    #[test]
    fn dedup_invariants(ts in prop::collection::vec(triple(), 0..60), threshold in 0u64..8) {
        let stats = compute_relation_frequencies(&ts, threshold);
        let out = dedup_frequent_relations(&ts, &stats);
        let mut groups: BTreeMap<(String, String), Vec<&Triple>> = BTreeMap::new();
        for t in &out {
            groups.entry((t.head_key(), t.tail_key())).or_default().push(t);
        }
        for g in groups.values() {
            let frequent = g.iter().filter(|t| stats.is_frequent(&t.relation)).count();
            prop_assert!(frequent == 0 || g.len() == 1);
        }
        // every input pair survives, and non-frequent triples are never dropped
        let pairs_in: BTreeSet<_> = ts.iter().map(|t| (t.head_key(), t.tail_key())).collect();
        let pairs_out: BTreeSet<_> = groups.keys().cloned().collect();
        prop_assert_eq!(pairs_in, pairs_out);
        for t in ts.iter().filter(|t| !stats.is_frequent(&t.relation)) {
            prop_assert!(out.contains(t));
        }
        prop_assert_eq!(dedup_frequent_relations(&out, &stats), out);
    }

    #[test]
    fn stats_recount(ts in prop::collection::vec(triple(), 0..40)) {
        let snap = kg_stats(ts.clone());
        let ents: BTreeSet<String> = ts.iter().flat_map(|t| [entity_key(&t.head), entity_key(&t.tail)]).collect();
        let rels: BTreeSet<&str> = ts.iter().map(|t| t.relation.as_str()).collect();
        prop_assert_eq!(snap.entity_count, ents.len());
        prop_assert_eq!(snap.relation_count, rels.len());
        prop_assert_eq!(snap.triple_count, ts.len());
        prop_assert!(snap.counts_consistent());
    }

    #[test]
    fn segmentation_preserves_letters(rel in "[A-Za-z_ ]{0,24}") {
        let dict = Dictionary::parse(DEFAULT_DICTIONARY);
        let parts = segment_relation(&rel, &dict);
        let letters: String = rel.chars().filter(|c| c.is_ascii_alphabetic()).collect::<String>().to_lowercase();
        prop_assert_eq!(parts.concat(), letters);
        prop_assert!(parts.iter().all(|p| !p.is_empty()));
    }

    #[test]
    fn corpus_counts_every_stem_occurrence(qs in prop::collection::vec((phrase(), phrase(), phrase()), 0..10)) {
        let policy = StopWordPolicy::default();
        let data: Vec<VqaExample> = qs.iter().enumerate().map(|(i, (q, a, c))| VqaExample {
            example_id: i.to_string(),
            question: q.clone(),
            caption: c.clone(),
            ocr_text: String::new(),
            answers: AnswerSet::from_raw_answers([a.as_str()]),
        }).collect();
        let corpus = build_vqa_corpus(&data, &policy, Execution::Parallel);
        prop_assert_eq!(&corpus, &build_vqa_corpus(&data, &policy, Execution::Sequential));
        let mut want: BTreeMap<String, u64> = BTreeMap::new();
        for (q, a, c) in &qs {
            for w in format!("{q} {a} {c}").split_whitespace() {
                if !policy.removes(w) {
                    *want.entry(kgvqa_core::stemming::porter_stem(w)).or_default() += 1;
                }
            }
        }
        prop_assert_eq!(corpus.len(), want.len());
        for (s, n) in want {
            prop_assert_eq!(corpus.frequency(&s), n);
        }
    }

    #[test]
    fn metric_hierarchy(a in prop::collection::vec(word(), 0..4), g in prop::collection::vec(word(), 0..4)) {
        let policy = StopWordPolicy::default();
        let a = normalize_answer(&a.join(" "), &policy);
        let g = normalize_answer(&g.join(" "), &policy);
        let (em, inc, st) = (em_match(&a, &g), inc_match(&a, &g), stem_match(&a, &g));
        prop_assert!(!em || inc);
        prop_assert!(!inc || st);
    }

    #[test]
    fn knowledge_fits_budget(texts in prop::collection::vec(phrase(), 0..12), budget in 1usize..30) {
        let facts: Vec<FactSentence> = texts.iter().enumerate().map(|(i, t)| {
            FactSentence::from_text(i as u32, Triple::new("a", "r", "b"), t.clone(), &StopWordPolicy::empty())
        }).collect();
        let refs: Vec<&FactSentence> = facts.iter().collect();
        let ctx = assemble_contexts("what is this", &image_text("", "a cat"), &refs, budget);
        prop_assert!(ctx.knowledge_len <= budget || ctx.facts_kept == 0);
        prop_assert_eq!(ctx.facts_kept + ctx.facts_dropped, facts.len());
        // kept facts are a rank prefix
        let expect: Vec<&str> = texts[..ctx.facts_kept].iter().map(String::as_str).collect();
        if !expect.is_empty() {
            prop_assert_eq!(ctx.knowledge, format!("fact: {}", expect.join(". ")));
        }
    }

    #[test]
    fn separate_attention_never_costs_more(b in 0u32..2000, k in 0u32..2000) {
        let joint = attention_pair_count(b, k, AttentionMode::Joint);
        let sep = attention_pair_count(b, k, AttentionMode::Separate);
        prop_assert!(sep <= joint);
        prop_assert_eq!(sep == joint, b == 0 || k == 0);
    }

    #[test]
    fn softmax_is_shift_invariant(xs in prop::collection::vec(-50.0f64..50.0, 1..20), c in -100.0f64..100.0) {
        let a: BTreeMap<FactId, f64> = xs.iter().enumerate().map(|(i, &x)| (FactId(i as u32), x)).collect();
        let b: BTreeMap<FactId, f64> = a.iter().map(|(&f, &x)| (f, x + c)).collect();
        let (da, db) = (target_distribution(&a).unwrap(), target_distribution(&b).unwrap());
        prop_assert!((da.total() - 1.0).abs() < 1e-9);
        for (f, p) in da.iter() {
            prop_assert!((p - db.get(f).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn kl_is_nonnegative(xs in prop::collection::vec((-5.0f64..5.0, prop::collection::vec(-1.0f64..1.0, 3)), 1..10), q in prop::collection::vec(-1.0f64..1.0, 3)) {
        let scores: BTreeMap<FactId, f64> = xs.iter().enumerate().map(|(i, (s, _))| (FactId(i as u32), *s)).collect();
        let embs: BTreeMap<FactId, Vec<f64>> = xs.iter().enumerate().map(|(i, (_, e))| (FactId(i as u32), e.clone())).collect();
        let a = target_distribution(&scores).unwrap();
        let o = retriever_distribution(&q, &embs).unwrap();
        prop_assert!(kl_loss(&a, &o).unwrap() >= -1e-12);
        prop_assert!(kl_loss(&a, &a).unwrap().abs() < 1e-12);
    }

    #[test]
    fn pooling_order(layers in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 12), 1..6), start in 0usize..11, len in 1usize..12, half in any::<bool>()) {
        let end = (start + len).min(12);
        let rec = AttentionRecord::new(layers).unwrap();
        let spans = [FactSpan { fact_id: FactId(0), start, end }];
        let scope = if half { LayerScope::Half } else { LayerScope::Full };
        let get = |agg| {
            let cfg = SignalConfig { layer_scope: scope, token_agg: agg, answer_bias: None };
            aggregate_attention(&rec, &spans, &cfg).unwrap()[&FactId(0)]
        };
        let (max, top, mean) = (get(TokenAgg::Max), get(TokenAgg::TopHalf), get(TokenAgg::Mean));
        prop_assert!(max + 1e-12 >= top && top + 1e-12 >= mean);
    }

    #[test]
    fn index_survives_round_trip(docs in prop::collection::vec(prop::collection::vec(word(), 0..6), 1..30), queries in prop::collection::vec(prop::collection::vec(word(), 1..5), 1..10)) {
        let stems: Vec<(FactId, Vec<Stem>)> = docs.iter().enumerate()
            .map(|(i, d)| (FactId(i as u32 * 3), d.iter().map(|w| Stem::of(w)).collect()))
            .collect();
        let view: Vec<(FactId, &[Stem])> = stems.iter().map(|(i, s)| (*i, s.as_slice())).collect();
        let idx = Bm25Index::from_documents(&view, Bm25Params::default(), Execution::Sequential).unwrap();
        let back = decode(&encode(&idx)).unwrap();
        for q in &queries {
            let q = kgvqa_core::query::StemQuery::new(q.iter().map(|w| Stem::of(w)).collect());
            prop_assert_eq!(idx.retrieve_top_k(&q, 10), back.retrieve_top_k(&q, 10));
        }
    }
}
