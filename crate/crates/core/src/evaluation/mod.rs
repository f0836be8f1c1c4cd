//! Answer metrics (exact match, inclusion, stem intersection) with the
//! soft annotator-count accuracy, plus inclusion-based Recall@K for retrieval.

mod answers;
mod recall;

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::query::VqaExample;
use crate::stemming::{normalize_text, Stem, StopWordPolicy};

pub use answers::{AnswerSet, AnswerSetError};
pub use recall::{inc_recall_at_k, RecallReport, RetrievalRow};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("predictions reference unknown example ids: {}", .0.join(", "))]
    UnknownExamples(Vec<String>),
    #[error("duplicate predictions for example ids: {}", .0.join(", "))]
    DuplicatePredictions(Vec<String>),
    #[error("retrieval rows missing for example ids: {}", .0.join(", "))]
    MissingRetrieval(Vec<String>),
    #[error("retrieval rows reference unknown fact ids: {}", .0.join(", "))]
    UnknownFacts(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub example_id: String,
    pub ans: String,
}

/// normalize_text followed by stop-word removal.
pub fn normalize_answer(text: &str, policy: &StopWordPolicy) -> Vec<String> {
    normalize_text(text)
        .into_iter()
        .filter(|t| !policy.removes(t))
        .collect()
}

/// Soft accuracy of the best-scoring matched answer: `min(1, count / 3)`,
/// or 0 when nothing matched.
pub fn answer_score(matched_counts: &[u32]) -> f64 {
    matched_counts
        .iter()
        .map(|&c| (f64::from(c) / 3.0).min(1.0))
        .fold(0.0, f64::max)
}

/// Identical token sequences. Empty sequences never match.
pub fn em_match(ans: &[String], gt: &[String]) -> bool {
    !ans.is_empty() && ans == gt
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    needle.len() <= haystack.len() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Either sequence occurs as a contiguous run of the other.
pub fn inc_match(ans: &[String], gt: &[String]) -> bool {
    if ans.is_empty() || gt.is_empty() {
        return false;
    }
    contains_run(gt, ans) || contains_run(ans, gt)
}

/// The stem sets intersect.
pub fn stem_match(ans: &[String], gt: &[String]) -> bool {
    let a: BTreeSet<Stem> = ans.iter().map(|t| Stem::of(t)).collect();
    gt.iter().any(|t| a.contains(&Stem::of(t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Em,
    Inc,
    Stem,
}

impl Metric {
    pub fn matches(self, ans: &[String], gt: &[String]) -> bool {
        match self {
            Metric::Em => em_match(ans, gt),
            Metric::Inc => inc_match(ans, gt),
            Metric::Stem => stem_match(ans, gt),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleScores {
    pub example_id: String,
    pub em: f64,
    pub inc: f64,
    pub stem: f64,
}

/// Scores one predicted answer against an example's answer set.
pub fn score_answer(ans: &str, answers: &AnswerSet, policy: &StopWordPolicy) -> [f64; 3] {
    let ans = normalize_answer(ans, policy);
    if ans.is_empty() {
        return [0.0; 3];
    }
    let gts: Vec<(Vec<String>, u32)> = answers
        .iter()
        .map(|(a, n)| (normalize_answer(a, policy), n))
        .collect();
    [Metric::Em, Metric::Inc, Metric::Stem].map(|m| {
        let counts: Vec<u32> = gts
            .iter()
            .filter(|(gt, _)| m.matches(&ans, gt))
            .map(|(_, n)| *n)
            .collect();
        answer_score(&counts)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub per_example: Vec<ExampleScores>,
    /// Dataset means, as percentages.
    pub em: f64,
    pub inc: f64,
    pub stem: f64,
}

impl MetricReport {
    pub fn table(&self) -> String {
        format!(
            "metric  score\nEM      {:.2}\nInc     {:.2}\nStem    {:.2}\nn       {}\n",
            self.em,
            self.inc,
            self.stem,
            self.per_example.len()
        )
    }
}

/// Scores every prediction; means are taken over the predictions.
pub fn evaluate_answers(
    predictions: &[Prediction],
    dataset: &[VqaExample],
    policy: &StopWordPolicy,
    exec: Execution,
) -> Result<MetricReport, EvalError> {
    let by_id: HashMap<&str, &VqaExample> =
        dataset.iter().map(|e| (e.example_id.as_str(), e)).collect();

    let unknown: Vec<String> = predictions
        .iter()
        .filter(|p| !by_id.contains_key(p.example_id.as_str()))
        .map(|p| p.example_id.clone())
        .collect();
    if !unknown.is_empty() {
        return Err(EvalError::UnknownExamples(unknown));
    }
    let mut seen = BTreeSet::new();
    let dups: BTreeSet<String> = predictions
        .iter()
        .filter(|p| !seen.insert(p.example_id.as_str()))
        .map(|p| p.example_id.clone())
        .collect();
    if !dups.is_empty() {
        return Err(EvalError::DuplicatePredictions(dups.into_iter().collect()));
    }

    let per_example = exec.map(predictions, |p| {
        let [em, inc, stem] = score_answer(&p.ans, &by_id[p.example_id.as_str()].answers, policy);
        ExampleScores {
            example_id: p.example_id.clone(),
            em,
            inc,
            stem,
        }
    });
    let mean = |f: fn(&ExampleScores) -> f64| {
        if per_example.is_empty() {
            0.0
        } else {
            100.0 * per_example.iter().map(f).sum::<f64>() / per_example.len() as f64
        }
    };
    Ok(MetricReport {
        em: mean(|s| s.em),
        inc: mean(|s| s.inc),
        stem: mean(|s| s.stem),
        per_example,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn stop(words: &[&str]) -> StopWordPolicy {
        StopWordPolicy::new(words, Vec::<&str>::new())
    }

    fn example(id: &str, pairs: &[(&str, u32)]) -> VqaExample {
        VqaExample {
            example_id: id.into(),
            question: "q".into(),
            caption: String::new(),
            ocr_text: String::new(),
            answers: AnswerSet::from_pairs(pairs.iter().map(|(a, n)| (a.to_string(), *n))).unwrap(),
        }
    }

    fn pred(id: &str, ans: &str) -> Prediction {
        Prediction { example_id: id.into(), ans: ans.into() }
    }

    #[test]
    fn answer_normalization() {
        assert_eq!(normalize_answer("in oven", &stop(&["in"])), ["oven"]);
        assert_eq!(normalize_answer("The Dog!", &stop(&["the"])), ["dog"]);
        assert!(normalize_answer("", &stop(&[])).is_empty());
    }

    #[test]
    fn soft_scores() {
        assert_eq!(answer_score(&[3]), 1.0);
        assert_eq!(answer_score(&[1]), 1.0 / 3.0);
        assert_eq!(answer_score(&[1, 4]), 1.0);
        assert_eq!(answer_score(&[]), 0.0);
        assert_eq!(answer_score(&[2, 1]), 2.0 / 3.0);
    }

    #[test]
    fn matchers() {
        assert!(em_match(&toks("oven"), &toks("oven")));
        assert!(!em_match(&toks("red"), &toks("blue")));
        assert!(inc_match(&toks("oven"), &toks("microwave oven")));
        assert!(!inc_match(&toks("a b"), &toks("b a")));
        assert!(!inc_match(&[], &toks("x")));
        assert!(stem_match(&toks("happy"), &toks("happiness")));
        assert!(!stem_match(&toks("dog"), &toks("cat")));
        assert!(stem_match(&toks("running fast"), &toks("run")));
    }

    #[test]
    fn inclusion_is_word_level() {
        assert!(!inc_match(&toks("oven"), &toks("woven")));
    }

    #[test]
    fn oven_case_matches_after_normalization() {
        let ds = [example("1", &[("in oven", 3)])];
        let r = evaluate_answers(&[pred("1", "oven")], &ds, &stop(&["in"]), Execution::Sequential).unwrap();
        assert_eq!((r.em, r.inc, r.stem), (100.0, 100.0, 100.0));
    }

    #[test]
    fn exact_match_all_annotators() {
        let ds = [example("1", &[("dog", 10)])];
        let r = evaluate_answers(&[pred("1", "Dog.")], &ds, &stop(&[]), Execution::Sequential).unwrap();
        assert_eq!((r.em, r.inc, r.stem), (100.0, 100.0, 100.0));
    }

    #[test]
    fn two_examples_one_miss() {
        let ds = [example("1", &[("dog", 10)]), example("2", &[("cat", 10)])];
        let preds = [pred("1", "dog"), pred("2", "bird")];
        let r = evaluate_answers(&preds, &ds, &stop(&[]), Execution::Parallel).unwrap();
        assert_eq!((r.em, r.inc, r.stem), (50.0, 50.0, 50.0));
        assert!(r.table().contains("EM      50.00"));
    }

    #[test]
    fn higher_count_answer_wins() {
        let ds = [example("1", &[("red", 1), ("dark red", 4)])];
        let r = evaluate_answers(&[pred("1", "red")], &ds, &stop(&[]), Execution::Sequential).unwrap();
        assert_eq!(r.per_example[0].em, 1.0 / 3.0);
        assert_eq!(r.per_example[0].inc, 1.0);
    }

    #[test]
    fn stop_word_only_prediction_scores_zero() {
        let ds = [example("1", &[("the", 10)])];
        let r = evaluate_answers(&[pred("1", "the")], &ds, &stop(&["the"]), Execution::Sequential).unwrap();
        assert_eq!(r.stem, 0.0);
    }

    #[test]
    fn unknown_and_duplicate_predictions() {
        let ds = [example("1", &[("dog", 10)])];
        let p = StopWordPolicy::empty();
        assert_eq!(
            evaluate_answers(&[pred("9", "x"), pred("8", "y")], &ds, &p, Execution::Sequential),
            Err(EvalError::UnknownExamples(vec!["9".into(), "8".into()]))
        );
        assert!(matches!(
            evaluate_answers(&[pred("1", "x"), pred("1", "y")], &ds, &p, Execution::Sequential),
            Err(EvalError::DuplicatePredictions(_))
        ));
    }
}
