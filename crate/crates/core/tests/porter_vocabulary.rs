//! The stemmer against the reference vocabulary and its expected output.

use std::time::Instant;

use kgvqa_core::stemming::porter_stem;

const VOCABULARY: &str = include_str!("../fixtures/porter/voc.txt");
const EXPECTED: &str = include_str!("../fixtures/porter/output.txt");

#[test]
fn agrees_with_reference_word_list() {
    let words: Vec<&str> = VOCABULARY.lines().collect();
    let expected: Vec<&str> = EXPECTED.lines().collect();
    assert_eq!(words.len(), expected.len());
    assert!(words.len() > 23_000);

    let start = Instant::now();
    let mismatches: Vec<String> = words
        .iter()
        .zip(&expected)
        .filter_map(|(w, e)| {
            let got = porter_stem(w);
            (got != *e).then(|| format!("{w}: got {got}, want {e}"))
        })
        .collect();
    let elapsed = start.elapsed();

    assert!(mismatches.is_empty(), "{} mismatches, e.g. {:?}", mismatches.len(), &mismatches[..mismatches.len().min(10)]);
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
}
