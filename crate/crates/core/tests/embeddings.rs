mod common;

use std::collections::HashMap;

use proptest::prelude::*;

use common::*;
use presume::embeddings::{EmbeddingError, EmbeddingTable};

const WORDS: &[&str] = &[
    "wear",
    "jacket",
    "warm",
    "cold",
    "rain",
    "Umbrella",
    "bus",
    "late",
    "zzzunknown",
];

fn table(seed: &[i8]) -> HashMap<String, Vec<f64>> {
    WORDS[..WORDS.len() - 1]
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let v = (0..4)
                .map(|d| f64::from(seed[(i * 4 + d) % seed.len()]) / 16.0)
                .collect();
            (w.to_lowercase(), v)
        })
        .collect()
}

fn phrase() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS.to_vec()), 1..5).prop_map(|w| w.join(" "))
}

#[test]
fn bundled_table_examples() {
    let e = desk_embeddings();
    assert!((e.phrase_closeness("wear jacket", "wear jacket") - 1.0).abs() < 1e-6);
    assert_eq!(e.phrase_closeness("qqqxz", "wear jacket"), 0.0);
    assert!(e.dimension() > 0);
}

#[test]
fn malformed_files_are_rejected() {
    assert!(matches!(EmbeddingTable::parse(""), Err(EmbeddingError::EmptyFile)));
    assert!(matches!(
        EmbeddingTable::parse("a 1 2 3\nb 1 2\n"),
        Err(EmbeddingError::DimensionMismatch {
            line: 2,
            expected: 3,
            found: 2
        })
    ));
    assert!(matches!(
        EmbeddingTable::parse("a 1 x 3\n"),
        Err(EmbeddingError::Parse { line: 1, .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn closeness_properties(
        seed in prop::collection::vec(-16i8..16, 8..40),
        a in phrase(),
        b in phrase(),
        factor in prop::sample::select(vec![0.5, 2.0, 10.0, 1e-3]),
    ) {
        let vectors = table(&seed);
        let oracle = Oracle::new(&vectors);
        let e = EmbeddingTable::from_entries(vectors.clone());
        let ab = e.phrase_closeness(&a, &b);
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert!((ab - oracle.closeness(&a, &b)).abs() < 1e-9);
        prop_assert_eq!(ab, e.phrase_closeness(&b, &a));
        prop_assert!((e.scaled(factor).phrase_closeness(&a, &b) - ab).abs() < 1e-9);
        let aa = e.phrase_closeness(&a, &a);
        if e.embed_phrase(&a).vector.iter().any(|x| *x != 0.0) {
            prop_assert!((aa - 1.0).abs() < 1e-6);
        } else {
            prop_assert_eq!(aa, 0.0);
        }
    }
}
