use std::fs::File;
use std::io::BufReader;

use chrono::NaiveDate;
use headqa_core::corpus::load_corpus_file;
use headqa_core::decompose::{decompose_document, SpanOrigin};
use headqa_core::dictionary::{
    build_dictionary, growth_curve, is_lowercase_word, DictEntry, Dictionary,
};
use headqa_core::{Document, Execution};
use headqa_testkit::{decompose as reference, fixtures};
use proptest::prelude::*;

fn doc(id: &str, title: &str, text: &str) -> Document {
    Document {
        doc_id: id.into(),
        source: "example.com".into(),
        published_at: NaiveDate::from_ymd_opt(2018, 12, 3).unwrap(),
        title: title.into(),
        text: text.into(),
    }
}

fn words(d: &Dictionary) -> Vec<(&str, u64)> {
    d.entries()
        .iter()
        .map(|e| (e.word.as_str(), e.count))
        .collect()
}

fn dict6() -> Vec<Document> {
    load_corpus_file(fixtures::path("dict6.jsonl"))
        .unwrap()
        .documents
}

#[test]
fn six_document_fixture_matches_hand_computed_tsv() {
    let d = build_dictionary(&dict6(), 3, 10, Execution::default()).unwrap();
    let mut out = Vec::new();
    d.write_tsv(&mut out).unwrap();
    let expected = std::fs::read_to_string(fixtures::path("dict6.expected.tsv")).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), expected);
    let tsv = Dictionary::read_tsv(BufReader::new(
        File::open(fixtures::path("dict6.expected.tsv")).unwrap(),
    ))
    .unwrap();
    assert_eq!(tsv, d);
}

// Raw counts of the fixture: says 4, Says 2, seeks 2, Seeks 1, us 1, US 2,
// head/of/with 1 and several cased-only words. Each threshold below was
// worked out by hand from those counts.
#[test]
fn case_merge_threshold_on_six_document_fixture() {
    let docs = dict6();
    let at = |t| build_dictionary(&docs, t, 10, Execution::Sequential).unwrap();
    assert_eq!(
        words(&at(5)),
        [
            ("says", 4),
            ("seeks", 2),
            ("head", 1),
            ("of", 1),
            ("us", 1),
            ("with", 1)
        ]
    );
    assert_eq!(
        words(&at(3)),
        [
            ("says", 6),
            ("seeks", 2),
            ("head", 1),
            ("of", 1),
            ("us", 1),
            ("with", 1)
        ]
    );
    assert_eq!(
        words(&at(2)),
        [
            ("says", 6),
            ("seeks", 3),
            ("head", 1),
            ("of", 1),
            ("us", 1),
            ("with", 1)
        ]
    );
    assert_eq!(
        words(&at(1)),
        [
            ("says", 6),
            ("seeks", 3),
            ("us", 3),
            ("head", 1),
            ("of", 1),
            ("with", 1)
        ]
    );
    assert_eq!(
        words(&build_dictionary(&docs, 1, 2, Execution::Sequential).unwrap()),
        [("says", 6), ("seeks", 3)]
    );
}

#[test]
fn build_is_deterministic_across_execution_modes() {
    let docs = load_corpus_file(fixtures::path("corpus.jsonl"))
        .unwrap()
        .documents;
    let a = build_dictionary(&docs, 100, 100, Execution::Sequential).unwrap();
    let b = build_dictionary(&docs, 100, 100, Execution::default()).unwrap();
    assert_eq!(a, b);
    assert!(a.entries().iter().all(|e| is_lowercase_word(&e.word)));
}

/// Built so that rank 1 rescues exactly two more documents and rank 2
/// three more.
fn rescue_fixture() -> (Vec<Document>, Dictionary) {
    let docs = vec![
        doc("plain", "The vote is close", "The vote is close tonight."),
        doc(
            "a1",
            "Mayor says vote is close",
            "Mayor Ruiz said the vote is close.",
        ),
        doc("a2", "says court", "The court met."),
        doc(
            "b1",
            "Judge seeks delay",
            "The judge wants a delay. Judge Costa spoke.",
        ),
        doc("b2", "Council seeks funds", "Council members want funds."),
        doc(
            "b3",
            "Union seeks pay, says leader",
            "The Union wants more pay, its leader said.",
        ),
        doc("none", "Weekly Roundup", "Nothing here."),
    ];
    let dict = Dictionary::from_entries(vec![
        DictEntry {
            word: "says".into(),
            count: 10,
        },
        DictEntry {
            word: "seeks".into(),
            count: 5,
        },
        DictEntry {
            word: "quietly".into(),
            count: 1,
        },
    ])
    .unwrap();
    (docs, dict)
}

#[test]
fn rescue_fixture_exact_counts() {
    let (docs, dict) = rescue_fixture();
    let curve = growth_curve(&docs, &dict, &[0, 1, 2, 3], Execution::default()).unwrap();
    let got: Vec<_> = curve
        .iter()
        .map(|p| {
            (
                p.dict_size,
                p.decomposable_docs,
                p.samples_from_dict,
                p.decomposable_ratio_vs_no_dict,
            )
        })
        .collect();
    assert_eq!(
        got,
        [
            (0, 1, 0, Some(1.0)),
            (1, 3, 2, Some(3.0)),
            (2, 6, 6, Some(6.0)),
            (3, 6, 6, Some(6.0))
        ]
    );
    // Text spans per document: plain 1, a1 2, a2 1, b1 2, b2 2, b3 3, plus
    // one termination sample per decomposable document.
    let text: Vec<_> = curve.iter().map(|p| p.samples_from_text).collect();
    assert_eq!(text, [1 + 1, 4 + 3, 11 + 6, 11 + 6]);
}

/// Growth computed the slow way: rerun the decomposer with each prefix.
fn rerun(docs: &[Document], dict: &Dictionary, k: usize) -> (usize, usize, usize) {
    let prefix = dict.prefix(k);
    let mut decomposable = 0;
    let mut from_dict = 0;
    let mut from_text = 0;
    for d in docs {
        if let Some(dec) = decompose_document(d, &prefix) {
            decomposable += 1;
            let n_dict = dec
                .spans
                .iter()
                .filter(|s| s.origin == SpanOrigin::DictionaryWord)
                .count();
            from_dict += n_dict;
            from_text += dec.spans.len() - n_dict + 1;
        }
    }
    (decomposable, from_dict, from_text)
}

#[test]
fn growth_curve_matches_per_size_reruns() {
    let (docs, dict) = rescue_fixture();
    let sizes = [0, 1, 2, 3];
    for p in growth_curve(&docs, &dict, &sizes, Execution::Sequential).unwrap() {
        assert_eq!(
            rerun(&docs, &dict, p.dict_size),
            (
                p.decomposable_docs,
                p.samples_from_dict,
                p.samples_from_text
            )
        );
    }
}

#[test]
fn fixture_corpus_growth_is_monotone_and_frozen() {
    let docs = load_corpus_file(fixtures::path("corpus.jsonl"))
        .unwrap()
        .documents;
    let dict = build_dictionary(&docs, 100, 100, Execution::default()).unwrap();
    assert_eq!(dict.len(), 68);
    assert_eq!(fixtures::expected("corpus_growth", "dict_len"), 68);
    let sizes = [0, 1, 5, 10, 50];
    let curve = growth_curve(&docs, &dict, &sizes, Execution::default()).unwrap();
    let got: Vec<_> = curve
        .iter()
        .map(|p| (p.decomposable_docs, p.samples_from_dict))
        .collect();
    assert_eq!(got, [(150, 0), (162, 12), (195, 45), (210, 60), (210, 60)]);
    assert_eq!(curve[0].decomposable_ratio_vs_no_dict, Some(1.0));
    for w in curve.windows(2) {
        assert!(w[0].decomposable_docs <= w[1].decomposable_docs);
        assert!(w[0].samples_from_dict <= w[1].samples_from_dict);
    }
    // independent route: reference decomposer with the same prefixes
    let lexicon: Vec<&str> = dict.entries().iter().map(|e| e.word.as_str()).collect();
    for p in &curve {
        let n = docs
            .iter()
            .filter(|d| reference::decompose(&d.title, &d.text, &lexicon[..p.dict_size]).is_some())
            .count();
        assert_eq!(n, p.decomposable_docs, "size {}", p.dict_size);
    }
}

#[test]
fn growth_rejects_bad_sizes() {
    let (docs, dict) = rescue_fixture();
    assert!(growth_curve(&docs, &dict, &[2, 1], Execution::Sequential).is_err());
    assert!(growth_curve(&docs, &dict, &[4], Execution::Sequential).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn growth_is_monotone_on_random_corpora(seed in any::<u64>()) {
        let mut rng = headqa_testkit::gen::rng(seed);
        let docs: Vec<Document> = (0..30)
            .map(|i| {
                let (title, text) = headqa_testkit::gen::decomposition_instance(&mut rng);
                let text = if text.is_empty() { "x".into() } else { text };
                let title = if title.is_empty() { "x".into() } else { title };
                doc(&format!("r{i}"), &title, &text)
            })
            .collect();
        if let Ok(dict) = build_dictionary(&docs, 1, 20, Execution::Sequential) {
            let sizes: Vec<usize> = (0..=dict.len()).collect();
            let curve = growth_curve(&docs, &dict, &sizes, Execution::Sequential).unwrap();
            for w in curve.windows(2) {
                prop_assert!(w[0].decomposable_docs <= w[1].decomposable_docs);
                prop_assert!(w[0].samples_from_dict <= w[1].samples_from_dict);
            }
            for p in &curve {
                prop_assert_eq!(rerun(&docs, &dict, p.dict_size), (p.decomposable_docs, p.samples_from_dict, p.samples_from_text));
            }
        }
    }
}
