use std::collections::HashSet;
use std::time::Instant;

use headqa_core::decompose::{decompose, decompose_with_dictionary, Decomposition, SpanOrigin};
use headqa_core::segment::segment;
use headqa_testkit::decompose::{self as reference, Piece};
use headqa_testkit::gen;
use proptest::prelude::*;

fn as_pieces(d: &Decomposition) -> Vec<Piece> {
    d.spans
        .iter()
        .map(|s| Piece {
            text: s.matched_text.clone(),
            start: match s.origin {
                SpanOrigin::TextSpan => Some(s.text_char_range.start),
                SpanOrigin::DictionaryWord => None,
            },
        })
        .collect()
}

#[test]
fn matches_brute_force_on_random_instances() {
    let started = Instant::now();
    let mut rng = gen::rng(20181210);
    let mut decomposable = 0;
    for i in 0..10_000 {
        let (title, text) = gen::decomposition_instance(&mut rng);
        let got = decompose(&segment(&title), &segment(&text)).map(|d| as_pieces(&d));
        let want = reference::decompose(&title, &text, &[]);
        assert_eq!(got, want, "instance {i}: title {title:?} text {text:?}");
        decomposable += want.is_some() as usize;
    }
    // the generator should exercise both outcomes
    assert!(
        decomposable > 2_000 && decomposable < 9_000,
        "{decomposable}"
    );
    assert!(started.elapsed().as_secs() < 60);
}

#[test]
fn matches_brute_force_with_dictionary() {
    let mut rng = gen::rng(7);
    let words = ["ab", "c", "ba"];
    let lexicon: HashSet<String> = words.iter().map(|w| w.to_string()).collect();
    for i in 0..3_000 {
        let (title, text) = gen::decomposition_instance(&mut rng);
        let got = decompose_with_dictionary(&segment(&title), &segment(&text), &lexicon)
            .map(|d| as_pieces(&d));
        let want = reference::decompose(&title, &text, &words);
        assert_eq!(got, want, "instance {i}: title {title:?} text {text:?}");
    }
}

#[test]
fn fixture_titles_agree_with_reference() {
    for name in ["corpus.jsonl", "synthetic40.jsonl"] {
        for (title, text) in headqa_testkit::fixtures::titles_and_texts(name) {
            let got = decompose(&segment(&title), &segment(&text)).map(|d| as_pieces(&d));
            assert_eq!(got, reference::decompose(&title, &text, &[]), "{title:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    // A title made of one contiguous token-aligned slice of the text is a
    // single span at the slice's first occurrence.
    #[test]
    fn whole_slice_is_one_span(words in prop::collection::vec("[ab]{1,2}", 1..12), from in 0usize..12, len in 1usize..6) {
        let text = words.join(" ");
        let toks = segment(&text);
        let from = from.min(toks.len() - 1);
        let to = (from + len).min(toks.len());
        let title = toks.slice_text(from..to);
        let d = decompose(&segment(&title), &toks).expect("slice decomposes");
        prop_assert_eq!(d.spans.len(), 1);
        let first = reference::decompose(&title, &text, &[]).unwrap();
        prop_assert_eq!(Some(d.spans[0].text_char_range.start), first[0].start);
    }

    // Concatenating the spans gives back the title, and each span is the
    // text substring it points at.
    #[test]
    fn spans_tile_the_title(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let (title, text) = gen::decomposition_instance(&mut rng);
        if let Some(d) = decompose(&segment(&title), &segment(&text)) {
            prop_assert_eq!(d.span_texts().collect::<String>(), title);
            let chars: Vec<char> = text.chars().collect();
            for s in &d.spans {
                let sub: String = chars[s.text_char_range.clone()].iter().collect();
                prop_assert_eq!(&sub, &s.matched_text);
            }
        }
    }

    // No span can be extended by the next title token: the greedy match is
    // maximal at every step.
    #[test]
    fn spans_are_maximal(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let (title, text) = gen::decomposition_instance(&mut rng);
        let tt = segment(&title);
        let xt = segment(&text);
        if let Some(d) = decompose(&tt, &xt) {
            for s in &d.spans {
                let end = s.title_token_range.end;
                if end < tt.len() {
                    let longer = tt.slice_text(s.title_token_range.start..end + 1);
                    let found = reference::decompose(&longer, &text, &[])
                        .is_some_and(|p| p.len() == 1);
                    prop_assert!(!found, "span {:?} could extend to {:?}", s.matched_text, longer);
                }
            }
        }
    }
}
