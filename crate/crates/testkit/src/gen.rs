//! Random instance generators with explicit seeds.

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

/// Small vocabulary so repeated phrases and partial overlaps are common.
const WORDS: &[&str] = &["ab", "a", "b", "ba", "Ab", "c", "x7", "7"];
const SEPARATORS: &[&str] = &[" ", " ", " ", ",", "-", ": ", "'"];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn token_stream(rng: &mut StdRng, n: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        out.push(WORDS.choose(rng).unwrap().to_string());
        if out.len() < n {
            out.push(SEPARATORS.choose(rng).unwrap().to_string());
        }
    }
    out
}

/// A (title, text) pair. Text is at most 60 pieces long and the title at
/// most 12. Most titles are stitched from slices of the text so that a good
/// share of instances decompose; the rest are independent draws.
pub fn decomposition_instance(rng: &mut StdRng) -> (String, String) {
    let text_len = rng.random_range(1..=60);
    let text = token_stream(rng, text_len);
    let title_len = rng.random_range(1..=12);
    let title: Vec<String> = if rng.random_bool(0.7) {
        let mut t = Vec::new();
        while t.len() < title_len {
            let start = rng.random_range(0..text.len());
            let len = rng
                .random_range(1..=4)
                .min(text.len() - start)
                .min(title_len - t.len());
            t.extend_from_slice(&text[start..start + len]);
            if rng.random_bool(0.1) {
                t.push(WORDS.choose(rng).unwrap().to_string());
            }
        }
        t.truncate(title_len);
        t
    } else {
        token_stream(rng, title_len)
    };
    (title.concat(), text.concat())
}

/// Characters across general categories that matter for segmentation:
/// cased and uncased letters, modifier and titlecase letters, several
/// decimal digit scripts, letter-like numbers, marks, joiners, emoji and
/// plain punctuation.
const CHARS: &[char] = &[
    'a', 'Z', 'é', 'ß', 'Ж', 'щ', 'ǅ', 'ʰ', '々', '中', '文', 'ع', 'א', 'ก', '0', '9', '٣', '१',
    '９', 'Ⅻ', '½', '²', '\u{0301}', '\u{200D}', '😀', ' ', '\t', '\n', '-', '\'', '’', '.', ',',
    '_', '$',
];

pub fn unicode_string(rng: &mut StdRng, max_len: usize) -> String {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| *CHARS.choose(rng).unwrap()).collect()
}

/// A random score matrix `rows[evaluator][doc] = (real, generated)`, with
/// each score missing with probability `p_missing`.
pub fn score_rows(
    rng: &mut StdRng,
    evaluators: usize,
    docs: usize,
    p_missing: f64,
) -> Vec<Vec<(Option<u8>, Option<u8>)>> {
    let score = |rng: &mut StdRng| (!rng.random_bool(p_missing)).then(|| rng.random_range(0..=4u8));
    (0..evaluators)
        .map(|_| (0..docs).map(|_| (score(rng), score(rng))).collect())
        .collect()
}
