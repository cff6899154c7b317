//! Greedy longest-match-first decomposition of a title into spans of its
//! document text.
//!
//! At each step the longest title-prefix slice that occurs in the text is
//! taken, where both the slice and its text occurrence are whole token
//! sequences. Among equally long matches the one starting earliest in the
//! text wins. A step without any match makes the title non-decomposable,
//! unless a dictionary is supplied and the single title word at that
//! position is in it; then that word alone is consumed from the dictionary.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::exec::Execution;
use crate::segment::{segment, TokenKind, TokenizedText};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanOrigin {
    TextSpan,
    DictionaryWord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanMatch {
    /// Half-open token range into the title.
    pub title_token_range: Range<usize>,
    /// Half-open character range into the document text; empty for
    /// dictionary words.
    pub text_char_range: Range<usize>,
    pub matched_text: String,
    pub origin: SpanOrigin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub title: String,
    pub spans: Vec<SpanMatch>,
    pub dictionary_hits: usize,
}

impl Decomposition {
    pub fn span_texts(&self) -> impl Iterator<Item = &str> {
        self.spans.iter().map(|s| s.matched_text.as_str())
    }

    pub fn is_text_only(&self) -> bool {
        self.dictionary_hits == 0
    }
}

/// Words a decomposition may draw from when the text has no match.
pub trait RescueLexicon {
    /// `word` is already lowercased.
    fn contains_word(&self, word: &str) -> bool;
}

impl<L: RescueLexicon + ?Sized> RescueLexicon for &L {
    fn contains_word(&self, word: &str) -> bool {
        (**self).contains_word(word)
    }
}

impl RescueLexicon for std::collections::HashSet<String> {
    fn contains_word(&self, word: &str) -> bool {
        self.contains(word)
    }
}

/// The empty lexicon: plain decomposition.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoLexicon;

impl RescueLexicon for NoLexicon {
    fn contains_word(&self, _: &str) -> bool {
        false
    }
}

/// Token-position index over a document text, reusable across titles and
/// lexicons.
pub struct TextIndex<'t> {
    text: &'t TokenizedText,
    positions: HashMap<&'t str, Vec<usize>>,
}

impl<'t> TextIndex<'t> {
    pub fn new(text: &'t TokenizedText) -> Self {
        let mut positions: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, tok) in text.tokens().iter().enumerate() {
            positions.entry(tok.text.as_str()).or_default().push(i);
        }
        TextIndex { text, positions }
    }

    pub fn text(&self) -> &TokenizedText {
        self.text
    }

    /// Longest match of `title[q..]`, as `(token_len, text_start_token)`,
    /// preferring the smallest text start among equal lengths.
    pub fn longest_prefix_match(&self, title: &TokenizedText, q: usize) -> Option<(usize, usize)> {
        let title_toks = title.tokens();
        let text_toks = self.text.tokens();
        let starts = self.positions.get(title_toks[q].text.as_str())?;
        let remaining = title_toks.len() - q;
        let mut best: Option<(usize, usize)> = None;
        for &m in starts {
            let max_len = remaining.min(text_toks.len() - m);
            if best.is_some_and(|(len, _)| len >= max_len) {
                continue;
            }
            let len = 1 + title_toks[q + 1..q + max_len]
                .iter()
                .zip(&text_toks[m + 1..m + max_len])
                .take_while(|(a, b)| a.text == b.text)
                .count();
            if best.is_none_or(|(l, _)| len > l) {
                best = Some((len, m));
                if len == remaining {
                    break;
                }
            }
        }
        best
    }

    pub fn decompose(&self, title: &TokenizedText) -> Option<Decomposition> {
        self.decompose_with(title, &NoLexicon)
    }

    pub fn decompose_with<L: RescueLexicon + ?Sized>(
        &self,
        title: &TokenizedText,
        lexicon: &L,
    ) -> Option<Decomposition> {
        if title.is_empty() {
            return None;
        }
        let title_toks = title.tokens();
        let text_toks = self.text.tokens();
        let mut spans = Vec::new();
        let mut dictionary_hits = 0;
        let mut q = 0;
        while q < title_toks.len() {
            if let Some((len, m)) = self.longest_prefix_match(title, q) {
                let range = q..q + len;
                spans.push(SpanMatch {
                    matched_text: title.slice_text(range.clone()),
                    title_token_range: range,
                    text_char_range: text_toks[m].char_offset..text_toks[m + len - 1].char_end(),
                    origin: SpanOrigin::TextSpan,
                });
                q += len;
                continue;
            }
            let tok = &title_toks[q];
            if tok.kind != TokenKind::LetterRun || !lexicon.contains_word(&tok.text.to_lowercase())
            {
                return None;
            }
            let at = self.text.char_len();
            spans.push(SpanMatch {
                title_token_range: q..q + 1,
                text_char_range: at..at,
                matched_text: tok.text.clone(),
                origin: SpanOrigin::DictionaryWord,
            });
            dictionary_hits += 1;
            q += 1;
        }
        Some(Decomposition {
            title: title.source().to_owned(),
            spans,
            dictionary_hits,
        })
    }
}

/// Plain decomposition; `None` when the title is not decomposable.
pub fn decompose(title: &TokenizedText, text: &TokenizedText) -> Option<Decomposition> {
    TextIndex::new(text).decompose(title)
}

pub fn decompose_with_dictionary<L: RescueLexicon + ?Sized>(
    title: &TokenizedText,
    text: &TokenizedText,
    lexicon: &L,
) -> Option<Decomposition> {
    TextIndex::new(text).decompose_with(title, lexicon)
}

/// Segments and decomposes a document's title against its text.
pub fn decompose_document<L: RescueLexicon + ?Sized>(
    doc: &Document,
    lexicon: &L,
) -> Option<Decomposition> {
    let title = segment(&doc.title);
    let text = segment(&doc.text);
    TextIndex::new(&text).decompose_with(&title, lexicon)
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RateError {
    #[error("decomposability rate is undefined for an empty corpus")]
    EmptyCorpus,
}

/// Fraction of documents whose title decomposes.
pub fn decomposability_rate<L: RescueLexicon + Sync + ?Sized>(
    docs: &[Document],
    lexicon: &L,
    exec: Execution,
) -> Result<f64, RateError> {
    if docs.is_empty() {
        return Err(RateError::EmptyCorpus);
    }
    let hits = exec
        .map(docs, |d| decompose_document(d, lexicon).is_some())
        .into_iter()
        .filter(|&ok| ok)
        .count();
    Ok(hits as f64 / docs.len() as f64)
}
